use std::collections::HashMap;
use std::path::Path;

use serde::Deserialize;

use crate::error::{BackendError, IoError, RemoteError};
use crate::remote::{render, HttpModelClient, RemoteConfig, CLOSED_IE_PROMPT, OPEN_IE_PROMPT};
use crate::text::normalize_text;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtractorKind {
    RemoteLlm,
    Scripted,
}

/// A scored triplet as emitted by backends that know their own confidence.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ScoredTriple {
    pub s: String,
    pub r: String,
    pub o: String,
    #[serde(default)]
    pub confidence: Option<f64>,
}

/// Raw open-extraction output, before line parsing and deduplication.
#[derive(Debug, Clone, PartialEq)]
pub enum OpenReply {
    /// Model text, one `subject | predicate | object` per line.
    Text(String),
    Triples(Vec<ScoredTriple>),
}

/// Source of triplets and relation labels.
///
/// Backends return raw replies; parsing, label matching and deduplication
/// happen in [`super::extract_open`] and [`super::classify_relation`] so every
/// backend obeys the same rules.
pub trait ExtractorBackend: Send + Sync {
    fn kind(&self) -> ExtractorKind;

    fn extract_open(&self, text: &str) -> Result<OpenReply, BackendError>;

    /// Raw reply to the relation-classification prompt.
    fn classify(&self, text: &str, e1: &str, e2: &str, labels: &[String]) -> Result<String, BackendError>;
}

/// Label list as substituted into the classification prompt.
pub fn format_labels(labels: &[String]) -> String {
    labels.join(", ")
}

#[derive(Debug, Clone)]
pub struct RemoteExtractor {
    client: HttpModelClient,
}

impl RemoteExtractor {
    pub fn new(config: RemoteConfig) -> Result<Self, RemoteError> {
        Ok(RemoteExtractor {
            client: HttpModelClient::new(config)?,
        })
    }
}

impl ExtractorBackend for RemoteExtractor {
    fn kind(&self) -> ExtractorKind {
        ExtractorKind::RemoteLlm
    }

    fn extract_open(&self, text: &str) -> Result<OpenReply, BackendError> {
        let prompt = render(OPEN_IE_PROMPT, &[("text", text)]);
        Ok(OpenReply::Text(self.client.complete(&prompt)?))
    }

    fn classify(&self, text: &str, e1: &str, e2: &str, labels: &[String]) -> Result<String, BackendError> {
        let labels = format_labels(labels);
        let prompt = render(
            CLOSED_IE_PROMPT,
            &[("text", text), ("e1", e1), ("e2", e2), ("labels", &labels)],
        );
        Ok(self.client.complete(&prompt)?)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum ScriptedOpen {
    Text(String),
    Triples(Vec<ScoredTriple>),
}

#[derive(Debug, Clone, Default, Deserialize)]
struct ScriptFile {
    #[serde(default)]
    open: HashMap<String, ScriptedOpen>,
    #[serde(default)]
    closed: HashMap<String, String>,
}

/// Replays canned replies keyed by normalized input text.
///
/// Transcript format:
/// `{"open": {"<text>": "<reply>" | [{"s":..,"r":..,"o":..,"confidence":..}]},
///   "closed": {"<text>": "<reply>"}}`.
#[derive(Debug, Clone, Default)]
pub struct ScriptedExtractor {
    open: HashMap<String, OpenReply>,
    closed: HashMap<String, String>,
    /// Answer unknown inputs with an empty reply instead of failing.
    lenient: bool,
}

impl ScriptedExtractor {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn lenient(mut self, lenient: bool) -> Self {
        self.lenient = lenient;
        self
    }

    pub fn open_reply(mut self, text: &str, reply: impl Into<String>) -> Self {
        self.open.insert(normalize_text(text), OpenReply::Text(reply.into()));
        self
    }

    pub fn open_triples<I>(mut self, text: &str, triples: I) -> Self
    where
        I: IntoIterator<Item = (&'static str, &'static str, &'static str, f64)>,
    {
        let triples = triples
            .into_iter()
            .map(|(s, r, o, c)| ScoredTriple {
                s: s.into(),
                r: r.into(),
                o: o.into(),
                confidence: Some(c),
            })
            .collect();
        self.open.insert(normalize_text(text), OpenReply::Triples(triples));
        self
    }

    pub fn closed_reply(mut self, text: &str, reply: impl Into<String>) -> Self {
        self.closed.insert(normalize_text(text), reply.into());
        self
    }

    pub fn from_json(json: &str) -> Result<Self, serde_json::Error> {
        let file: ScriptFile = serde_json::from_str(json)?;
        Ok(ScriptedExtractor {
            open: file
                .open
                .into_iter()
                .map(|(k, v)| {
                    let reply = match v {
                        ScriptedOpen::Text(t) => OpenReply::Text(t),
                        ScriptedOpen::Triples(t) => OpenReply::Triples(t),
                    };
                    (normalize_text(&k), reply)
                })
                .collect(),
            closed: file.closed.into_iter().map(|(k, v)| (normalize_text(&k), v)).collect(),
            lenient: false,
        })
    }

    pub fn from_file(path: &Path) -> Result<Self, IoError> {
        let text = crate::io::read_to_string(path)?;
        Self::from_json(&text).map_err(|source| IoError::Json {
            path: path.display().to_string(),
            line: source.line(),
            source,
        })
    }
}

impl ExtractorBackend for ScriptedExtractor {
    fn kind(&self) -> ExtractorKind {
        ExtractorKind::Scripted
    }

    fn extract_open(&self, text: &str) -> Result<OpenReply, BackendError> {
        let key = normalize_text(text);
        match self.open.get(&key) {
            Some(r) => Ok(r.clone()),
            None if self.lenient => Ok(OpenReply::Text(String::new())),
            None => Err(BackendError::MissingScript(key)),
        }
    }

    fn classify(&self, text: &str, _e1: &str, _e2: &str, _labels: &[String]) -> Result<String, BackendError> {
        let key = normalize_text(text);
        match self.closed.get(&key) {
            Some(r) => Ok(r.clone()),
            None if self.lenient => Ok(String::new()),
            None => Err(BackendError::MissingScript(key)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::remote::testserver::{chat, serve};

    #[test]
    fn scripted_from_json() {
        let b = ScriptedExtractor::from_json(
            r#"{"open": {"t1": "a | b | c", "t2": [{"s":"x","r":"y","o":"z","confidence":0.3}]},
                "closed": {"t1": "hasLocation"}}"#,
        )
        .unwrap();
        assert_eq!(b.extract_open(" t1").unwrap(), OpenReply::Text("a | b | c".into()));
        match b.extract_open("t2").unwrap() {
            OpenReply::Triples(t) => assert_eq!(t[0].confidence, Some(0.3)),
            other => panic!("{other:?}"),
        }
        assert_eq!(b.classify("t1", "", "", &[]).unwrap(), "hasLocation");
        assert!(b.classify("zz", "", "", &[]).is_err());
        assert_eq!(b.lenient(true).classify("zz", "", "", &[]).unwrap(), "");
    }

    #[test]
    fn remote_prompts() {
        let server = serve(vec![chat("x | y | z"), chat("bornIn")]);
        let b = RemoteExtractor::new(RemoteConfig {
            backoff_ms: 1,
            ..RemoteConfig::new(&server.url, "m")
        })
        .unwrap();
        assert_eq!(b.extract_open("Some sentence.").unwrap(), OpenReply::Text("x | y | z".into()));
        let labels = vec!["hasLocation".to_owned(), "bornIn".to_owned()];
        assert_eq!(b.classify("T", "E1", "E2", &labels).unwrap(), "bornIn");
        let reqs = server.requests.lock().unwrap();
        let open: serde_json::Value = serde_json::from_str(&reqs[0]).unwrap();
        assert!(open["messages"][0]["content"].as_str().unwrap().ends_with("Sentence: Some sentence."));
        let closed: serde_json::Value = serde_json::from_str(&reqs[1]).unwrap();
        let p = closed["messages"][0]["content"].as_str().unwrap();
        assert!(p.contains("Text: T\nEntity 1: E1\nEntity 2: E2\n"));
        assert!(p.contains("this list: hasLocation, bornIn\n"));
    }
}
