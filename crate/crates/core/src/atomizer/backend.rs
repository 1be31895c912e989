use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use log::warn;

use crate::error::{BackendError, RemoteError};
use crate::remote::{render, strip_fence, HttpModelClient, RemoteConfig, PROPOSITIONER_PROMPT};
use crate::text::normalize_text;

use super::rules::rule_based_split;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendKind {
    Remote,
    RuleBased,
    Scripted,
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BackendKind::Remote => "remote",
            BackendKind::RuleBased => "rules",
            BackendKind::Scripted => "scripted",
        })
    }
}

/// A function from text to candidate atomic propositions.
///
/// Implementations must not return strings that are empty after
/// normalization.
pub trait Propositioner: Send + Sync {
    fn kind(&self) -> BackendKind;

    fn propose(&self, text: &str) -> Result<Vec<String>, BackendError>;

    /// Variant used for the root text of a document, where a title may give
    /// context. Defaults to ignoring the title.
    fn propose_titled(&self, text: &str, title: &str) -> Result<Vec<String>, BackendError> {
        let _ = title;
        self.propose(text)
    }
}

fn drop_empty(items: Vec<String>) -> Vec<String> {
    items
        .into_iter()
        .filter(|s| !normalize_text(s).is_empty())
        .collect()
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RuleBasedPropositioner;

impl Propositioner for RuleBasedPropositioner {
    fn kind(&self) -> BackendKind {
        BackendKind::RuleBased
    }

    fn propose(&self, text: &str) -> Result<Vec<String>, BackendError> {
        Ok(drop_empty(rule_based_split(text)))
    }
}

/// What a scripted backend does with input missing from its transcript.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fallback {
    #[default]
    Error,
    /// Treat the input as a fixed point.
    Identity,
}

/// Replays a transcript mapping normalized inputs to output lists.
#[derive(Debug, Clone, Default)]
pub struct ScriptedPropositioner {
    script: HashMap<String, Vec<String>>,
    fallback: Fallback,
}

impl ScriptedPropositioner {
    pub fn new<I, K, V>(entries: I) -> Self
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: IntoIterator,
        V::Item: Into<String>,
    {
        let script = entries
            .into_iter()
            .map(|(k, v)| (normalize_text(k.as_ref()), v.into_iter().map(Into::into).collect()))
            .collect();
        ScriptedPropositioner {
            script,
            fallback: Fallback::Error,
        }
    }

    pub fn with_fallback(mut self, fallback: Fallback) -> Self {
        self.fallback = fallback;
        self
    }

    /// Loads a JSON object `{"input text": ["output", ...], ...}`.
    pub fn from_json(json: &str) -> Result<Self, serde_json::Error> {
        let map: HashMap<String, Vec<String>> = serde_json::from_str(json)?;
        Ok(Self::new(map))
    }

    pub fn from_file(path: &Path) -> Result<Self, crate::error::IoError> {
        let text = crate::io::read_to_string(path)?;
        Self::from_json(&text).map_err(|source| crate::error::IoError::Json {
            path: path.display().to_string(),
            line: source.line(),
            source,
        })
    }

    pub fn len(&self) -> usize {
        self.script.len()
    }

    pub fn is_empty(&self) -> bool {
        self.script.is_empty()
    }
}

impl Propositioner for ScriptedPropositioner {
    fn kind(&self) -> BackendKind {
        BackendKind::Scripted
    }

    fn propose(&self, text: &str) -> Result<Vec<String>, BackendError> {
        let key = normalize_text(text);
        match (self.script.get(&key), self.fallback) {
            (Some(out), _) => Ok(drop_empty(out.clone())),
            (None, Fallback::Identity) => Ok(vec![key]),
            (None, Fallback::Error) => Err(BackendError::MissingScript(key)),
        }
    }
}

/// Wraps a closure; handy for tests and benchmarks.
pub struct FnPropositioner<F> {
    f: F,
}

impl<F> FnPropositioner<F>
where
    F: Fn(&str) -> Vec<String> + Send + Sync,
{
    pub fn new(f: F) -> Self {
        FnPropositioner { f }
    }
}

impl<F> Propositioner for FnPropositioner<F>
where
    F: Fn(&str) -> Vec<String> + Send + Sync,
{
    fn kind(&self) -> BackendKind {
        BackendKind::Scripted
    }

    fn propose(&self, text: &str) -> Result<Vec<String>, BackendError> {
        Ok(drop_empty((self.f)(text)))
    }
}

/// Always answers `[text]`.
pub fn identity_propositioner() -> FnPropositioner<impl Fn(&str) -> Vec<String> + Send + Sync> {
    FnPropositioner::new(|t: &str| vec![t.to_owned()])
}

const REPROMPT_SUFFIX: &str = "Output ONLY the JSON array.";

/// Chat-completion propositioner using the decomposition prompt.
#[derive(Debug, Clone)]
pub struct RemotePropositioner {
    client: HttpModelClient,
}

impl RemotePropositioner {
    pub fn new(config: RemoteConfig) -> Result<Self, RemoteError> {
        Ok(RemotePropositioner {
            client: HttpModelClient::new(config)?,
        })
    }
}

/// Parses model output as a JSON array of strings, tolerating a code fence or
/// chatter around the array.
pub fn parse_string_array(raw: &str) -> Option<Vec<String>> {
    let body = strip_fence(raw);
    if let Ok(v) = serde_json::from_str::<Vec<String>>(body) {
        return Some(v);
    }
    let (start, end) = (body.find('[')?, body.rfind(']')?);
    if start >= end {
        return None;
    }
    serde_json::from_str::<Vec<String>>(&body[start..=end]).ok()
}

/// Sends one propositioner request for `content` and parses the reply.
///
/// A malformed reply triggers one re-prompt asking for the bare array; a
/// second malformed reply is an error carrying the raw output.
pub fn remote_propose(
    client: &HttpModelClient,
    content: &str,
    title: &str,
) -> Result<Vec<String>, BackendError> {
    if normalize_text(content).is_empty() {
        return Err(BackendError::InvalidInput("empty content".into()));
    }
    let prompt = render(PROPOSITIONER_PROMPT, &[("title", title), ("content", content)]);
    let raw = client.complete(&prompt)?;
    if let Some(list) = parse_string_array(&raw) {
        return Ok(drop_empty(list));
    }
    warn!("propositioner reply is not a JSON array, re-prompting");
    let raw = client.complete(&format!("{prompt}\n{REPROMPT_SUFFIX}"))?;
    match parse_string_array(&raw) {
        Some(list) => Ok(drop_empty(list)),
        None => Err(RemoteError::MalformedOutput { raw }.into()),
    }
}

impl Propositioner for RemotePropositioner {
    fn kind(&self) -> BackendKind {
        BackendKind::Remote
    }

    fn propose(&self, text: &str) -> Result<Vec<String>, BackendError> {
        remote_propose(&self.client, text, "")
    }

    fn propose_titled(&self, text: &str, title: &str) -> Result<Vec<String>, BackendError> {
        remote_propose(&self.client, text, title)
    }
}
