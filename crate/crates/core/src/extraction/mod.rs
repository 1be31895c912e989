//! Triplet extraction from raw text and atomic propositions.
//!
//! Four configurations combine the two sources: `Direct` (raw text only),
//! `Prop` (atoms only), `Comb` (raw text, falling back to atoms when the
//! entity pair is not recovered) and `Union` (both, merged).

mod backend;
mod triplet;

use std::fmt;
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::atomizer::AtomizationResult;
use crate::error::ExtractError;
use crate::par::Pool;
use crate::text::normalize_text;

pub use backend::{
    format_labels, ExtractorBackend, ExtractorKind, OpenReply, RemoteExtractor, ScoredTriple,
    ScriptedExtractor,
};
pub use triplet::{dedup, Origin, Provenance, Triplet, TripletKey, TripletRecord};

/// Sentinel label for replies outside the vocabulary.
pub const NO_RELATION: &str = "NoRelation";

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Relation {
    Label(String),
    NoRelation,
}

impl Relation {
    pub fn label(&self) -> Option<&str> {
        match self {
            Relation::Label(l) => Some(l),
            Relation::NoRelation => None,
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label().unwrap_or(NO_RELATION))
    }
}

/// Counters describing what the parsers threw away.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub backend_calls: usize,
    /// Reply lines not of the form `X | Y | Z`.
    pub dropped_lines: usize,
    /// Replies that produced no triplet at all.
    pub empty_replies: usize,
    /// Classification replies that matched no label.
    pub out_of_vocabulary: usize,
}

impl Diagnostics {
    pub fn merge(&mut self, other: Diagnostics) {
        self.backend_calls += other.backend_calls;
        self.dropped_lines += other.dropped_lines;
        self.empty_replies += other.empty_replies;
        self.out_of_vocabulary += other.out_of_vocabulary;
    }
}

/// Parses `subject | predicate | object` lines. A line qualifies only with
/// exactly two `|` separators and three nonempty parts.
pub fn parse_triplet_lines(reply: &str) -> (Vec<Triplet>, usize) {
    let mut out = Vec::new();
    let mut dropped = 0;
    for line in reply.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split('|').collect();
        match parts[..] {
            [s, r, o] => match Triplet::new(s, r, o) {
                Some(t) => out.push(t),
                None => dropped += 1,
            },
            _ => dropped += 1,
        }
    }
    (out, dropped)
}

/// Open extraction over one text. Output is deduplicated and sorted.
pub fn extract_open(
    text: &str,
    backend: &dyn ExtractorBackend,
) -> Result<(Vec<Triplet>, Diagnostics), ExtractError> {
    if normalize_text(text).is_empty() {
        return Err(ExtractError::EmptyText);
    }
    let mut diag = Diagnostics {
        backend_calls: 1,
        ..Default::default()
    };
    let triplets = match backend.extract_open(text)? {
        OpenReply::Text(reply) => {
            let (ts, dropped) = parse_triplet_lines(&reply);
            diag.dropped_lines = dropped;
            ts
        }
        OpenReply::Triples(items) => items
            .into_iter()
            .filter_map(|t| {
                let c = t.confidence.unwrap_or(1.0);
                let parsed = Triplet::new(&t.s, &t.r, &t.o).map(|x| x.with_confidence(c));
                if parsed.is_none() {
                    diag.dropped_lines += 1;
                }
                parsed
            })
            .collect(),
    };
    if triplets.is_empty() {
        diag.empty_replies = 1;
    }
    Ok((dedup(triplets), diag))
}

/// Matches a classification reply against the vocabulary: first nonempty
/// line, trimmed; exact match, then case-insensitive, else `NoRelation`.
pub fn match_label(reply: &str, labels: &[String]) -> Relation {
    let Some(line) = reply.lines().map(str::trim).find(|l| !l.is_empty()) else {
        return Relation::NoRelation;
    };
    if line.eq_ignore_ascii_case(NO_RELATION) {
        return Relation::NoRelation;
    }
    if let Some(l) = labels.iter().find(|l| l.as_str() == line) {
        return Relation::Label(l.clone());
    }
    let lower = line.to_lowercase();
    labels
        .iter()
        .find(|l| l.to_lowercase() == lower)
        .map_or(Relation::NoRelation, |l| Relation::Label(l.clone()))
}

pub fn classify_relation(
    text: &str,
    e1: &str,
    e2: &str,
    labels: &[String],
    backend: &dyn ExtractorBackend,
) -> Result<Relation, ExtractError> {
    if labels.is_empty() {
        return Err(ExtractError::EmptyLabels);
    }
    let reply = backend.classify(text, e1, e2, labels)?;
    Ok(match_label(&reply, labels))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Config {
    Direct,
    Prop,
    Comb,
    Union,
}

impl Config {
    pub const ALL: [Config; 4] = [Config::Direct, Config::Prop, Config::Comb, Config::Union];

    pub fn needs_atoms(self) -> bool {
        self != Config::Direct
    }

    fn name(self) -> &'static str {
        match self {
            Config::Direct => "Direct",
            Config::Prop => "Prop",
            Config::Comb => "Comb",
            Config::Union => "Union",
        }
    }
}

impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Config {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "direct" => Ok(Config::Direct),
            "prop" => Ok(Config::Prop),
            "comb" => Ok(Config::Comb),
            "union" => Ok(Config::Union),
            other => Err(format!("unknown configuration `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Mode {
    Open,
    Closed {
        e1: String,
        e2: String,
        labels: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractionTask {
    pub source_id: String,
    pub text: String,
    pub mode: Mode,
    pub config: Config,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConfigOutput {
    /// Sorted by `(subject, relation, object)`.
    pub triplets: Vec<Triplet>,
    pub diagnostics: Diagnostics,
    /// For `Comb`: which branch was kept.
    pub comb_branch: Option<Origin>,
    /// Closed-mode soft check: an entity was not found in text or atoms.
    pub entity_warning: bool,
}

/// Runs one configuration. Per-atom calls go through `pool`.
pub struct Extractor<'a> {
    backend: &'a dyn ExtractorBackend,
    pool: Pool,
}

impl<'a> Extractor<'a> {
    pub fn new(backend: &'a dyn ExtractorBackend) -> Self {
        Extractor {
            backend,
            pool: Pool::new(crate::atomizer::DEFAULT_CONCURRENCY),
        }
    }

    pub fn concurrency(mut self, limit: usize) -> Self {
        self.pool = Pool::new(limit);
        self
    }

    fn extract_one(&self, task: &ExtractionTask, text: &str) -> Result<(Vec<Triplet>, Diagnostics), ExtractError> {
        match &task.mode {
            Mode::Open => extract_open(text, self.backend),
            Mode::Closed { e1, e2, labels } => {
                if labels.is_empty() {
                    return Err(ExtractError::EmptyLabels);
                }
                let reply = self.backend.classify(text, e1, e2, labels)?;
                let mut diag = Diagnostics {
                    backend_calls: 1,
                    ..Default::default()
                };
                let triplets = match match_label(&reply, labels) {
                    Relation::Label(l) => Triplet::new(e1, &l, e2).into_iter().collect(),
                    Relation::NoRelation => {
                        let first = reply.lines().map(str::trim).find(|l| !l.is_empty());
                        match first {
                            None => diag.empty_replies = 1,
                            Some(l) if l.eq_ignore_ascii_case(NO_RELATION) => {}
                            Some(_) => diag.out_of_vocabulary = 1,
                        }
                        Vec::new()
                    }
                };
                Ok((triplets, diag))
            }
        }
    }

    fn direct(&self, task: &ExtractionTask) -> Result<(Vec<Triplet>, Diagnostics), ExtractError> {
        let (ts, diag) = self.extract_one(task, &task.text)?;
        let ts = ts
            .into_iter()
            .map(|t| t.with_provenance(Provenance::direct(&task.source_id)));
        Ok((dedup(ts), diag))
    }

    fn prop(
        &self,
        task: &ExtractionTask,
        atoms: &AtomizationResult,
    ) -> Result<(Vec<Triplet>, Diagnostics), ExtractError> {
        let mut texts: Vec<&str> = atoms.atoms.iter().map(|a| a.text.as_str()).collect();
        texts.sort_unstable();
        texts.dedup();
        let results = self.pool.map(&texts, |atom| self.extract_one(task, atom));
        let mut diag = Diagnostics::default();
        let mut all = Vec::new();
        for (atom, r) in texts.iter().zip(results) {
            let (ts, d) = r?;
            diag.merge(d);
            all.extend(
                ts.into_iter()
                    .map(|t| t.with_provenance(Provenance::prop(&task.source_id, *atom))),
            );
        }
        Ok((dedup(all), diag))
    }

    pub fn run(
        &self,
        task: &ExtractionTask,
        atoms: Option<&AtomizationResult>,
    ) -> Result<ConfigOutput, ExtractError> {
        if normalize_text(&task.text).is_empty() {
            return Err(ExtractError::EmptyText);
        }
        let mut entity_warning = false;
        if let Mode::Closed { e1, e2, labels } = &task.mode {
            if labels.is_empty() {
                return Err(ExtractError::EmptyLabels);
            }
            if e1.is_empty() || e2.is_empty() {
                return Err(ExtractError::MissingEntities);
            }
            let present = |e: &str| {
                task.text.contains(e)
                    || atoms.is_some_and(|a| a.atoms.iter().any(|p| p.text.contains(e)))
            };
            if !present(e1) || !present(e2) {
                warn!("source {:?}: entity pair not found in text or atoms", task.source_id);
                entity_warning = true;
            }
        }
        let need_atoms = || {
            atoms.ok_or(ExtractError::MissingAtoms(match task.config {
                Config::Prop => "Prop",
                Config::Comb => "Comb",
                _ => "Union",
            }))
        };
        let mut out = ConfigOutput {
            entity_warning,
            ..Default::default()
        };
        match task.config {
            Config::Direct => {
                let (ts, d) = self.direct(task)?;
                out.triplets = ts;
                out.diagnostics = d;
            }
            Config::Prop => {
                let (ts, d) = self.prop(task, need_atoms()?)?;
                out.triplets = ts;
                out.diagnostics = d;
            }
            Config::Comb => {
                let Mode::Closed { e1, e2, .. } = &task.mode else {
                    return Err(ExtractError::CombRequiresClosed);
                };
                let atoms = need_atoms()?;
                let (direct, d) = self.direct(task)?;
                out.diagnostics = d;
                if entities_found(&direct, e1, e2) {
                    out.triplets = direct;
                    out.comb_branch = Some(Origin::Direct);
                } else {
                    let (prop, d) = self.prop(task, atoms)?;
                    out.diagnostics.merge(d);
                    out.triplets = prop;
                    out.comb_branch = Some(Origin::Prop);
                }
            }
            Config::Union => {
                let atoms = need_atoms()?;
                let (direct, d1) = self.direct(task)?;
                let (prop, d2) = self.prop(task, atoms)?;
                out.diagnostics = d1;
                out.diagnostics.merge(d2);
                out.triplets = dedup(direct.into_iter().chain(prop));
            }
        }
        Ok(out)
    }
}

/// True when some triplet mentions both entities (case-sensitive substring)
/// across its subject and object.
pub fn entities_found(triplets: &[Triplet], e1: &str, e2: &str) -> bool {
    triplets.iter().any(|t| {
        let has = |e: &str| t.subject.contains(e) || t.object.contains(e);
        has(e1) && has(e2)
    })
}

pub fn run_config(
    task: &ExtractionTask,
    atoms: Option<&AtomizationResult>,
    backend: &dyn ExtractorBackend,
) -> Result<ConfigOutput, ExtractError> {
    Extractor::new(backend).run(task, atoms)
}
