//! Recursive fixed-point propositioner.
//!
//! Starting from `P0 = M(text)`, every proposition is re-submitted to the
//! backend; a proposition `p` is proved atomic when `M(p) = {p}`. The frontier
//! is expanded until it consists only of proved atoms or the depth cap is hit,
//! and only proved atoms are returned.

mod backend;
pub mod rules;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{AtomizeError, BackendError};
use crate::par::Pool;
use crate::text::normalize_text;

pub use backend::{
    identity_propositioner, parse_string_array, remote_propose, BackendKind, Fallback,
    FnPropositioner, Propositioner, RemotePropositioner, RuleBasedPropositioner,
    ScriptedPropositioner,
};
pub use rules::rule_based_split;

pub const DEFAULT_CAP: usize = 5;
pub const DEFAULT_CONCURRENCY: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Proposition {
    pub text: String,
    pub source_id: String,
    /// Iteration at which the text first appeared in the frontier.
    pub depth: usize,
    pub proved_atomic: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomizationResult {
    /// Proved atoms, sorted by text.
    pub atoms: Vec<Proposition>,
    pub iterations_used: usize,
    /// Frontier members still unproved when the loop stopped.
    pub unproved_discarded: usize,
    pub backend_calls: usize,
    /// Backend outputs dropped for being empty after normalization.
    pub empty_dropped: usize,
    /// Set when the backend produced nothing for the root text.
    pub empty_root: bool,
}

impl AtomizationResult {
    pub fn atom_texts(&self) -> Vec<&str> {
        self.atoms.iter().map(|p| p.text.as_str()).collect()
    }
}

/// Runs the fixed-point loop against one backend.
///
/// Backend calls for distinct strings within one frontier run concurrently,
/// bounded by `concurrency`. Replies are memoized per normalized input for
/// the duration of a single [`Atomizer::run`] call.
pub struct Atomizer<'a> {
    backend: &'a dyn Propositioner,
    cap: usize,
    pool: Pool,
}

impl<'a> Atomizer<'a> {
    pub fn new(backend: &'a dyn Propositioner) -> Self {
        Atomizer {
            backend,
            cap: DEFAULT_CAP,
            pool: Pool::new(DEFAULT_CONCURRENCY),
        }
    }

    pub fn cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }

    pub fn concurrency(mut self, limit: usize) -> Self {
        self.pool = Pool::new(limit);
        self
    }

    pub fn run(&self, text: &str) -> Result<AtomizationResult, AtomizeError> {
        self.run_record("", "", text)
    }

    pub fn run_record(
        &self,
        source_id: &str,
        title: &str,
        text: &str,
    ) -> Result<AtomizationResult, AtomizeError> {
        if self.cap < 1 {
            return Err(AtomizeError::InvalidCap);
        }
        let root = normalize_text(text);
        if root.is_empty() {
            return Err(AtomizeError::EmptyInput);
        }
        let mut state = State {
            memo: HashMap::new(),
            calls: 0,
            empty_dropped: 0,
        };

        // the root reply is not memoized: the root is never a member of P0
        state.calls += 1;
        let raw = self
            .backend
            .propose_titled(&root, title)
            .map_err(|e| state.fail(0, &BTreeSet::new(), e))?;
        let mut frontier = state.clean(raw);
        if frontier.is_empty() {
            warn!("propositioner returned nothing for source {source_id:?}");
            return Ok(AtomizationResult {
                backend_calls: state.calls,
                empty_dropped: state.empty_dropped,
                empty_root: true,
                ..Default::default()
            });
        }

        let mut first_seen: BTreeMap<String, usize> =
            frontier.iter().map(|p| (p.clone(), 0)).collect();
        let mut i = 0;
        let mut atoms = self.prove(&mut state, &frontier, i, &BTreeSet::new())?;
        while frontier != atoms && i < self.cap {
            let next: BTreeSet<String> = frontier
                .iter()
                .flat_map(|x| state.memo[x].iter().cloned())
                .collect();
            i += 1;
            for p in &next {
                first_seen.entry(p.clone()).or_insert(i);
            }
            let proved = self.prove(&mut state, &next, i, &atoms)?;
            frontier = next;
            atoms = proved;
        }

        Ok(AtomizationResult {
            atoms: atoms
                .iter()
                .map(|t| Proposition {
                    text: t.clone(),
                    source_id: source_id.to_owned(),
                    depth: first_seen[t],
                    proved_atomic: true,
                })
                .collect(),
            iterations_used: i,
            unproved_discarded: frontier.len() - atoms.len(),
            backend_calls: state.calls,
            empty_dropped: state.empty_dropped,
            empty_root: false,
        })
    }

    /// Ensures every member of `set` has a memoized reply and returns the
    /// fixed points among them.
    fn prove(
        &self,
        state: &mut State,
        set: &BTreeSet<String>,
        iteration: usize,
        proved_so_far: &BTreeSet<String>,
    ) -> Result<BTreeSet<String>, AtomizeError> {
        let missing: Vec<&String> = set.iter().filter(|p| !state.memo.contains_key(*p)).collect();
        let replies = self.pool.map(&missing, |p| self.backend.propose(p));
        state.calls += missing.len();
        // `missing` is sorted, so merging is independent of completion order
        for (p, reply) in missing.into_iter().zip(replies) {
            let reply = reply.map_err(|e| state.fail(iteration, proved_so_far, e))?;
            let cleaned = state.clean(reply);
            state.memo.insert(p.clone(), cleaned);
        }
        Ok(set
            .iter()
            .filter(|p| is_fixed_point(p, &state.memo[*p]))
            .cloned()
            .collect())
    }
}

struct State {
    memo: HashMap<String, BTreeSet<String>>,
    calls: usize,
    empty_dropped: usize,
}

impl State {
    fn clean(&mut self, raw: Vec<String>) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for s in raw {
            let n = normalize_text(&s);
            if n.is_empty() {
                self.empty_dropped += 1;
            } else {
                out.insert(n);
            }
        }
        out
    }

    fn fail(&self, iteration: usize, proved: &BTreeSet<String>, source: BackendError) -> AtomizeError {
        AtomizeError::Backend {
            iteration,
            backend_calls: self.calls,
            partial: proved.iter().cloned().collect(),
            source,
        }
    }
}

fn is_fixed_point(p: &str, reply: &BTreeSet<String>) -> bool {
    reply.len() == 1 && reply.contains(p)
}

/// Convenience wrapper with the default concurrency.
pub fn atomize(
    text: &str,
    backend: &dyn Propositioner,
    cap: usize,
) -> Result<AtomizationResult, AtomizeError> {
    Atomizer::new(backend).cap(cap).run(text)
}
