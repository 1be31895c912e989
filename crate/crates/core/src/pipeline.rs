//! End-to-end driver: corpus → atoms → triplets → graph → report.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::atomizer::{
    AtomizationResult, Atomizer, Proposition, Propositioner, RemotePropositioner, RuleBasedPropositioner,
    ScriptedPropositioner, DEFAULT_CAP, DEFAULT_CONCURRENCY,
};
use crate::error::{AtomizeError, EvalError, ExtractError, IoError, RemoteError};
use crate::eval::{evaluate, EvalMode, EvalReport, GoldRecord, LexicalSimilarity, RemoteSimilarity, SimilarityBackend};
use crate::extraction::{
    Config, Diagnostics, ExtractionTask, Extractor, ExtractorBackend, Mode, Origin, RemoteExtractor,
    ScriptedExtractor, Triplet, TripletRecord,
};
use crate::io::{jsonl_reader, read_jsonl, read_to_string, write_string, CorpusRecord, JsonlWriter};
use crate::kg::{build_graph, infer_transitive, to_dot, to_json, KnowledgeGraph};
use crate::par::Pool;
use crate::remote::RemoteConfig;
use crate::text::normalize_text;

pub const ATOMS_FILE: &str = "atoms.jsonl";
pub const TRIPLETS_FILE: &str = "triplets.jsonl";
pub const GRAPH_JSON_FILE: &str = "graph.json";
pub const GRAPH_DOT_FILE: &str = "graph.dot";
pub const REPORT_FILE: &str = "report.json";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Config,
    Atomize,
    Extract,
    Kg,
    Eval,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "config",
            Stage::Atomize => "atomize",
            Stage::Extract => "extract",
            Stage::Kg => "kg",
            Stage::Eval => "eval",
        })
    }
}

#[derive(Debug, Error)]
pub enum StageError {
    #[error(transparent)]
    Atomize(#[from] AtomizeError),
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Remote(#[from] RemoteError),
    #[error("{0}")]
    Invalid(String),
}

/// A failure attributed to one pipeline stage. The message already includes
/// the cause.
#[derive(Debug, Error)]
#[error("stage `{stage}` failed: {cause}")]
pub struct PipelineError {
    pub stage: Stage,
    pub cause: StageError,
}

impl PipelineError {
    pub fn new(stage: Stage, source: impl Into<StageError>) -> Self {
        PipelineError {
            stage,
            cause: source.into(),
        }
    }

    fn config(msg: impl Into<String>) -> Self {
        PipelineError::new(Stage::Config, StageError::Invalid(msg.into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PropositionerChoice {
    Remote,
    #[default]
    Rules,
    Scripted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtractorChoice {
    #[default]
    Remote,
    Scripted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimilarityChoice {
    Remote,
    #[default]
    Lexical,
}

/// Where a backend lives. `script` is used by scripted backends, `base_url`
/// and `model` by remote ones.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Endpoint<K> {
    pub kind: K,
    pub base_url: Option<String>,
    pub model: Option<String>,
    pub timeout_secs: Option<u64>,
    pub script: Option<PathBuf>,
    /// Scripted extractor only: answer unknown inputs with an empty reply.
    pub lenient: bool,
}

impl<K> Endpoint<K> {
    fn remote_config(&self, what: &str) -> Result<RemoteConfig, String> {
        let (Some(url), Some(model)) = (&self.base_url, &self.model) else {
            return Err(format!("{what}: remote backend needs `base_url` and `model`"));
        };
        let mut cfg = RemoteConfig::new(url, model).with_env_key();
        if let Some(t) = self.timeout_secs {
            cfg.timeout_secs = t;
        }
        Ok(cfg)
    }

    fn script_path(&self, what: &str) -> Result<&Path, String> {
        self.script
            .as_deref()
            .ok_or_else(|| format!("{what}: scripted backend needs `script`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtractMode {
    #[default]
    Open,
    Closed,
}

/// Pipeline settings, read from one JSON document. Every key is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub propositioner: Endpoint<PropositionerChoice>,
    pub extractor: Endpoint<ExtractorChoice>,
    pub embeddings: Endpoint<SimilarityChoice>,
    pub cap: usize,
    pub config: Config,
    pub mode: ExtractMode,
    /// Closed mode: labels for records that carry none.
    pub labels: Vec<String>,
    /// File with one transitive relation per line.
    pub transitive: Option<PathBuf>,
    /// Transitive relations given inline; merged with `transitive`.
    pub transitive_relations: Vec<String>,
    /// Gold JSONL; when set, the report includes evaluation scores.
    pub gold: Option<PathBuf>,
    pub threshold: f64,
    pub concurrency: usize,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            propositioner: Endpoint::default(),
            extractor: Endpoint::default(),
            embeddings: Endpoint::default(),
            cap: DEFAULT_CAP,
            config: Config::Prop,
            mode: ExtractMode::Open,
            labels: Vec::new(),
            transitive: None,
            transitive_relations: Vec::new(),
            gold: None,
            threshold: crate::eval::DEFAULT_THRESHOLD,
            concurrency: DEFAULT_CONCURRENCY,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    /// Parses a config file. Relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = read_to_string(path).map_err(|e| PipelineError::new(Stage::Config, e))?;
        let mut cfg: PipelineConfig = serde_json::from_str(&text).map_err(|source| {
            PipelineError::new(
                Stage::Config,
                IoError::Json {
                    path: path.display().to_string(),
                    line: source.line(),
                    source,
                },
            )
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut cfg.propositioner.script,
            &mut cfg.extractor.script,
            &mut cfg.embeddings.script,
            &mut cfg.transitive,
            &mut cfg.gold,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    /// Checks invariants and that every referenced file exists.
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.cap < 1 {
            return Err(PipelineError::config("cap must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(PipelineError::config(format!("threshold {} outside [0, 1]", self.threshold)));
        }
        if self.concurrency < 1 {
            return Err(PipelineError::config("concurrency must be at least 1"));
        }
        if self.config == Config::Comb && self.mode != ExtractMode::Closed {
            return Err(PipelineError::config("configuration Comb requires closed mode"));
        }
        let files = [
            (self.propositioner.kind == PropositionerChoice::Scripted)
                .then(|| self.propositioner.script_path("propositioner")),
            (self.extractor.kind == ExtractorChoice::Scripted).then(|| self.extractor.script_path("extractor")),
        ];
        for f in files.into_iter().flatten() {
            let p = f.map_err(PipelineError::config)?;
            if !p.is_file() {
                return Err(PipelineError::config(format!("{}: no such file", p.display())));
            }
        }
        for p in [&self.transitive, &self.gold].into_iter().flatten() {
            if !p.is_file() {
                return Err(PipelineError::config(format!("{}: no such file", p.display())));
            }
        }
        Ok(())
    }

    pub fn build_propositioner(&self) -> Result<Box<dyn Propositioner>, PipelineError> {
        let ep = &self.propositioner;
        Ok(match ep.kind {
            PropositionerChoice::Rules => Box::new(RuleBasedPropositioner),
            PropositionerChoice::Scripted => {
                let p = ep.script_path("propositioner").map_err(PipelineError::config)?;
                Box::new(ScriptedPropositioner::from_file(p).map_err(|e| PipelineError::new(Stage::Config, e))?)
            }
            PropositionerChoice::Remote => {
                let cfg = ep.remote_config("propositioner").map_err(PipelineError::config)?;
                Box::new(RemotePropositioner::new(cfg).map_err(|e| PipelineError::new(Stage::Config, e))?)
            }
        })
    }

    pub fn build_extractor(&self) -> Result<Box<dyn ExtractorBackend>, PipelineError> {
        let ep = &self.extractor;
        Ok(match ep.kind {
            ExtractorChoice::Scripted => {
                let p = ep.script_path("extractor").map_err(PipelineError::config)?;
                let b = ScriptedExtractor::from_file(p).map_err(|e| PipelineError::new(Stage::Config, e))?;
                Box::new(b.lenient(ep.lenient))
            }
            ExtractorChoice::Remote => {
                let cfg = ep.remote_config("extractor").map_err(PipelineError::config)?;
                Box::new(RemoteExtractor::new(cfg).map_err(|e| PipelineError::new(Stage::Config, e))?)
            }
        })
    }

    pub fn build_similarity(&self) -> Result<Box<dyn SimilarityBackend>, PipelineError> {
        let ep = &self.embeddings;
        Ok(match ep.kind {
            SimilarityChoice::Lexical => Box::new(LexicalSimilarity),
            SimilarityChoice::Remote => {
                let cfg = ep.remote_config("embeddings").map_err(PipelineError::config)?;
                Box::new(RemoteSimilarity::new(cfg).map_err(|e| PipelineError::new(Stage::Config, e))?)
            }
        })
    }

    /// Inline relations plus those in the `transitive` file.
    pub fn transitive_set(&self) -> Result<BTreeSet<String>, IoError> {
        let mut set: BTreeSet<String> = self
            .transitive_relations
            .iter()
            .map(|r| normalize_text(r))
            .filter(|r| !r.is_empty())
            .collect();
        if let Some(p) = &self.transitive {
            set.extend(read_relations(p)?);
        }
        Ok(set)
    }
}

/// One relation per line; blank lines and `#` comments are skipped.
pub fn read_relations(path: &Path) -> Result<BTreeSet<String>, IoError> {
    Ok(read_to_string(path)?
        .lines()
        .map(normalize_text)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect())
}

fn batches<T, E>(
    iter: impl Iterator<Item = Result<T, E>>,
    size: usize,
) -> impl Iterator<Item = Result<Vec<T>, E>> {
    let mut iter = iter.fuse();
    std::iter::from_fn(move || {
        let mut batch = Vec::with_capacity(size);
        for item in iter.by_ref() {
            match item {
                Ok(x) => batch.push(x),
                Err(e) => return Some(Err(e)),
            }
            if batch.len() == size {
                break;
            }
        }
        (!batch.is_empty()).then_some(Ok(batch))
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomizeStats {
    pub records: usize,
    pub skipped_empty: usize,
    pub atoms: usize,
    pub backend_calls: usize,
    pub unproved_discarded: usize,
    pub empty_roots: usize,
    pub max_iterations: usize,
}

/// Atomizes records in batches of `concurrency`, one record per worker, and
/// writes atoms in input order.
pub fn atomize_corpus(
    records: impl Iterator<Item = Result<CorpusRecord, IoError>>,
    backend: &dyn Propositioner,
    cap: usize,
    concurrency: usize,
    out: &mut JsonlWriter,
) -> Result<AtomizeStats, StageError> {
    let pool = Pool::new(concurrency);
    let atomizer = Atomizer::new(backend).cap(cap).concurrency(1);
    let mut stats = AtomizeStats::default();
    for batch in batches(records, concurrency.max(1)) {
        let batch = batch?;
        let results = pool.map(&batch, |r| {
            if normalize_text(&r.text).is_empty() {
                return Ok(None);
            }
            atomizer.run_record(&r.source_id, &r.title, &r.text).map(Some)
        });
        for (rec, res) in batch.iter().zip(results) {
            stats.records += 1;
            let Some(res) = res? else {
                warn!("source {:?}: empty text, skipped", rec.source_id);
                stats.skipped_empty += 1;
                continue;
            };
            stats.atoms += res.atoms.len();
            stats.backend_calls += res.backend_calls;
            stats.unproved_discarded += res.unproved_discarded;
            stats.empty_roots += res.empty_root as usize;
            stats.max_iterations = stats.max_iterations.max(res.iterations_used);
            for a in &res.atoms {
                out.write(a)?;
            }
        }
    }
    Ok(stats)
}

/// Groups an atoms file by source id.
pub fn load_atoms(path: &Path) -> Result<HashMap<String, AtomizationResult>, IoError> {
    let mut out: HashMap<String, AtomizationResult> = HashMap::new();
    for p in jsonl_reader::<Proposition>(path)? {
        let p = p?;
        out.entry(p.source_id.clone()).or_default().atoms.push(p);
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExtractStats {
    pub records: usize,
    pub skipped_empty: usize,
    pub triplets: usize,
    pub diagnostics: Diagnostics,
    pub comb_direct: usize,
    pub comb_prop: usize,
    pub entity_warnings: usize,
}

/// Settings shared by every record of an extraction run.
#[derive(Debug, Clone)]
pub struct ExtractSettings<'a> {
    pub mode: ExtractMode,
    pub config: Config,
    pub default_labels: &'a [String],
    pub concurrency: usize,
}

fn task_for(rec: &CorpusRecord, s: &ExtractSettings<'_>) -> Result<ExtractionTask, ExtractError> {
    let mode = match s.mode {
        ExtractMode::Open => Mode::Open,
        ExtractMode::Closed => {
            let (Some(e1), Some(e2)) = (&rec.e1, &rec.e2) else {
                return Err(ExtractError::MissingEntities);
            };
            Mode::Closed {
                e1: normalize_text(e1),
                e2: normalize_text(e2),
                labels: rec.labels.clone().unwrap_or_else(|| s.default_labels.to_vec()),
            }
        }
    };
    Ok(ExtractionTask {
        source_id: rec.source_id.clone(),
        text: rec.text.clone(),
        mode,
        config: s.config,
    })
}

/// Extracts triplets record by record and writes them in input order.
/// Records absent from `atoms` are treated as having no atoms.
pub fn extract_corpus(
    records: impl Iterator<Item = Result<CorpusRecord, IoError>>,
    atoms: &HashMap<String, AtomizationResult>,
    backend: &dyn ExtractorBackend,
    settings: &ExtractSettings<'_>,
    out: &mut JsonlWriter,
) -> Result<ExtractStats, StageError> {
    let pool = Pool::new(settings.concurrency);
    let extractor = Extractor::new(backend).concurrency(1);
    let none = AtomizationResult::default();
    let mut stats = ExtractStats::default();
    for batch in batches(records, settings.concurrency.max(1)) {
        let batch = batch?;
        let results = pool.map(&batch, |r| {
            if normalize_text(&r.text).is_empty() {
                return Ok(None);
            }
            let task = task_for(r, settings)?;
            let a = settings
                .config
                .needs_atoms()
                .then(|| atoms.get(&r.source_id).unwrap_or(&none));
            extractor.run(&task, a).map(Some)
        });
        for (rec, res) in batch.iter().zip(results) {
            stats.records += 1;
            let Some(res) = res? else {
                warn!("source {:?}: empty text, skipped", rec.source_id);
                stats.skipped_empty += 1;
                continue;
            };
            stats.diagnostics.merge(res.diagnostics);
            stats.entity_warnings += res.entity_warning as usize;
            match res.comb_branch {
                Some(Origin::Direct) => stats.comb_direct += 1,
                Some(Origin::Prop) => stats.comb_prop += 1,
                None => {}
            }
            for t in &res.triplets {
                out.write(&TripletRecord::from(t))?;
                stats.triplets += 1;
            }
        }
    }
    Ok(stats)
}

/// Reads a triplets file; records with an empty slot are skipped.
pub fn load_triplets(path: &Path) -> Result<Vec<Triplet>, IoError> {
    Ok(read_jsonl::<TripletRecord>(path)?
        .into_iter()
        .filter_map(TripletRecord::into_triplet)
        .collect())
}

/// Builds the graph and applies transitive closure when relations are given.
pub fn graph_from(triplets: &[Triplet], transitive: &BTreeSet<String>) -> KnowledgeGraph {
    let g = build_graph(triplets);
    if transitive.is_empty() {
        g
    } else {
        infer_transitive(&g, transitive)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: Stage,
    pub millis: u128,
    /// Stage-specific counts.
    pub counts: serde_json::Value,
}

/// Run log: per-stage counts and timings, rewritten after every stage.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: Option<PipelineConfig>,
    pub stages: Vec<StageRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failed_stage: Option<Stage>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Deterministic summary of a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub records: usize,
    pub atoms: usize,
    pub triplets: usize,
    pub nodes: usize,
    pub edges: usize,
    pub derived_edges: usize,
    pub comb_branches: BTreeMap<String, usize>,
    pub entity_warnings: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eval: Option<EvalReport>,
}

fn to_value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("stats serialize")
}

struct Run<'a> {
    dir: &'a Path,
    manifest: Manifest,
}

impl Run<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn save(&self) -> Result<(), IoError> {
        let mut s = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        s.push('\n');
        write_string(&self.path(MANIFEST_FILE), &s)
    }

    fn stage<T: Serialize>(
        &mut self,
        stage: Stage,
        f: impl FnOnce(&Self) -> Result<T, StageError>,
    ) -> Result<T, PipelineError> {
        let start = Instant::now();
        info!("stage {stage}: start");
        match f(self) {
            Ok(v) => {
                self.manifest.stages.push(StageRecord {
                    stage,
                    millis: start.elapsed().as_millis(),
                    counts: to_value(&v),
                });
                self.save().map_err(|e| PipelineError::new(stage, e))?;
                info!("stage {stage}: done in {:?}", start.elapsed());
                Ok(v)
            }
            Err(e) => {
                let err = PipelineError::new(stage, e);
                self.manifest.failed_stage = Some(stage);
                self.manifest.error = Some(err.to_string());
                // the stage error matters more than a failure to log it
                let _ = self.save();
                Err(err)
            }
        }
    }
}

/// Runs every stage over `corpus`, writing artifacts into `out_dir`.
///
/// Completed stages keep their artifacts when a later stage fails. The
/// returned error names the failing stage.
pub fn run_pipeline(config: &PipelineConfig, corpus: &Path, out_dir: &Path) -> Result<RunReport, PipelineError> {
    config.validate()?;
    if !corpus.is_file() {
        return Err(PipelineError::config(format!("{}: no such file", corpus.display())));
    }
    std::fs::create_dir_all(out_dir).map_err(|source| {
        PipelineError::new(
            Stage::Config,
            IoError::File {
                path: out_dir.display().to_string(),
                source,
            },
        )
    })?;
    let propositioner = config.build_propositioner()?;
    let extractor = config.build_extractor()?;
    let transitive = config.transitive_set().map_err(|e| PipelineError::new(Stage::Config, e))?;

    let mut run = Run {
        dir: out_dir,
        manifest: Manifest {
            config: Some(config.clone()),
            ..Default::default()
        },
    };
    let mut report = RunReport::default();

    let a = run.stage(Stage::Atomize, |run| {
        let mut w = JsonlWriter::create(&run.path(ATOMS_FILE))?;
        let stats = if config.config.needs_atoms() {
            atomize_corpus(
                jsonl_reader(corpus)?,
                propositioner.as_ref(),
                config.cap,
                config.concurrency,
                &mut w,
            )?
        } else {
            AtomizeStats::default()
        };
        w.finish()?;
        Ok(stats)
    })?;
    report.atoms = a.atoms;

    let x = run.stage(Stage::Extract, |run| {
        let atoms = load_atoms(&run.path(ATOMS_FILE))?;
        let mut w = JsonlWriter::create(&run.path(TRIPLETS_FILE))?;
        let settings = ExtractSettings {
            mode: config.mode,
            config: config.config,
            default_labels: &config.labels,
            concurrency: config.concurrency,
        };
        let stats = extract_corpus(jsonl_reader(corpus)?, &atoms, extractor.as_ref(), &settings, &mut w)?;
        w.finish()?;
        Ok(stats)
    })?;
    report.records = x.records;
    report.triplets = x.triplets;
    report.entity_warnings = x.entity_warnings;
    if config.config == Config::Comb {
        report.comb_branches.insert("direct".into(), x.comb_direct);
        report.comb_branches.insert("prop".into(), x.comb_prop);
    }

    let graph = run.stage(Stage::Kg, |run| {
        let triplets = load_triplets(&run.path(TRIPLETS_FILE))?;
        let g = graph_from(&triplets, &transitive);
        write_string(&run.path(GRAPH_JSON_FILE), &to_json(&g))?;
        write_string(&run.path(GRAPH_DOT_FILE), &to_dot(&g))?;
        Ok(GraphCounts {
            nodes: g.node_count(),
            edges: g.edge_count(),
            derived_edges: g.derived_count(),
        })
    })?;
    report.nodes = graph.nodes;
    report.edges = graph.edges;
    report.derived_edges = graph.derived_edges;

    report = run.stage(Stage::Eval, |run| {
        if let Some(gold_path) = &config.gold {
            let gold: Vec<GoldRecord> = read_jsonl(gold_path)?;
            let predicted = load_triplets(&run.path(TRIPLETS_FILE))?;
            let sim = config
                .build_similarity()
                .map_err(|e| StageError::Invalid(e.cause.to_string()))?;
            let mode = match config.mode {
                ExtractMode::Open => EvalMode::Open,
                ExtractMode::Closed => EvalMode::Closed,
            };
            report.eval = Some(evaluate(&gold, &predicted, mode, sim.as_ref(), config.threshold)?.report);
        }
        let mut s = serde_json::to_string_pretty(&report).expect("report serializes");
        s.push('\n');
        write_string(&run.path(REPORT_FILE), &s)?;
        Ok(report)
    })?;
    Ok(report)
}

#[derive(Debug, Clone, Copy, Serialize)]
struct GraphCounts {
    nodes: usize,
    edges: usize,
    derived_edges: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    fn scripted_config(dir: &Path) -> PipelineConfig {
        let prop = write(
            dir,
            "prop.json",
            r#"{"Ann and Bob live in Oslo.": ["Ann lives in Oslo.", "Bob lives in Oslo."],
                "Ann lives in Oslo.": ["Ann lives in Oslo."],
                "Bob lives in Oslo.": ["Bob lives in Oslo."]}"#,
        );
        let ext = write(
            dir,
            "ext.json",
            r#"{"open": {"Ann lives in Oslo.": "Ann | lives in | Oslo",
                         "Bob lives in Oslo.": "Bob | lives in | Oslo"}}"#,
        );
        PipelineConfig {
            propositioner: Endpoint {
                kind: PropositionerChoice::Scripted,
                script: Some(prop),
                ..Default::default()
            },
            extractor: Endpoint {
                kind: ExtractorChoice::Scripted,
                script: Some(ext),
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn small_run() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = write(dir.path(), "c.jsonl", "{\"source_id\": \"1\", \"text\": \"Ann and Bob live in Oslo.\"}\n");
        let out = dir.path().join("out");
        let r = run_pipeline(&scripted_config(dir.path()), &corpus, &out).unwrap();
        assert_eq!((r.records, r.atoms, r.triplets, r.nodes, r.edges), (1, 2, 2, 3, 2));
        let lines = std::fs::read_to_string(out.join(TRIPLETS_FILE)).unwrap();
        assert_eq!(lines.lines().count(), 2);
        let m: Manifest = serde_json::from_str(&std::fs::read_to_string(out.join(MANIFEST_FILE)).unwrap()).unwrap();
        assert_eq!(m.stages.len(), 4);
        assert_eq!(m.stages[1].counts["triplets"], 2);
    }

    #[test]
    fn empty_corpus() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = write(dir.path(), "c.jsonl", "");
        let out = dir.path().join("out");
        let r = run_pipeline(&scripted_config(dir.path()), &corpus, &out).unwrap();
        assert_eq!(r, RunReport::default());
        assert_eq!(std::fs::read_to_string(out.join(GRAPH_DOT_FILE)).unwrap(), "digraph G { }\n");
        assert_eq!(std::fs::read_to_string(out.join(ATOMS_FILE)).unwrap(), "");
        let g: KnowledgeGraph = serde_json::from_str(&std::fs::read_to_string(out.join(GRAPH_JSON_FILE)).unwrap()).unwrap();
        assert!(g.is_empty());
    }

    #[test]
    fn failure_names_stage_and_keeps_earlier_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = write(dir.path(), "c.jsonl", "{\"source_id\": \"1\", \"text\": \"Ann and Bob live in Oslo.\"}\n");
        let mut cfg = scripted_config(dir.path());
        cfg.extractor.script = Some(write(dir.path(), "empty.json", "{}"));
        let out = dir.path().join("out");
        let err = run_pipeline(&cfg, &corpus, &out).unwrap_err();
        assert_eq!(err.stage, Stage::Extract);
        assert!(err.to_string().starts_with("stage `extract` failed"));
        assert_eq!(std::fs::read_to_string(out.join(ATOMS_FILE)).unwrap().lines().count(), 2);
        let m: Manifest = serde_json::from_str(&std::fs::read_to_string(out.join(MANIFEST_FILE)).unwrap()).unwrap();
        assert_eq!(m.failed_stage, Some(Stage::Extract));
    }

    #[test]
    fn config_validation() {
        let mut cfg = PipelineConfig {
            cap: 0,
            ..Default::default()
        };
        assert_eq!(cfg.validate().unwrap_err().stage, Stage::Config);
        cfg.cap = 1;
        cfg.config = Config::Comb;
        assert!(cfg.validate().is_err());
        cfg.config = Config::Prop;
        cfg.propositioner.kind = PropositionerChoice::Scripted;
        assert!(cfg.validate().unwrap_err().to_string().contains("script"));
    }

    #[test]
    fn load_resolves_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "cfg.json",
            r#"{"propositioner": {"kind": "scripted", "script": "prop.json"}, "cap": 3, "config": "union"}"#,
        );
        let cfg = PipelineConfig::load(&p).unwrap();
        assert_eq!(cfg.propositioner.script, Some(dir.path().join("prop.json")));
        assert_eq!((cfg.cap, cfg.config), (3, Config::Union));
        let bad = write(dir.path(), "bad.json", r#"{"nope": 1}"#);
        assert_eq!(PipelineConfig::load(&bad).unwrap_err().stage, Stage::Config);
    }
}
