use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use atomkg_core::eval::{
    bootstrap_significance, evaluate, render_table, threshold_sweep, EvalMode, GoldRecord, DEFAULT_ITERATIONS,
};
use atomkg_core::extraction::Config;
use atomkg_core::io::{jsonl_reader, read_jsonl, write_string, JsonlWriter};
use atomkg_core::kg::{to_dot, to_json};
use atomkg_core::pipeline::{
    atomize_corpus, extract_corpus, graph_from, load_atoms, load_triplets, read_relations, run_pipeline, Endpoint,
    ExtractMode, ExtractSettings, ExtractorChoice, PipelineConfig, PipelineError, PropositionerChoice,
    SimilarityChoice, Stage,
};

#[derive(Parser)]
#[command(name = "atomkg", version, about = "Atomic propositions to knowledge graphs")]
struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decompose corpus records into atomic propositions.
    Atomize(AtomizeArgs),
    /// Extract triplets from text and/or atoms.
    Extract(ExtractArgs),
    /// Assemble a knowledge graph from triplets.
    Kg(KgArgs),
    /// Score triplets against gold records.
    Eval(EvalArgs),
    /// Run every stage end to end.
    Pipeline(PipelineArgs),
    /// Propositional logic utilities.
    Logic {
        #[command(subcommand)]
        command: LogicCommand,
    },
}

#[derive(Subcommand)]
enum LogicCommand {
    /// Print content size, information and atomicity of a formula.
    Eval { formula: String },
}

#[derive(Args, Clone, Default)]
struct Remote {
    /// Base URL of an OpenAI-compatible API, e.g. http://localhost:8000/v1.
    #[arg(long)]
    base_url: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    timeout: Option<u64>,
}

impl Remote {
    fn endpoint<K>(&self, kind: K, script: Option<PathBuf>) -> Endpoint<K> {
        Endpoint {
            kind,
            base_url: self.base_url.clone(),
            model: self.model.clone(),
            timeout_secs: self.timeout,
            script,
            lenient: false,
        }
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum PropBackend {
    Remote,
    Rules,
    Scripted,
}

#[derive(Copy, Clone, ValueEnum)]
enum ExtBackend {
    Remote,
    Scripted,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Open,
    Closed,
}

#[derive(Copy, Clone, ValueEnum)]
enum ConfigArg {
    Direct,
    Prop,
    Comb,
    Union,
}

impl From<ConfigArg> for Config {
    fn from(c: ConfigArg) -> Self {
        match c {
            ConfigArg::Direct => Config::Direct,
            ConfigArg::Prop => Config::Prop,
            ConfigArg::Comb => Config::Comb,
            ConfigArg::Union => Config::Union,
        }
    }
}

impl From<ModeArg> for ExtractMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Open => ExtractMode::Open,
            ModeArg::Closed => ExtractMode::Closed,
        }
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum SimArg {
    Remote,
    Lexical,
}

#[derive(Args)]
struct AtomizeArgs {
    #[arg(long, value_enum, default_value = "rules")]
    backend: PropBackend,
    /// Transcript for the scripted backend.
    #[arg(long)]
    script: Option<PathBuf>,
    #[arg(long, default_value_t = atomkg_core::atomizer::DEFAULT_CAP)]
    cap: usize,
    #[arg(long, default_value_t = atomkg_core::atomizer::DEFAULT_CONCURRENCY)]
    concurrency: usize,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    remote: Remote,
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long, value_enum, default_value = "open")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "direct")]
    config: ConfigArg,
    #[arg(long, value_enum, default_value = "remote")]
    backend: ExtBackend,
    #[arg(long)]
    script: Option<PathBuf>,
    /// Answer inputs missing from the transcript with an empty reply.
    #[arg(long)]
    lenient: bool,
    #[arg(long)]
    atoms: Option<PathBuf>,
    /// Closed mode: comma-separated labels for records without their own.
    #[arg(long, value_delimiter = ',')]
    labels: Vec<String>,
    #[arg(long, default_value_t = atomkg_core::atomizer::DEFAULT_CONCURRENCY)]
    concurrency: usize,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    remote: Remote,
}

#[derive(Args)]
struct KgArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// One transitive relation per line.
    #[arg(long)]
    transitive: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    dot: Option<PathBuf>,
}

#[derive(Copy, Clone, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    pred: PathBuf,
    #[arg(long, value_enum, default_value = "open")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "lexical")]
    sim: SimArg,
    #[arg(long, default_value_t = atomkg_core::eval::DEFAULT_THRESHOLD)]
    threshold: f64,
    /// Baseline triplets; reports the p-value of `--pred` beating it.
    #[arg(long)]
    compare: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_ITERATIONS)]
    iterations: usize,
    /// Report relation recall at each of these thresholds instead.
    #[arg(long, value_delimiter = ',')]
    sweep: Vec<f64>,
    /// Write the JSON report here as well.
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
    #[command(flatten)]
    remote: Remote,
}

#[derive(Args)]
struct PipelineArgs {
    /// JSON settings file; flags below override its keys.
    #[arg(long)]
    config_file: Option<PathBuf>,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, value_enum)]
    config: Option<ConfigArg>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    cap: Option<usize>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    concurrency: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    transitive: Option<PathBuf>,
    #[arg(long)]
    gold: Option<PathBuf>,
}

fn propositioner_config(a: &AtomizeArgs) -> PipelineConfig {
    let kind = match a.backend {
        PropBackend::Remote => PropositionerChoice::Remote,
        PropBackend::Rules => PropositionerChoice::Rules,
        PropBackend::Scripted => PropositionerChoice::Scripted,
    };
    PipelineConfig {
        propositioner: a.remote.endpoint(kind, a.script.clone()),
        cap: a.cap,
        concurrency: a.concurrency,
        ..Default::default()
    }
}

fn atomize(a: AtomizeArgs) -> Result<()> {
    let cfg = propositioner_config(&a);
    cfg.validate()?;
    let backend = cfg.build_propositioner()?;
    let mut w = JsonlWriter::create(&a.out)?;
    let stats = atomize_corpus(jsonl_reader(&a.input)?, backend.as_ref(), a.cap, a.concurrency, &mut w)
        .map_err(|e| PipelineError::new(Stage::Atomize, e))?;
    w.finish()?;
    info!("atomize: {stats:?}");
    eprintln!(
        "{} records, {} atoms, {} backend calls",
        stats.records, stats.atoms, stats.backend_calls
    );
    Ok(())
}

fn extract(a: ExtractArgs) -> Result<()> {
    let kind = match a.backend {
        ExtBackend::Remote => ExtractorChoice::Remote,
        ExtBackend::Scripted => ExtractorChoice::Scripted,
    };
    let mut endpoint = a.remote.endpoint(kind, a.script.clone());
    endpoint.lenient = a.lenient;
    let cfg = PipelineConfig {
        extractor: endpoint,
        config: a.config.into(),
        mode: a.mode.into(),
        labels: a.labels.clone(),
        concurrency: a.concurrency,
        ..Default::default()
    };
    cfg.validate()?;
    let config: Config = a.config.into();
    let atoms = match &a.atoms {
        Some(p) => load_atoms(p)?,
        None if config.needs_atoms() => bail!("configuration {config} needs --atoms"),
        None => Default::default(),
    };
    let backend = cfg.build_extractor()?;
    let settings = ExtractSettings {
        mode: cfg.mode,
        config,
        default_labels: &cfg.labels,
        concurrency: cfg.concurrency,
    };
    let mut w = JsonlWriter::create(&a.out)?;
    let stats = extract_corpus(jsonl_reader(&a.input)?, &atoms, backend.as_ref(), &settings, &mut w)
        .map_err(|e| PipelineError::new(Stage::Extract, e))?;
    w.finish()?;
    info!("extract: {stats:?}");
    eprintln!("{} records, {} triplets", stats.records, stats.triplets);
    Ok(())
}

fn kg(a: KgArgs) -> Result<()> {
    let triplets = load_triplets(&a.input)?;
    let transitive = match &a.transitive {
        Some(p) => read_relations(p)?,
        None => Default::default(),
    };
    let g = graph_from(&triplets, &transitive);
    write_string(&a.out, &to_json(&g))?;
    if let Some(dot) = &a.dot {
        write_string(dot, &to_dot(&g))?;
    }
    eprintln!(
        "{} nodes, {} edges ({} derived)",
        g.node_count(),
        g.edge_count(),
        g.derived_count()
    );
    Ok(())
}

fn eval(a: EvalArgs) -> Result<()> {
    let gold: Vec<GoldRecord> = read_jsonl(&a.gold)?;
    let pred = load_triplets(&a.pred)?;
    let cfg = PipelineConfig {
        embeddings: a.remote.endpoint(
            match a.sim {
                SimArg::Remote => SimilarityChoice::Remote,
                SimArg::Lexical => SimilarityChoice::Lexical,
            },
            None,
        ),
        ..Default::default()
    };
    let sim = cfg.build_similarity()?;
    let mode = match a.mode {
        ModeArg::Open => EvalMode::Open,
        ModeArg::Closed => EvalMode::Closed,
    };

    if !a.sweep.is_empty() {
        let rows = threshold_sweep(&gold, &pred, sim.as_ref(), &a.sweep)?;
        let json = serde_json::to_string_pretty(
            &rows
                .iter()
                .map(|(t, r)| serde_json::json!({"threshold": t, "relation_recall": r}))
                .collect::<Vec<_>>(),
        )?;
        if let Some(p) = &a.json {
            write_string(p, &format!("{json}\n"))?;
        }
        match a.format {
            Format::Json => println!("{json}"),
            Format::Table => {
                println!("threshold  relation_recall");
                for (t, r) in rows {
                    println!("{t:>9.2}  {r:>15.4}");
                }
            }
        }
        return Ok(());
    }

    let mut main = evaluate(&gold, &pred, mode, sim.as_ref(), a.threshold)?;
    let baseline = match &a.compare {
        Some(p) => {
            let other = load_triplets(p)?;
            let b = evaluate(&gold, &other, mode, sim.as_ref(), a.threshold)?;
            main.report.p_value = Some(bootstrap_significance(&main.items, &b.items, a.iterations, a.seed)?);
            Some(b.report)
        }
        None => None,
    };
    let json = match &baseline {
        Some(b) => serde_json::to_string_pretty(&serde_json::json!({"system": main.report, "baseline": b}))?,
        None => serde_json::to_string_pretty(&main.report)?,
    };
    if let Some(p) = &a.json {
        write_string(p, &format!("{json}\n"))?;
    }
    match a.format {
        Format::Json => println!("{json}"),
        Format::Table => {
            let mut cols = vec![("system", &main.report)];
            if let Some(b) = &baseline {
                cols.push(("baseline", b));
            }
            print!("{}", render_table(&cols));
        }
    }
    Ok(())
}

fn pipeline(a: PipelineArgs) -> Result<(), PipelineError> {
    let mut cfg = match &a.config_file {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(c) = a.config {
        cfg.config = c.into();
    }
    if let Some(m) = a.mode {
        cfg.mode = m.into();
    }
    if let Some(v) = a.cap {
        cfg.cap = v;
    }
    if let Some(v) = a.threshold {
        cfg.threshold = v;
    }
    if let Some(v) = a.concurrency {
        cfg.concurrency = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if a.transitive.is_some() {
        cfg.transitive = a.transitive;
    }
    if a.gold.is_some() {
        cfg.gold = a.gold;
    }
    let report = run_pipeline(&cfg, &a.input, &a.out_dir)?;
    eprintln!(
        "{} records, {} atoms, {} triplets, {} nodes, {} edges ({} derived)",
        report.records, report.atoms, report.triplets, report.nodes, report.edges, report.derived_edges
    );
    Ok(())
}

fn logic_eval(formula: &str) -> Result<()> {
    let e = atomkg_core::logic::evaluate(formula).with_context(|| format!("cannot evaluate `{formula}`"))?;
    println!("formula:      {}", e.formula);
    println!("variables:    {}", e.variables.join(", "));
    println!("content size: {} of {} worlds", e.content_size, e.worlds);
    println!("information:  {} bits", e.information);
    println!("atomic:       {}", if e.atomic { "yes" } else { "no" });
    println!("cnf:          {}", e.cnf);
    Ok(())
}

fn stage_exit(stage: Stage) -> u8 {
    match stage {
        Stage::Config => 2,
        Stage::Atomize => 3,
        Stage::Extract => 4,
        Stage::Kg => 5,
        Stage::Eval => 6,
    }
}

fn report(err: &anyhow::Error) -> ExitCode {
    eprintln!("error: {err:#}");
    match err.downcast_ref::<PipelineError>() {
        Some(e) => ExitCode::from(stage_exit(e.stage)),
        None => ExitCode::FAILURE,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::Atomize(a) => atomize(a),
        Command::Extract(a) => extract(a),
        Command::Kg(a) => kg(a),
        Command::Eval(a) => eval(a),
        Command::Pipeline(a) => pipeline(a).map_err(anyhow::Error::from),
        Command::Logic {
            command: LogicCommand::Eval { formula },
        } => logic_eval(&formula),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(&e),
    }
}
