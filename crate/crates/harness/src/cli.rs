//! Command-line interface.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use reasoneval_core::deduction::{censor_terms, censor_trace, retrieve_top_k};
use reasoneval_core::findings::FlipMode;
use reasoneval_core::kb::{build_index, clean_corpus, ingest_corpus, Cleaner, KnowledgeBase};
use serde::Serialize;

use crate::config::{Config, ConfigError};
use crate::emit::{emit_report, Format};
use crate::manifest::{Manifest, ManifestRow};
use crate::report::{RunMode, RunReport};
use crate::runner::{Retrieval, Runner};
use crate::split::split_dataset;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_ALL_FAILED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "reasoneval", version, about = "Score the perception and deduction of ECG reasoning traces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct Common {
    /// JSON config file; flags below override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (defaults to REASONEVAL_WORKERS, then the core count).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args, Clone)]
pub struct Output {
    /// Directory receiving report.{json,csv,svg}.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "json,csv,svg")]
    pub format: Vec<Format>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score model reasoning traces: perception, deduction and final answers.
    Eval {
        #[arg(long)]
        manifest: PathBuf,
        /// Knowledge base directory (overrides `kb_dir` in the config).
        #[arg(long)]
        kb: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        ks: Option<Vec<usize>>,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        output: Output,
    },
    /// Verify annotated notes against their records.
    AssessSupporting {
        #[arg(long)]
        manifest: PathBuf,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        output: Output,
    },
    /// Flip every note's findings and verify the flipped claims.
    AssessAdversarial {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        flip: Option<FlipMode>,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        output: Output,
    },
    /// Build or query a diagnostic-criteria knowledge base.
    Kb {
        #[command(subcommand)]
        action: KbCommand,
    },
    /// Seeded validation/test split of a manifest.
    Split {
        #[arg(long)]
        manifest: PathBuf,
        /// Fraction of rows in the validation split.
        #[arg(long)]
        ratio: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory receiving val.jsonl and test.jsonl.
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a saved report and re-emit it in other formats.
    Report {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Write a synthetic dataset (records plus manifest).
    Synth {
        #[arg(long, default_value_t = 12)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum KbCommand {
    /// Ingest a Markdown corpus, clean it and index it.
    Build {
        /// Corpus root; the first directory level names the source.
        #[arg(long)]
        corpus: PathBuf,
        /// JSON object mapping each label to its files, relative to the corpus root.
        #[arg(long)]
        label_map: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Retrieve the entries closest to a text.
    Query {
        #[arg(long)]
        kb: PathBuf,
        #[arg(long)]
        text: String,
        #[arg(short, long, default_value_t = 5)]
        k: usize,
        /// Labels to censor from the text first.
        #[arg(long)]
        censor: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("all {0} rows failed")]
    AllFailed(usize),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::AllFailed(_) => EXIT_ALL_FAILED,
            CliError::Other(_) => EXIT_FAILURE,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

fn config_err(e: impl ToString) -> CliError {
    CliError::Config(e.to_string())
}

fn other(e: impl ToString) -> CliError {
    CliError::Other(e.to_string())
}

fn load_config(common: &Common) -> Result<Config, CliError> {
    let mut cfg = match &common.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(w) = common.workers {
        cfg.workers = Some(w);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_json<T: Serialize>(v: &T) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn finish(report: &RunReport, output: &Output) -> Result<(), CliError> {
    let written = emit_report(report, &output.out, &output.format).map_err(other)?;
    for p in &written {
        log::info!("wrote {}", p.display());
    }
    print_json(&report.aggregates.overall);
    if report.n_succeeded() == 0 {
        return Err(CliError::AllFailed(report.traces.len()));
    }
    Ok(())
}

fn assess(manifest: &Path, common: &Common, flip: Option<FlipMode>, mode: RunMode, output: &Output) -> Result<(), CliError> {
    let mut cfg = load_config(common)?;
    if let Some(f) = flip {
        cfg.flip = f;
    }
    let manifest = Manifest::load(manifest).map_err(config_err)?;
    let assets = cfg.assets()?;
    let runner = Runner { config: &cfg, assets: &assets, retrieval: None, workers: cfg.resolve_workers()? };
    finish(&runner.run(mode, &manifest), output)
}

fn kb_build(corpus: &Path, label_map: &Path, out: &Path, common: &Common) -> Result<(), CliError> {
    let cfg = load_config(common)?;
    let assets = cfg.assets()?;
    let text = std::fs::read_to_string(label_map).map_err(|e| config_err(format!("{}: {e}", label_map.display())))?;
    let map: BTreeMap<String, Vec<PathBuf>> = serde_json::from_str(&text).map_err(|e| config_err(format!("label map: {e}")))?;
    let ingested = ingest_corpus(corpus, &map, &assets.vocabulary).map_err(config_err)?;
    for w in &ingested.warnings {
        log::warn!("{w}");
    }
    let cleaners = cfg.cleaners();
    let refs: Vec<&dyn Cleaner> = cleaners.iter().map(|c| c.as_ref()).collect();
    let outcome = clean_corpus(&ingested.articles, &cfg.strategies, &refs);
    let embedder = cfg.embedder();
    let kb = build_index(outcome.entries, embedder.as_ref()).map_err(other)?;
    kb.save(out).map_err(other)?;
    print_json(&serde_json::json!({
        "articles": ingested.articles.len(),
        "entries": kb.len(),
        "clean_failures": outcome.failures,
        "warnings": ingested.warnings,
        "embedder_fingerprint": kb.embedder_fingerprint(),
    }));
    Ok(())
}

fn kb_query(kb_dir: &Path, text: &str, k: usize, censor: &[String], common: &Common) -> Result<(), CliError> {
    let cfg = load_config(common)?;
    let assets = cfg.assets()?;
    let kb = KnowledgeBase::load(kb_dir).map_err(config_err)?;
    let embedder = cfg.embedder();
    if embedder.fingerprint() != kb.embedder_fingerprint() {
        return Err(config_err(format!(
            "knowledge base was built with `{}`, config selects `{}`",
            kb.embedder_fingerprint(),
            embedder.fingerprint()
        )));
    }
    let text = censor_trace(text, &censor_terms(censor, &[], &assets.synonyms));
    let q = embedder.embed(&text).map_err(other)?;
    if !q.valid {
        return Err(other("query has no content left to embed"));
    }
    let hits = retrieve_top_k(&kb, &q.vector, k.min(kb.len())).map_err(other)?;
    print_json(&hits);
    Ok(())
}

fn eval(manifest: &Path, kb: Option<&Path>, ks: Option<Vec<usize>>, common: &Common, output: &Output) -> Result<(), CliError> {
    let mut cfg = load_config(common)?;
    if let Some(ks) = ks {
        cfg.ks = ks;
        cfg.validate()?;
    }
    let kb_dir = kb.map(Path::to_path_buf).or_else(|| cfg.kb_dir.clone()).ok_or_else(|| config_err("no knowledge base given"))?;
    let kb = KnowledgeBase::load(&kb_dir).map_err(config_err)?;
    let embedder = cfg.embedder();
    if embedder.fingerprint() != kb.embedder_fingerprint() {
        return Err(config_err(format!(
            "knowledge base was built with `{}`, config selects `{}`",
            kb.embedder_fingerprint(),
            embedder.fingerprint()
        )));
    }
    let manifest = Manifest::load(manifest).map_err(config_err)?;
    let assets = cfg.assets()?;
    let runner = Runner {
        config: &cfg,
        assets: &assets,
        retrieval: Some(Retrieval { kb: &kb, embedder: embedder.as_ref() }),
        workers: cfg.resolve_workers()?,
    };
    finish(&runner.run(RunMode::Eval, &manifest), output)
}

fn write_rows(path: &Path, rows: &[ManifestRow]) -> Result<(), CliError> {
    std::fs::write(path, Manifest::to_jsonl(rows)).map_err(|e| other(format!("{}: {e}", path.display())))
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Eval { manifest, kb, ks, common, output } => eval(&manifest, kb.as_deref(), ks, &common, &output),
        Command::AssessSupporting { manifest, common, output } => {
            assess(&manifest, &common, None, RunMode::AssessSupporting, &output)
        }
        Command::AssessAdversarial { manifest, flip, common, output } => {
            assess(&manifest, &common, flip, RunMode::AssessAdversarial, &output)
        }
        Command::Kb { action: KbCommand::Build { corpus, label_map, out, common } } => kb_build(&corpus, &label_map, &out, &common),
        Command::Kb { action: KbCommand::Query { kb, text, k, censor, common } } => {
            if k == 0 {
                return Err(config_err("k must be at least 1"));
            }
            kb_query(&kb, &text, k, &censor, &common)
        }
        Command::Split { manifest, ratio, seed, out } => {
            let m = Manifest::load(&manifest).map_err(config_err)?;
            let (val, test) = split_dataset(&m.rows, ratio, seed).map_err(config_err)?;
            std::fs::create_dir_all(&out).map_err(other)?;
            write_rows(&out.join("val.jsonl"), &val)?;
            write_rows(&out.join("test.jsonl"), &test)?;
            print_json(&serde_json::json!({ "val": val.len(), "test": test.len() }));
            Ok(())
        }
        Command::Report { input, output } => {
            let report = RunReport::load(&input).map_err(config_err)?;
            emit_report(&report, &output.out, &output.format).map_err(other)?;
            print_json(&report.aggregates.overall);
            Ok(())
        }
        Command::Synth { n, seed, out } => {
            let path = crate::synth::write_synthetic_dataset(&out, n, seed).map_err(other)?;
            println!("{}", path.display());
            Ok(())
        }
    }
}

/// Parse `args`, run, and map the outcome to a process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
