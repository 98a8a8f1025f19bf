use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bpb::augment::{augment, AugmentConfig};
use bpb::dataset::{self, Format};
use bpb::http::{ClientConfig, HttpClient};
use bpb::pipeline::{self, Backends, GenerateConfig, GeneratedRecord};
use bpb::stub::{MissMode, StubBackend};
use bpb::{export, DataError};
use bpb_core::metrics::{build_report, ContrastGroup, GenerationLog, MetricsError};
use bpb_core::{EvaluatorConfig, RcBackend};
use clap::{Parser, Subcommand};
use serde::Deserialize;

#[derive(Parser)]
#[command(
    name = "bpb",
    version,
    about = "Contrast sets and answer constraints for reading comprehension"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Perturb, realize and answer every input record.
    Generate(GenerateArgs),
    /// Score predictions over contrast groups.
    Evaluate(EvaluateArgs),
    /// Append capped samples of generated records to a training set.
    Augment(AugmentArgs),
    /// Write a stratified sample for manual validation.
    ExportValidation(ExportArgs),
}

#[derive(clap::Args)]
struct GenerateArgs {
    #[arg(long)]
    input: PathBuf,
    /// drop, hotpotqa, iirc or generic-jsonl.
    #[arg(long)]
    format: String,
    /// Where decompositions come from: break-csv (gold, from --break-csv or
    /// the input records) or backend (--parser-backend).
    #[arg(long, default_value = "break-csv")]
    qdmr: String,
    #[arg(long)]
    break_csv: Option<PathBuf>,
    #[arg(long)]
    parser_backend: Option<String>,
    /// A service URL, stub:<fixtures.json> or stub-strict:<fixtures.json>.
    #[arg(long)]
    rc_backend: String,
    /// A service URL or off.
    #[arg(long, default_value = "off")]
    qg_backend: String,
    #[arg(long, default_value = "all")]
    perturbations: String,
    #[arg(long, env = "BPB_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = EvaluatorConfig::DEFAULT_MAX_ANSWER_WORDS)]
    max_answer_words: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    log: PathBuf,
    /// Also write one contrast group per input record.
    #[arg(long)]
    groups: Option<PathBuf>,
}

#[derive(clap::Args)]
struct EvaluateArgs {
    #[arg(long)]
    groups: PathBuf,
    /// JSONL of {"id", "prediction"}.
    #[arg(long)]
    predictions: PathBuf,
    #[arg(long)]
    report: PathBuf,
    /// Generation log to include in the report.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(clap::Args)]
struct AugmentArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    generated: PathBuf,
    #[arg(long)]
    tau: f64,
    #[arg(long, env = "BPB_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct ExportArgs {
    #[arg(long)]
    generated: PathBuf,
    #[arg(long)]
    cap: usize,
    #[arg(long, env = "BPB_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

enum Failure {
    Usage(String),
    Data(String),
    Backend(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Backend(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Backend(m) => m,
        }
    }
}

impl From<DataError> for Failure {
    fn from(e: DataError) -> Self {
        match e {
            DataError::UnknownFormat(_) | DataError::Config(_) => Failure::Usage(e.to_string()),
            other => Failure::Data(other.to_string()),
        }
    }
}

impl From<MetricsError> for Failure {
    fn from(e: MetricsError) -> Self {
        Failure::Data(e.to_string())
    }
}

fn http_client(url: &str, role: &str) -> Result<HttpClient, Failure> {
    let client = HttpClient::new(url, ClientConfig::default());
    client
        .health()
        .map_err(|e| Failure::Backend(format!("{role} backend health check failed: {e}")))?;
    Ok(client)
}

enum Rc {
    Stub(StubBackend),
    Http(HttpClient),
}

impl Rc {
    fn open(spec: &str) -> Result<Rc, Failure> {
        if let Some(path) = spec.strip_prefix("stub-strict:") {
            return Ok(Rc::Stub(StubBackend::from_file(Path::new(path), MissMode::Strict)?));
        }
        if let Some(path) = spec.strip_prefix("stub:") {
            return Ok(Rc::Stub(StubBackend::from_file(Path::new(path), MissMode::Lenient)?));
        }
        if spec.starts_with("http://") || spec.starts_with("https://") {
            return Ok(Rc::Http(http_client(spec, "rc")?));
        }
        Err(Failure::Usage(format!(
            "--rc-backend must be a URL, stub:<path> or stub-strict:<path>, got {spec:?}"
        )))
    }

    fn backend(&self) -> &(dyn RcBackend + Sync) {
        match self {
            Rc::Stub(s) => s,
            Rc::Http(h) => h,
        }
    }
}

fn run_generate(args: GenerateArgs) -> Result<(), Failure> {
    let format: Format = args.format.parse()?;
    let kinds = pipeline::parse_kinds(&args.perturbations)?;
    let evaluator = EvaluatorConfig::new(args.max_answer_words).map_err(|e| Failure::Usage(e.to_string()))?;
    let mut records = dataset::load_dataset(&args.input, format)?;

    let parser = match args.qdmr.as_str() {
        "break-csv" => {
            if let Some(path) = &args.break_csv {
                let qdmr = dataset::load_break_csv(path)?;
                let attached = dataset::attach_qdmr(&mut records, &qdmr);
                eprintln!("attached {attached} decompositions from {}", path.display());
            }
            None
        }
        "backend" => {
            let url = args
                .parser_backend
                .as_deref()
                .ok_or_else(|| Failure::Usage("--qdmr backend needs --parser-backend <url>".into()))?;
            Some(http_client(url, "parser")?)
        }
        other => {
            return Err(Failure::Usage(format!(
                "--qdmr must be break-csv or backend, got {other:?}"
            )))
        }
    };
    let rc = Rc::open(&args.rc_backend)?;
    let qg = match args.qg_backend.as_str() {
        "off" => None,
        url => Some(http_client(url, "qg")?),
    };

    let backends = Backends {
        rc: rc.backend(),
        qg: qg.as_ref().map(|q| q as _),
        parser: parser.as_ref().map(|p| p as _),
    };
    let cfg = GenerateConfig {
        kinds,
        evaluator,
        seed: args.seed,
    };
    let (generated, log) = pipeline::generate(&records, backends, &cfg);
    pipeline::write_jsonl(&args.out, &generated)?;
    pipeline::write_json(&args.log, &log)?;
    if let Some(path) = &args.groups {
        pipeline::write_jsonl(path, &pipeline::contrast_groups(&records, &generated))?;
    }
    let t = log.totals();
    eprintln!(
        "{} records ({} skipped): {} candidates, {} realized, {} answered, {} constraint-only, {} discarded",
        log.records,
        log.records_skipped,
        t.candidates,
        t.realized,
        t.answered(),
        t.constraint_only,
        t.discarded
    );
    if let Rc::Stub(s) = &rc {
        let misses = s.misses().len();
        if misses > 0 {
            eprintln!("{misses} stub fixture misses");
        }
    }
    Ok(())
}

#[derive(Deserialize)]
struct PredictionRow {
    id: String,
    prediction: String,
}

fn run_evaluate(args: EvaluateArgs) -> Result<(), Failure> {
    let groups: Vec<ContrastGroup> = pipeline::read_jsonl(&args.groups)?;
    let rows: Vec<PredictionRow> = pipeline::read_jsonl(&args.predictions)?;
    let predictions: BTreeMap<String, String> = rows.into_iter().map(|r| (r.id, r.prediction)).collect();
    let log: GenerationLog = match &args.log {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
            serde_json::from_str(&text).map_err(|e| DataError::schema(path, e.line(), e))?
        }
        None => GenerationLog::default(),
    };
    let report = build_report(&groups, &predictions, &log)?;
    pipeline::write_json(&args.report, &report)?;
    print!("{}", report.render_table());
    Ok(())
}

fn run_augment(args: AugmentArgs) -> Result<(), Failure> {
    let cfg = AugmentConfig::new(args.tau, args.seed)?;
    let train = dataset::load_dataset(&args.train, Format::GenericJsonl)?;
    let generated: Vec<GeneratedRecord> = pipeline::read_jsonl(&args.generated)?;
    let out = augment(&train, &generated, &cfg);
    dataset::write_generic_jsonl(&args.out, &out)?;
    eprintln!(
        "{} training records, {} added (cap {} per perturbation)",
        train.len(),
        out.len() - train.len(),
        cfg.cap(train.len())
    );
    Ok(())
}

fn run_export(args: ExportArgs) -> Result<(), Failure> {
    let generated: Vec<GeneratedRecord> = pipeline::read_jsonl(&args.generated)?;
    let n = export::export_validation(&args.out, &generated, args.cap, args.seed)?;
    eprintln!("{n} rows written to {}", args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Generate(a) => run_generate(a),
        Command::Evaluate(a) => run_evaluate(a),
        Command::Augment(a) => run_augment(a),
        Command::ExportValidation(a) => run_export(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("bpb: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
