use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use odhyp_core::pipeline::{self, Command, PipelineConfig};
use odhyp_core::{Error, Strategy};
use serde_json::json;

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

/// Find and rank integration hypotheses in a corpus of published tables.
#[derive(Parser, Debug)]
#[command(name = "odhyp", version)]
struct Cli {
    #[command(subcommand)]
    command: Stage,

    /// Pipeline config (JSON). Relative paths inside it are resolved
    /// against its directory. Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; overrides `output_dir`.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Match-stage worker threads; overrides `worker_count`.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Generator seed for `synth`; overrides `synth.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// most-likely or most-uncertain; overrides `ranking.strategy`.
    #[arg(long, global = true, value_parser = parse_strategy)]
    strategy: Option<Strategy>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Stage {
    /// Load and filter the corpus; writes filtered.jsonl.
    Ingest,
    /// Compare all dataset pairs; writes matches.jsonl and stats.json.
    Match,
    /// Detect hypotheses; writes hypotheses.jsonl and counts.csv.
    Detect,
    /// Rank hypotheses; writes ranking.csv and distributions.csv.
    Rank,
    /// Generate a synthetic corpus and its ground truth.
    Synth,
    /// Score hypotheses against ground truth; writes evaluation.csv.
    Evaluate,
    /// Ingest, match, detect, rank, and evaluate if ground truth exists.
    Pipeline,
}

impl From<Stage> for Command {
    fn from(s: Stage) -> Self {
        match s {
            Stage::Ingest => Command::Ingest,
            Stage::Match => Command::Match,
            Stage::Detect => Command::Detect,
            Stage::Rank => Command::Rank,
            Stage::Synth => Command::Synth,
            Stage::Evaluate => Command::Evaluate,
            Stage::Pipeline => Command::Pipeline,
        }
    }
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn effective_config(cli: &Cli) -> Result<PipelineConfig, Error> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(out) = &cli.output {
        cfg.output_dir = out.clone();
    }
    if let Some(w) = cli.workers {
        cfg.worker_count = Some(w);
    }
    if let Some(seed) = cli.seed {
        cfg.synth.seed = seed;
    }
    if let Some(s) = cli.strategy {
        cfg.ranking.strategy = s;
    }
    Ok(cfg)
}

fn exit_code(e: &Error) -> u8 {
    if e.is_data_error() {
        EXIT_DATA
    } else {
        EXIT_USAGE
    }
}

fn report_error(command: Option<Command>, kind: &str, message: &str, code: u8) -> ExitCode {
    let record = json!({
        "status": "error",
        "command": command.map(Command::as_str),
        "kind": kind,
        "message": message,
        "exit_code": code,
    });
    eprintln!("{record}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return report_error(None, "usage", e.to_string().trim_end(), EXIT_USAGE),
    };
    let command = Command::from(cli.command);

    let cfg = match effective_config(&cli) {
        Ok(cfg) => cfg,
        Err(e) => return report_error(Some(command), e.kind(), &e.to_string(), exit_code(&e)),
    };

    // Panics are reported as internal errors rather than aborting with
    // Rust's default message.
    panic::set_hook(Box::new(|_| {}));
    match panic::catch_unwind(AssertUnwindSafe(|| pipeline::run(command, &cfg))) {
        Ok(Ok(report)) => {
            for p in report.outputs {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Ok(Err(e)) => report_error(Some(command), e.kind(), &e.to_string(), exit_code(&e)),
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            report_error(Some(command), "internal", &message, EXIT_INTERNAL)
        }
    }
}
