use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pba_cli::{export_curve, run_analysis, AnalysisConfig, ConfigError, Curve, RunOptions};
use pba_core::{ModelRegistry, Summary};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "pba", version, about = "Probability bounds analysis from minimal data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipeline described by a config file.
    Run {
        config: PathBuf,
        #[arg(long, env = "PBA_SEED")]
        seed: Option<u64>,
        /// Worker threads; 0 uses every core, 1 runs sequentially.
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Write the bounding curves of a p-box built from summary statistics.
    Pbox {
        #[arg(long, allow_negative_numbers = true)]
        min: f64,
        #[arg(long, allow_negative_numbers = true)]
        max: f64,
        #[arg(long, allow_negative_numbers = true)]
        median: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        mean: Option<f64>,
        #[arg(long)]
        std: Option<f64>,
        #[arg(long, default_value_t = 201)]
        grid: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn failure(kind: &str, message: String, extra: Value) -> ExitCode {
    let mut record = json!({ "error": kind, "message": message });
    if let (Value::Object(r), Value::Object(e)) = (&mut record, extra) {
        r.extend(e);
    }
    eprintln!("{record}");
    ExitCode::from(if kind == "ConfigParseError" { 2 } else { 1 })
}

fn config_failure(e: ConfigError) -> ExitCode {
    let extra = match &e {
        ConfigError::Syntax { line, column, .. } => json!({ "line": line, "column": column }),
        ConfigError::Invalid { path, .. } => json!({ "path": path }),
    };
    failure("ConfigParseError", e.to_string(), extra)
}

fn run(config: PathBuf, seed: Option<u64>, threads: Option<usize>, out: PathBuf) -> ExitCode {
    let text = match std::fs::read_to_string(&config) {
        Ok(t) => t,
        Err(e) => return failure("IoError", format!("reading {}: {e}", config.display()), json!({})),
    };
    let analysis = match AnalysisConfig::parse(&text).and_then(|c| c.resolve(&ModelRegistry::with_builtins())) {
        Ok(a) => a,
        Err(e) => return config_failure(e),
    };
    let opts = RunOptions {
        seed,
        threads,
        out_dir: out,
    };
    let start = std::time::Instant::now();
    match run_analysis(&analysis, &opts) {
        Ok(_) => {
            eprintln!(
                "wrote {} in {:.2}s",
                opts.out_dir.display(),
                start.elapsed().as_secs_f64()
            );
            ExitCode::SUCCESS
        }
        Err(e) => failure(e.kind(), e.to_string(), json!({})),
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run {
            config,
            seed,
            threads,
            out,
        } => run(config, seed, threads, out),
        Command::Pbox {
            min,
            max,
            median,
            mean,
            std,
            grid,
            out,
        } => {
            let s = Summary {
                min,
                max,
                median,
                mean,
                std,
            };
            let p = match s.to_pbox() {
                Ok(p) => p,
                Err(e) => return failure("PBoxError", e.to_string(), json!({})),
            };
            match export_curve(Curve::Analytic(&p), grid, None, &out) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => failure(e.kind(), e.to_string(), json!({})),
            }
        }
    }
}
