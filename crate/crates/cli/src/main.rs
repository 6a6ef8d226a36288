use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;

use rankloss::config::CompareConfig;
use rankloss::data::{generate_synthetic, load_csv, read_score_csv, SyntheticSpec};
use rankloss::harness::{run_experiment, AggregateReport, ArmReport, Comparison};

const SEED_ENV: &str = "RANKLOSS_SEED";

#[derive(Parser)]
#[command(
    name = "rankloss",
    version,
    about = "Ranking losses and AUROC evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact AUROC of a score file, printed as JSON.
    Metric {
        #[arg(long)]
        input: PathBuf,
        #[arg(long = "label-col")]
        label_col: String,
        /// One score column per class; macro one-vs-rest AUROC.
        #[arg(long)]
        multiclass: bool,
    },
    /// Run a Monte Carlo comparison of loss arms and write a JSON manifest.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Overrides the split base seed (and RANKLOSS_SEED).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Write a synthetic dataset as CSV.
    Gen {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Exit status 2 for bad input or configuration, 3 for failures during a run.
enum Failure {
    Input(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Runtime(m) => m,
        }
    }
}

fn input<E: std::fmt::Display>(context: &str) -> impl FnOnce(E) -> Failure + '_ {
    move |e| Failure::Input(format!("{context}: {e}"))
}

#[derive(Serialize)]
struct RunManifest {
    version: &'static str,
    config: CompareConfig,
    arms: Vec<ArmReport>,
    comparisons: Vec<Comparison>,
    trial_seeds: Vec<u64>,
    duration_seconds: f64,
}

fn cmd_metric(path: &Path, label_col: &str, multiclass: bool) -> Result<(), Failure> {
    let file = std::fs::File::open(path).map_err(input(&path.display().to_string()))?;
    let table = read_score_csv(std::io::BufReader::new(file), label_col)
        .map_err(input(&path.display().to_string()))?;
    let report = table
        .auroc(multiclass)
        .map_err(input(&path.display().to_string()))?;
    let json = serde_json::to_string_pretty(&report).expect("serializable");
    println!("{json}");
    Ok(())
}

fn resolve_seed(cli_seed: Option<u64>) -> Result<Option<u64>, Failure> {
    if cli_seed.is_some() {
        return Ok(cli_seed);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Failure::Input(format!("{SEED_ENV}: not an unsigned integer: {v}"))),
        Err(_) => Ok(None),
    }
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.digits$}"))
}

fn print_summary(report: &AggregateReport) {
    let width = report
        .arms
        .iter()
        .map(|a| a.name.len())
        .max()
        .unwrap_or(3)
        .max(3);
    println!(
        "{:<width$}  {:>8}  {:>21}  {:>10}",
        "arm", "mean", "95% CI", "p vs first"
    );
    for (i, arm) in report.arms.iter().enumerate() {
        let ci = arm.ci.map_or_else(
            || "-".to_string(),
            |c| format!("[{:.4}, {:.4}]", c.low, c.high),
        );
        let p = if i == 0 {
            "-".to_string()
        } else {
            fmt_opt(report.comparisons[i - 1].p, 4)
        };
        println!(
            "{:<width$}  {:>8.4}  {:>21}  {:>10}",
            arm.name, arm.mean, ci, p
        );
    }
}

fn cmd_compare(
    config_path: &Path,
    out: &Path,
    jobs: usize,
    seed: Option<u64>,
) -> Result<(), Failure> {
    let mut config =
        CompareConfig::from_file(config_path).map_err(input(&config_path.display().to_string()))?;
    if let Some(seed) = resolve_seed(seed)? {
        config.split.base_seed = seed;
    }
    let dataset = config
        .load_dataset(config_path.parent())
        .map_err(input("dataset"))?;

    let started = Instant::now();
    let report = run_experiment(&dataset, &config.experiment(), jobs.max(1))
        .map_err(|e| Failure::Runtime(e.to_string()))?;
    let duration_seconds = started.elapsed().as_secs_f64();

    print_summary(&report);
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION"),
        config,
        arms: report.arms,
        comparisons: report.comparisons,
        trial_seeds: report.trial_seeds,
        duration_seconds,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("serializable");
    let mut file = std::fs::File::create(out)
        .map_err(|e| Failure::Runtime(format!("{}: {e}", out.display())))?;
    writeln!(file, "{json}").map_err(|e| Failure::Runtime(format!("{}: {e}", out.display())))?;
    Ok(())
}

fn cmd_gen(spec_path: &Path, out: &Path) -> Result<(), Failure> {
    let text =
        std::fs::read_to_string(spec_path).map_err(input(&spec_path.display().to_string()))?;
    let spec: SyntheticSpec =
        serde_json::from_str(&text).map_err(input(&spec_path.display().to_string()))?;
    let dataset = generate_synthetic(&spec).map_err(input(&spec_path.display().to_string()))?;
    dataset
        .save_csv(out)
        .map_err(|e| Failure::Runtime(format!("{}: {e}", out.display())))?;
    // confirm the file reloads before reporting success
    load_csv(out, "label").map_err(|e| Failure::Runtime(format!("{}: {e}", out.display())))?;
    eprintln!("wrote {} rows to {}", dataset.len(), out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Metric {
            input,
            label_col,
            multiclass,
        } => cmd_metric(input, label_col, *multiclass),
        Command::Compare {
            config,
            out,
            jobs,
            seed,
        } => cmd_compare(config, out, *jobs, *seed),
        Command::Gen { spec, out } => cmd_gen(spec, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
