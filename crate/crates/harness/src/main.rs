use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dynkmedian_harness::jobs::{
    self, check_stream, run_stream, ConfigOverrides, RunOptions, RunSummary,
};
use dynkmedian_harness::stream::{generate, StreamFile, StreamKind};

#[derive(Parser)]
#[command(
    name = "dynkmedian",
    about = "Dynamic k-median benchmark and verification harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a deterministic update stream.
    Gen {
        #[arg(long, value_enum)]
        kind: StreamKind,
        /// Ground-pool size (maximum live points).
        #[arg(long)]
        n_max: usize,
        /// Number of events.
        #[arg(long)]
        t: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replay a stream through the engine, writing per-step CSV metrics and
    /// a JSON summary.
    Run {
        #[arg(long)]
        stream: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON file with engine-constant overrides.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Use the analysis constants instead of the practical defaults.
        #[arg(long, conflicts_with = "practical")]
        paper_constants: bool,
        /// Use the practical constants (the default).
        #[arg(long)]
        practical: bool,
        /// Plug exact subroutines (enumeration within budget).
        #[arg(long)]
        exact: bool,
        /// Steps between objective estimates.
        #[arg(long, default_value_t = 25)]
        monitor_interval: usize,
        /// Subset budget for exact oracles.
        #[arg(long, default_value_t = dynkmedian::oracles::DEFAULT_ENUMERATION_BUDGET)]
        budget: u64,
        /// Write zeros to the wall-time column (byte-stable CSV).
        #[arg(long)]
        no_wall_time: bool,
        /// CSV output path.
        #[arg(long)]
        out: PathBuf,
        /// JSON summary path (defaults to `<out>.summary.json`).
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Replay a stream with exact subroutines, asserting every guarantee
    /// against brute-force oracles. Exit code 1 on any assertion failure.
    Check {
        #[arg(long)]
        stream: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = dynkmedian::oracles::DEFAULT_ENUMERATION_BUDGET)]
        budget: u64,
    },
    /// Aggregate run summaries into a comparison table.
    Report {
        /// JSON summary files.
        inputs: Vec<PathBuf>,
        /// Optional output path (stdout otherwise).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match dispatch() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch() -> anyhow::Result<ExitCode> {
    match Cli::parse().command {
        Command::Gen {
            kind,
            n_max,
            t,
            seed,
            out,
        } => {
            anyhow::ensure!(t >= 1, "need at least one event");
            let stream = generate(kind, n_max, t, seed);
            stream.write(&out)?;
            eprintln!("wrote {} events to {}", stream.events.len(), out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Run {
            stream,
            k,
            seed,
            config,
            paper_constants,
            practical: _,
            exact,
            monitor_interval,
            budget,
            no_wall_time,
            out,
            summary,
        } => {
            let file = StreamFile::read(&stream)?;
            let base = stream.parent().unwrap_or(std::path::Path::new("."));
            let opts = RunOptions {
                k,
                seed,
                paper_constants,
                exact,
                monitor_interval,
                zero_time: no_wall_time,
                budget,
            };
            let overrides = match config {
                Some(p) => ConfigOverrides::load(&p)?,
                None => ConfigOverrides::default(),
            };
            let (records, run_summary) = run_stream(&file, base, &opts, &overrides)?;
            std::fs::write(&out, jobs::to_csv(&records))?;
            let summary_path = summary.unwrap_or_else(|| {
                let mut p = out.clone();
                p.set_extension("summary.json");
                p
            });
            std::fs::write(
                &summary_path,
                serde_json::to_string_pretty(&run_summary)?,
            )?;
            eprintln!(
                "{} steps, amortized recourse {:.3}, wrote {} and {}",
                run_summary.steps,
                run_summary.amortized_recourse,
                out.display(),
                summary_path.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Check {
            stream,
            k,
            seed,
            config,
            budget,
        } => {
            let file = StreamFile::read(&stream)?;
            let base = stream.parent().unwrap_or(std::path::Path::new("."));
            let opts = RunOptions {
                k,
                seed,
                budget,
                ..RunOptions::default()
            };
            let overrides = match config {
                Some(p) => ConfigOverrides::load(&p)?,
                None => ConfigOverrides::default(),
            };
            let report = check_stream(&file, base, &opts, &overrides)?;
            print!("{}", report.render());
            Ok(if report.ok() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Report { inputs, out } => {
            anyhow::ensure!(!inputs.is_empty(), "no summary files given");
            let mut rows = Vec::new();
            for path in &inputs {
                let text = std::fs::read_to_string(path)?;
                let summary: RunSummary = serde_json::from_str(&text)?;
                let name = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| path.display().to_string());
                rows.push((name, summary));
            }
            let table = jobs::report_table(&rows);
            match out {
                Some(p) => std::fs::write(p, table)?,
                None => print!("{table}"),
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
