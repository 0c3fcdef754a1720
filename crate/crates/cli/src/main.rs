//! `headroom`: generate traces, run experiment grids, analyze IPC matrices.
//!
//! Exit codes: 0 on success, 1 for invalid input or usage, 2 for I/O failures.
//! `HEADROOM_THREADS` sets the default worker count for `run` and `bias`.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use headroom_core::analytics::SubsetObjective;
use headroom_core::harness::{
    measure_truncation_bias, run_experiment, with_threads, ExperimentPlan,
};
use headroom_core::report::{
    analyze, bundle_json, read_bundle, render_tables, write_bundle, AnalyzeOptions, Precision,
};
use headroom_core::sim::{HierarchyConfig, PolicyConfig, TimingModel};
use headroom_core::trace::{generate_trace, read_trace, write_trace, SyntheticSpec, Trace};
use headroom_core::{Error, IpcMatrix, Result};

const THREADS_ENV: &str = "HEADROOM_THREADS";

#[derive(Parser)]
#[command(
    name = "headroom",
    version,
    about = "Cache/prefetch policy simulator and per-timestep oracle limit study"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate binary trace files from synthetic specs.
    Gen {
        /// Synthetic spec (TOML); repeatable.
        #[arg(long, required = true)]
        spec: Vec<PathBuf>,
        /// Output directory; each trace is named after its spec file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate every (benchmark, timestep, policy) cell of a plan.
    Run {
        #[arg(long)]
        plan: PathBuf,
        /// Matrix CSV to write.
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (default: $HEADROOM_THREADS, else all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Run every analysis on a matrix and write the report bundle.
    Analyze {
        #[arg(long)]
        matrix: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Decimal places for percentages, or `full`.
        #[arg(long, default_value = "2")]
        precision: String,
        /// Largest subset size to search.
        #[arg(long, default_value_t = 4)]
        max_k: usize,
        #[arg(long, value_enum, default_value_t = Objective::MeanLoss)]
        objective: Objective,
        /// Headroom threshold in percent.
        #[arg(long, default_value_t = 2.5)]
        threshold: f64,
    },
    /// Re-emit a report bundle.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        format: Format,
        /// Write files here instead of printing to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "2")]
        precision: String,
    },
    /// Compare cold-chunk and continuous IPC at several chunk lengths.
    Bias {
        /// Binary trace file, or a synthetic spec if it ends in `.toml`.
        #[arg(long)]
        trace: PathBuf,
        /// Policy id, e.g. `ip_stride/i_next_line/lru`.
        #[arg(long)]
        policy: String,
        /// Comma-separated chunk lengths.
        #[arg(long, value_delimiter = ',', required = true)]
        lengths: Vec<usize>,
        /// Take timing and hierarchy from this plan.
        #[arg(long)]
        plan: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long, default_value = "2")]
        precision: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Objective {
    MeanLoss,
    MeanIpc,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

fn threads(flag: Option<usize>) -> Result<Option<usize>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| {
            Error::Validation(format!(
                "{THREADS_ENV} must be a positive integer, got '{v}'"
            ))
        }),
        Err(_) => Ok(None),
    }
}

fn load_spec(path: &Path) -> Result<SyntheticSpec> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    SyntheticSpec::from_toml(&text)
}

fn stdout_write(text: &str) -> Result<()> {
    std::io::stdout()
        .lock()
        .write_all(text.as_bytes())
        .map_err(|source| Error::Io {
            path: PathBuf::from("<stdout>"),
            source,
        })
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Gen { spec, out } => {
            std::fs::create_dir_all(&out).map_err(|source| Error::Io {
                path: out.clone(),
                source,
            })?;
            for path in spec {
                let trace = generate_trace(&load_spec(&path)?)?;
                let stem = path.file_stem().unwrap_or(path.as_os_str());
                let dest = out.join(stem).with_extension("trace");
                write_trace(&trace, &dest)?;
                eprintln!("wrote {} ({} records)", dest.display(), trace.len());
            }
            Ok(())
        }
        Command::Run {
            plan,
            out,
            threads: t,
        } => {
            let plan = ExperimentPlan::load(&plan)?;
            let matrix = run_experiment(&plan, threads(t)?)?;
            matrix.save(&out)
        }
        Command::Analyze {
            matrix,
            out,
            precision,
            max_k,
            objective,
            threshold,
        } => {
            let precision: Precision = precision.parse()?;
            let matrix = IpcMatrix::load(&matrix)?;
            let opts = AnalyzeOptions {
                max_k,
                objective: match objective {
                    Objective::MeanLoss => SubsetObjective::MeanLoss,
                    Objective::MeanIpc => SubsetObjective::MeanIpc,
                },
                threshold,
                timestamp: std::env::var("SOURCE_DATE_EPOCH").ok(),
            };
            let bundle = analyze(&matrix, &opts)?;
            write_bundle(&bundle, &out, precision)
        }
        Command::Report {
            input,
            format,
            out,
            precision,
        } => {
            let precision: Precision = precision.parse()?;
            let bundle = read_bundle(&input)?;
            match (format, out) {
                (Format::Json, None) => stdout_write(&bundle_json(&bundle)),
                (Format::Csv, None) => {
                    let text: Vec<String> = render_tables(&bundle, precision)
                        .into_iter()
                        .map(|(name, csv)| format!("# {name}\n{csv}"))
                        .collect();
                    stdout_write(&text.join("\n"))
                }
                (Format::Json, Some(dir)) => {
                    std::fs::create_dir_all(&dir).map_err(|source| Error::Io {
                        path: dir.clone(),
                        source,
                    })?;
                    let path = dir.join(headroom_core::report::BUNDLE_FILE);
                    std::fs::write(&path, bundle_json(&bundle))
                        .map_err(|source| Error::Io { path, source })
                }
                (Format::Csv, Some(dir)) => write_bundle(&bundle, &dir, precision),
            }
        }
        Command::Bias {
            trace,
            policy,
            lengths,
            plan,
            threads: t,
            precision,
        } => {
            let precision: Precision = precision.parse()?;
            let policy: PolicyConfig = policy.parse()?;
            let (hierarchy, timing) = match plan {
                Some(p) => {
                    let plan = ExperimentPlan::load(&p)?;
                    (plan.hierarchy, plan.timing)
                }
                None => (HierarchyConfig::default(), TimingModel::default()),
            };
            let trace: Trace = if trace.extension().is_some_and(|e| e == "toml") {
                generate_trace(&load_spec(&trace)?)?
            } else {
                read_trace(&trace)?
            };
            let points = with_threads(threads(t)?, || {
                measure_truncation_bias(&trace, &policy, &hierarchy, &timing, &lengths)
            })??;
            let mut text = String::from("chunk_len,chunks,gap_pct\n");
            for p in points {
                text.push_str(&format!(
                    "{},{},{}\n",
                    p.chunk_len,
                    p.chunks,
                    precision.pct(p.gap_percent)
                ));
            }
            stdout_write(&text)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}
