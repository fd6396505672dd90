//! Command-line front end: builds and verifies group structures, tabulates
//! eigenvalues and sandwich bounds, simulates the hypoelliptic diffusion,
//! estimates the spectral gap, and joins recorded runs into reports.

mod commands;
mod config;
mod registry;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};

use commands::{CliError, CommandOutput};
use config::ConfigFile;
use registry::{run_id, Registry, RunRecord, REGISTRY_FORMAT_VERSION};

#[derive(Parser)]
#[command(
    name = "hgap",
    version,
    about = "H-type group spectral gap toolkit",
    propagate_version = true
)]
struct Cli {
    /// Cap worker threads (default: all cores; env HGAP_THREADS)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Config file with [command] sections of key = value lines; flags win
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Append-only JSON-lines run registry
    #[arg(long, global = true, default_value = "hgap_runs.jsonl")]
    registry: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the Hurwitz-Radon function rho(m)
    Radon {
        #[arg(long)]
        m: Option<usize>,
    },
    /// Build the canonical generator family for an admissible (m, n)
    Build {
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        /// Structure JSON output path (stdout if omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verify a structure file axiom by axiom
    Verify {
        #[arg(long)]
        structure: Option<PathBuf>,
    },
    /// Tabulate Dirichlet eigenvalues of the unit ball for d = 1..=d_max
    Eigen {
        #[arg(long = "d-max")]
        d_max: Option<usize>,
        /// csv (default) or json
        #[arg(long)]
        format: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed-form sandwich bounds for one pair or a sweep over m
    Bounds {
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        /// Emit the ratio table over --m-list instead of a single pair
        #[arg(long)]
        sweep: bool,
        #[arg(long = "m-list")]
        m_list: Option<String>,
        #[arg(long)]
        format: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate terminal samples (CSV) and optionally full paths (binary)
    Simulate {
        #[arg(long)]
        structure: Option<PathBuf>,
        /// Euclidean calibration mode of the given dimension instead of a
        /// structure file
        #[arg(long)]
        euclidean: Option<usize>,
        /// Horizon (default 1)
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        paths: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write every trajectory to this little-endian binary file
        #[arg(long = "full-paths")]
        full_paths: Option<PathBuf>,
    },
    /// Estimate the spectral gap and check it against the bounds
    EstimateGap {
        #[arg(long)]
        structure: Option<PathBuf>,
        #[arg(long)]
        euclidean: Option<usize>,
        /// exit, smalldev, or both (default both)
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        paths: Option<u64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated epsilon grid for the small-deviation curve
        #[arg(long = "eps-grid")]
        eps_grid: Option<String>,
        /// Exit-time horizon (default 6)
        #[arg(long = "t-max")]
        t_max: Option<f64>,
        /// Report JSON path
        #[arg(long)]
        out: Option<PathBuf>,
        /// Flat curve dump (kind, abscissa, estimate, ci_low, ci_high)
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Time-change diagnostics of the area components at T = 1
    CheckLemma {
        #[arg(long)]
        structure: Option<PathBuf>,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// KS significance level (default 0.01)
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Join recorded runs into a consolidated report
    Report {
        /// Comma-separated run ids (prefixes accepted)
        #[arg(long)]
        runs: Option<String>,
        /// Wildcard over run ids, e.g. '*'
        #[arg(long)]
        glob: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Radon { .. } => "radon",
            Command::Build { .. } => "build",
            Command::Verify { .. } => "verify",
            Command::Eigen { .. } => "eigen",
            Command::Bounds { .. } => "bounds",
            Command::Simulate { .. } => "simulate",
            Command::EstimateGap { .. } => "estimate-gap",
            Command::CheckLemma { .. } => "check-lemma",
            Command::Report { .. } => "report",
        }
    }
}

fn emit_error(kind: &str, message: &str) {
    eprintln!(
        "{}",
        serde_json::json!({ "error": { "kind": kind, "message": message } })
    );
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not errors.
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) {
                print!("{e}");
                std::process::exit(0);
            }
            emit_error("validation", &e.to_string());
            std::process::exit(1);
        }
    };

    let threads = cli.threads.or_else(|| {
        std::env::var("HGAP_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(k) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            emit_error("validation", &format!("cannot configure {k} threads: {e}"));
            std::process::exit(1);
        }
    }

    let config = match &cli.config {
        Some(path) => match ConfigFile::load(path) {
            Ok(c) => c,
            Err(e) => {
                emit_error("validation", &e);
                std::process::exit(1);
            }
        },
        None => ConfigFile::default(),
    };
    let section = config.section(cli.command.name());
    let registry = Registry::new(cli.registry.clone());

    let started = Instant::now();
    let command_name = cli.command.name();
    let result: Result<CommandOutput, CliError> = match cli.command {
        Command::Radon { m } => commands::cmd_radon(m, section),
        Command::Build { m, n, out } => commands::cmd_build(m, n, out, section),
        Command::Verify { structure } => commands::cmd_verify(structure, section),
        Command::Eigen { d_max, format, out } => commands::cmd_eigen(d_max, format, out, section),
        Command::Bounds {
            m,
            n,
            sweep,
            m_list,
            format,
            out,
        } => commands::cmd_bounds(m, n, sweep, m_list, format, out, section),
        Command::Simulate {
            structure,
            euclidean,
            t,
            dt,
            paths,
            seed,
            out,
            full_paths,
        } => commands::cmd_simulate(
            structure, euclidean, t, dt, paths, seed, out, full_paths, section,
        ),
        Command::EstimateGap {
            structure,
            euclidean,
            method,
            paths,
            dt,
            seed,
            eps_grid,
            t_max,
            out,
            csv,
        } => commands::cmd_estimate_gap(
            structure, euclidean, method, paths, dt, seed, eps_grid, t_max, out, csv, section,
        ),
        Command::CheckLemma {
            structure,
            samples,
            dt,
            seed,
            alpha,
            out,
        } => commands::cmd_check_lemma(structure, samples, dt, seed, alpha, out, section),
        Command::Report {
            runs,
            glob,
            out,
            csv,
        } => commands::cmd_report(runs, glob, out, csv, &registry, section),
    };

    match result {
        Ok(output) => {
            if let Some(text) = &output.stdout {
                if text.ends_with('\n') {
                    print!("{text}");
                } else {
                    println!("{text}");
                }
            }
            let record = RunRecord {
                format_version: REGISTRY_FORMAT_VERSION,
                run_id: run_id(command_name, &output.params, output.seed),
                command: command_name.to_string(),
                params: output.params,
                seed: output.seed,
                version: env!("CARGO_PKG_VERSION").to_string(),
                wall_ms: started.elapsed().as_millis() as u64,
                outputs: commands::manifest(&output.outputs),
            };
            if let Err(e) = registry.append(&record) {
                emit_error("computation", &format!("cannot append run registry: {e}"));
                std::process::exit(2);
            }
            std::process::exit(0);
        }
        Err(e) => {
            emit_error(e.kind(), e.message());
            std::process::exit(e.exit_code());
        }
    }
}
