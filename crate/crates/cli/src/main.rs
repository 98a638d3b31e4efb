use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use quasibeam::suites::{all_suite_names, run_suite};
use quasibeam_cli::config::parse_config;
use quasibeam_cli::runner::run;
use quasibeam_cli::sweep::{sweep, SweepError};

/// Paraxial propagation through EIT media with artificial gauge potentials.
#[derive(Parser)]
#[command(name = "quasibeam", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configured propagation and write its artifacts.
    Run {
        /// TOML scenario configuration
        config: PathBuf,
        /// output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the oracle verification suites and print pass/fail tables.
    Verify {
        /// one of: gauge, free, electric, magnetic, spiral, ab, multimode,
        /// propagator; all of them if omitted
        #[arg(long)]
        suite: Option<String>,
    },
    /// Re-run a configuration across a list of parameter values.
    Sweep {
        config: PathBuf,
        /// dotted config key, e.g. scenario.force or multimode.gamma
        #[arg(long)]
        param: String,
        /// comma-separated values
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
}

const EXIT_CHECK_FAILURE: u8 = 1;
const EXIT_CONFIG_ERROR: u8 = 2;

fn load_config(path: &PathBuf) -> Result<(quasibeam_cli::RunConfig, PathBuf), String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let cfg = parse_config(&text).map_err(|e| e.to_string())?;
    let base = path
        .parent()
        .map(|p| p.to_path_buf())
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or_else(|| PathBuf::from("."));
    cfg.validate_paths(&base).map_err(|e| e.to_string())?;
    Ok((cfg, base))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out } => {
            let (cfg, base) = match load_config(&config) {
                Ok(v) => v,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_CONFIG_ERROR);
                }
            };
            match run(&cfg, &out, &base) {
                Ok(artifacts) => {
                    for w in &artifacts.warnings {
                        eprintln!("{w}");
                    }
                    println!("wrote {}", artifacts.diagnostics.display());
                    for s in &artifacts.snapshots {
                        println!("wrote {}", s.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_CHECK_FAILURE)
                }
            }
        }
        Command::Verify { suite } => {
            let names: Vec<&str> = match &suite {
                Some(name) => match all_suite_names().iter().find(|n| **n == name.as_str()) {
                    Some(n) => vec![*n],
                    None => {
                        eprintln!(
                            "error: unknown suite {name:?}; available: {}",
                            all_suite_names().join(", ")
                        );
                        return ExitCode::from(EXIT_CONFIG_ERROR);
                    }
                },
                None => all_suite_names().to_vec(),
            };
            let mut all_pass = true;
            for name in names {
                let report = run_suite(name).expect("suite names are pre-validated");
                print!("{report}");
                all_pass &= report.pass();
            }
            if all_pass {
                println!("all checks passed");
                ExitCode::SUCCESS
            } else {
                println!("CHECK FAILURES");
                ExitCode::from(EXIT_CHECK_FAILURE)
            }
        }
        Command::Sweep { config, param, values, out } => {
            let (cfg, base) = match load_config(&config) {
                Ok(v) => v,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_CONFIG_ERROR);
                }
            };
            match sweep(&cfg, &param, &values, &out, &base) {
                Ok(artifacts) => {
                    for a in &artifacts {
                        println!("wrote {}", a.out_dir.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(SweepError::UnknownParameter(p)) => {
                    eprintln!("error: unknown sweep parameter {p:?}");
                    ExitCode::from(EXIT_CONFIG_ERROR)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_CHECK_FAILURE)
                }
            }
        }
    }
}
