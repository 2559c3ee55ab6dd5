//! Command-line interface.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use filament_core::analytics::{avg_speed, avg_work};
use filament_core::coeffs::ModalCoeffs;
use filament_core::eigen::EigenBasis;
use filament_core::trajectory::fmt_f64;

use crate::config::{parse_config, RunConfig};
use crate::error::{Error, Result};
use crate::jobs::{rerun, run_job, Outcome};
use crate::manifest::{Job, Problem};
use crate::studies::STUDIES;

/// Exit code when `validate --strict` sees a failed check.
pub const EXIT_ACCEPTANCE: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "filament",
    version,
    about = "Planar swimming filament simulations and studies"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ProblemArg {
    Work,
    WorkBending,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Clamped beam eigenvalues, sampled eigenfunctions and the coupling matrix.
    Basis {
        #[arg(long, default_value_t = 12)]
        kmax: usize,
        #[arg(long, default_value_t = 201)]
        samples: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Time-steps a filament described by a JSON config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Optimal waveform coefficients, written as `m,k,a,b`.
    Optimize {
        #[arg(long, value_enum, default_value = "work-bending")]
        problem: ProblemArg,
        #[arg(long, default_value_t = 12)]
        kmax: usize,
        #[arg(long, default_value_t = 1)]
        mmax: usize,
        #[arg(long, default_value_t = 2.0 * std::f64::consts::PI)]
        omega: f64,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long, default_value_t = 30)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Pins the averaged work; required by `work`, optional for `work-bending`.
        #[arg(long)]
        work_target: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Swimming speed, displacement and work along a stored trajectory.
    Analyze {
        #[arg(long)]
        trajectory: PathBuf,
        /// Run config giving the forcing; alternatively `--case`.
        #[arg(long, conflicts_with = "case")]
        config: Option<PathBuf>,
        #[arg(long)]
        case: Option<String>,
        #[arg(long, requires = "case")]
        coefficients: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Averaged speed and work of a coefficient file.
    Speed {
        #[arg(long)]
        coefficients: PathBuf,
        #[arg(long, default_value_t = 2.0 * std::f64::consts::PI)]
        omega: f64,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
    },
    /// Runs a validation study and writes its report.
    Validate {
        /// A study name, `acceptance` or `all`.
        #[arg(long)]
        study: String,
        /// Exit with code 4 when a check fails.
        #[arg(long)]
        strict: bool,
        /// Small meshes and short runs.
        #[arg(long)]
        quick: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-executes the job recorded in a manifest.
    Rerun {
        manifest: PathBuf,
        /// Output directory; defaults to the manifest's.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn absolute(p: &Path) -> Result<PathBuf> {
    Ok(std::path::absolute(p)?)
}

/// Parses the config at `path` and returns it with an absolute coefficient path.
fn resolved_config(path: &Path) -> Result<RunConfig> {
    let r = parse_config(path)?;
    let mut config = r.config;
    config.coefficients = r.coefficient_file.as_deref().map(absolute).transpose()?;
    Ok(config)
}

fn print(outcome: &Outcome) {
    for line in &outcome.lines {
        println!("{line}");
    }
}

/// Runs the parsed command and returns the process exit code.
pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Basis { kmax, samples, out } => {
            print(&run_job(
                Job::Basis {
                    k_max: kmax,
                    samples,
                },
                0,
                &out,
            )?);
        }
        Command::Simulate { config, out } => {
            let config = resolved_config(&config)?;
            let seed = config.seed;
            print(&run_job(Job::Simulate { config }, seed, &out)?);
        }
        Command::Optimize {
            problem,
            kmax,
            mmax,
            omega,
            gamma,
            restarts,
            seed,
            work_target,
            out,
        } => {
            let name = out
                .file_name()
                .ok_or_else(|| Error::Config {
                    path: "out".into(),
                    message: format!("{} is not a file path", out.display()),
                })?
                .to_string_lossy()
                .into_owned();
            let dir = match out.parent() {
                Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
                _ => PathBuf::from("."),
            };
            let problem = match problem {
                ProblemArg::Work => Problem::Work,
                ProblemArg::WorkBending => Problem::WorkBending,
            };
            let job = Job::Optimize {
                problem,
                m_max: mmax,
                k_max: kmax,
                omega,
                gamma,
                restarts,
                seed,
                work_target,
                output: name,
            };
            print(&run_job(job, seed, &dir)?);
        }
        Command::Analyze {
            trajectory,
            config,
            case,
            coefficients,
            out,
        } => {
            let mut config = match (config, case) {
                (Some(path), _) => resolved_config(&path)?,
                (None, Some(case)) => RunConfig::for_case(&case),
                (None, None) => {
                    return Err(Error::Config {
                        path: "case".into(),
                        message: "analyze needs --config or --case".into(),
                    })
                }
            };
            if let Some(c) = coefficients {
                config.coefficients = Some(absolute(&c)?);
            }
            let trajectory = absolute(&trajectory)?;
            let seed = config.seed;
            print(&run_job(Job::Analyze { trajectory, config }, seed, &out)?);
        }
        Command::Speed {
            coefficients,
            omega,
            gamma,
        } => {
            let c = ModalCoeffs::load(&coefficients)?;
            let basis = EigenBasis::new(c.k_max())?;
            println!("speed {}", fmt_f64(avg_speed(&c, omega, gamma, &basis)?));
            println!("work {}", fmt_f64(avg_work(&c, omega, &basis)?));
        }
        Command::Validate {
            study,
            strict,
            quick,
            seed,
            out,
        } => {
            if !(study == "all" || study == "acceptance" || STUDIES.contains(&study.as_str())) {
                return Err(Error::Config {
                    path: "study".into(),
                    message: format!(
                        "unknown study {study:?}; expected one of {}, acceptance, all",
                        STUDIES.join(", ")
                    ),
                });
            }
            let outcome = run_job(Job::Validate { study, quick, seed }, seed, &out)?;
            print(&outcome);
            if strict && outcome.failed_checks {
                return Ok(EXIT_ACCEPTANCE);
            }
        }
        Command::Rerun { manifest, out } => {
            let r = rerun(&manifest, out.as_deref())?;
            print(&r.outcome);
            if !r.mismatches.is_empty() {
                return Err(Error::Study(format!(
                    "outputs differ from the manifest: {}",
                    r.mismatches.join(", ")
                )));
            }
            println!("all recorded outputs reproduced");
        }
    }
    Ok(0)
}
