//! Execution of CLI jobs, shared by fresh runs and reruns from a manifest.

use std::path::{Path, PathBuf};

use filament_core::analytics::instantaneous_speed;
use filament_core::eigen::EigenBasis;
use filament_core::optimizer::{
    solve_work_bending_constrained, solve_work_constrained, OptProblem,
};
use filament_core::quadrature::uniform_grid;
use filament_core::trajectory::{fmt_f64, Trajectory};

use crate::acceptance::acceptance_report;
use crate::config::{resolve, RunConfig};
use crate::error::{Error, Result};
use crate::manifest::{sha256_file, Job, Problem, RunManifest, MANIFEST_FILE};
use crate::report::StudyReport;
use crate::studies::{run_study, simulate, STUDIES};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    /// Written files, relative to the output directory.
    pub outputs: Vec<String>,
    /// Human-readable summary.
    pub lines: Vec<String>,
    /// Some validation check failed.
    pub failed_checks: bool,
}

/// Files the job reads, whose digests go into the manifest.
pub fn job_inputs(job: &Job) -> Vec<PathBuf> {
    match job {
        Job::Simulate { config } => config.coefficients.iter().cloned().collect(),
        Job::Analyze { trajectory, config } => std::iter::once(trajectory.clone())
            .chain(config.coefficients.iter().cloned())
            .collect(),
        _ => Vec::new(),
    }
}

/// Where a job's manifest goes when its outputs land in `dir`.
pub fn manifest_path(job: &Job, dir: &Path) -> PathBuf {
    match job {
        Job::Optimize { output, .. } => dir.join(format!("{output}.manifest.json")),
        _ => dir.join(MANIFEST_FILE),
    }
}

/// Writes the manifest, runs the job, then records the output digests.
pub fn run_job(job: Job, seed: u64, dir: &Path) -> Result<Outcome> {
    let path = manifest_path(&job, dir);
    let inputs = job_inputs(&job);
    let mut manifest = RunManifest::new(job, seed, &inputs)?;
    manifest.write(&path)?;
    let outcome = execute(&manifest.job, dir)?;
    manifest.set_outputs(dir, &outcome.outputs)?;
    manifest.write(&path)?;
    Ok(outcome)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rerun {
    pub outcome: Outcome,
    /// Recorded outputs whose content changed.
    pub mismatches: Vec<String>,
}

/// Re-executes the job recorded in `manifest`, into `out` or next to the
/// manifest, after checking that its inputs are unchanged.
pub fn rerun(manifest: &Path, out: Option<&Path>) -> Result<Rerun> {
    let m = RunManifest::load(manifest)?;
    m.verify_inputs()?;
    let dir = match out {
        Some(d) => d.to_path_buf(),
        None => manifest.parent().unwrap_or(Path::new(".")).to_path_buf(),
    };
    let outcome = execute(&m.job, &dir)?;
    let mut mismatches = Vec::new();
    for o in &m.outputs {
        let p = dir.join(&o.path);
        if !p.exists() || sha256_file(&p)? != o.sha256 {
            mismatches.push(o.path.display().to_string());
        }
    }
    Ok(Rerun {
        outcome,
        mismatches,
    })
}

pub fn execute(job: &Job, dir: &Path) -> Result<Outcome> {
    std::fs::create_dir_all(dir)?;
    match job {
        Job::Basis { k_max, samples } => basis(*k_max, *samples, dir),
        Job::Simulate { config } => simulate_job(config, dir),
        Job::Optimize {
            problem,
            m_max,
            k_max,
            omega,
            gamma,
            restarts,
            seed,
            work_target,
            output,
        } => {
            let p = OptProblem {
                m_max: *m_max,
                k_max: *k_max,
                omega: *omega,
                gamma: *gamma,
                work_target: *work_target,
                restarts: *restarts,
                seed: *seed,
            };
            optimize(*problem, &p, dir, output)
        }
        Job::Analyze { trajectory, config } => analyze(trajectory, config, dir),
        Job::Validate { study, quick, seed } => validate(study, *quick, *seed, dir),
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    Ok(csv::Writer::from_path(path)?)
}

fn basis(k_max: usize, samples: usize, dir: &Path) -> Result<Outcome> {
    if samples < 2 {
        return Err(Error::Config {
            path: "samples".into(),
            message: format!("need at least 2 samples, got {samples}"),
        });
    }
    let b = EigenBasis::new(k_max)?;
    let mut w = csv_writer(&dir.join("roots.csv"))?;
    w.write_record(["k", "xi_k", "lambda_k"])?;
    for k in 0..k_max {
        w.write_record([
            (k + 1).to_string(),
            fmt_f64(b.xi()[k]),
            fmt_f64(b.lambda()[k]),
        ])?;
    }
    w.flush()?;
    let mut w = csv_writer(&dir.join("psi.csv"))?;
    let header: Vec<String> = std::iter::once("s".to_string())
        .chain((1..=k_max).map(|k| format!("psi_{k}")))
        .collect();
    w.write_record(&header)?;
    for s in uniform_grid(samples) {
        let mut row = vec![fmt_f64(s)];
        for k in 1..=k_max {
            row.push(fmt_f64(b.eval(k, s)?.0));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    let mut w = csv_writer(&dir.join("coupling.csv"))?;
    let header: Vec<String> = std::iter::once("k".to_string())
        .chain((1..=k_max).map(|l| l.to_string()))
        .collect();
    w.write_record(&header)?;
    let s = b.coupling();
    for k in 0..k_max {
        let mut row = vec![(k + 1).to_string()];
        row.extend((0..k_max).map(|l| fmt_f64(s[(k, l)])));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(Outcome {
        outputs: vec!["roots.csv".into(), "psi.csv".into(), "coupling.csv".into()],
        lines: b
            .xi()
            .iter()
            .enumerate()
            .map(|(k, x)| format!("xi_{} = {x:.12}", k + 1))
            .collect(),
        failed_checks: false,
    })
}

fn simulate_job(config: &RunConfig, dir: &Path) -> Result<Outcome> {
    let r = resolve(config.clone(), Path::new("/"))?;
    let traj = simulate(config.method, &r.config.sim, &r.forcing, &r.initial)?;
    traj.save(&dir.join("trajectory.csv"))?;
    let last = traj
        .last()
        .ok_or_else(|| Error::Study("empty trajectory".into()))?;
    Ok(Outcome {
        outputs: vec!["trajectory.csv".into()],
        lines: vec![format!(
            "method {} N={} records={} t={} x0=({}, {})",
            traj.method(),
            traj.n_segments(),
            traj.len(),
            last.time(),
            last.state.x0[0],
            last.state.x0[1]
        )],
        failed_checks: false,
    })
}

fn optimize(problem: Problem, p: &OptProblem, dir: &Path, output: &str) -> Result<Outcome> {
    let basis = EigenBasis::new(p.k_max)?;
    let r = match problem {
        Problem::Work => solve_work_constrained(p, &basis)?,
        Problem::WorkBending => solve_work_bending_constrained(p, &basis)?,
    };
    r.coeffs.save(&dir.join(output))?;
    let mut lines = vec![
        format!("speed {}", fmt_f64(r.speed)),
        format!("work {}", fmt_f64(r.work)),
        format!("max constraint residual {:e}", r.max_residual()),
    ];
    if let Some(b) = r.best_restart {
        let converged = r.restarts.iter().filter(|o| o.converged).count();
        lines.push(format!(
            "best restart {b}, {converged}/{} converged",
            r.restarts.len()
        ));
    }
    if r.degenerate {
        lines.push("degenerate minimum: the optimal waveform is not unique".into());
    }
    Ok(Outcome {
        outputs: vec![output.to_string()],
        lines,
        failed_checks: false,
    })
}

/// Per record: recomputed speed, its running integral, basepoint
/// displacement and the stored work rate.
fn analyze(trajectory: &Path, config: &RunConfig, dir: &Path) -> Result<Outcome> {
    let traj = Trajectory::load(trajectory)?;
    let mut config = config.clone();
    config.sim.n_segments = traj.n_segments();
    let r = resolve(config, Path::new("/"))?;
    let gamma = r.config.sim.gamma;
    let mut w = csv_writer(&dir.join("analysis.csv"))?;
    w.write_record(["t", "U", "predicted", "observed", "Wdot"])?;
    let recs = traj.records();
    let first = recs
        .first()
        .ok_or_else(|| Error::Study("empty trajectory".into()))?;
    let (mut predicted, mut prev) = (0.0, None::<(f64, f64)>);
    for rec in recs {
        let u = instantaneous_speed(&rec.state, &r.forcing, gamma);
        if let Some((t0, u0)) = prev {
            predicted += 0.5 * (rec.time() - t0) * (u + u0);
        }
        prev = Some((rec.time(), u));
        let observed = rec.state.x0[0] - first.state.x0[0];
        w.write_record([
            fmt_f64(rec.time()),
            fmt_f64(u),
            fmt_f64(predicted),
            fmt_f64(observed),
            fmt_f64(rec.diag.work_rate),
        ])?;
    }
    w.flush()?;
    let observed = recs[recs.len() - 1].state.x0[0] - first.state.x0[0];
    Ok(Outcome {
        outputs: vec!["analysis.csv".into()],
        lines: vec![format!(
            "t in [{}, {}]: predicted {predicted:.6e}, observed {observed:.6e}",
            first.time(),
            recs[recs.len() - 1].time()
        )],
        failed_checks: false,
    })
}

fn report_outputs(report: &StudyReport, dir: &Path) -> Result<Vec<String>> {
    let path = report.write(dir)?;
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut out = vec![name];
    for p in &report.points {
        out.extend(p.trajectories.iter().cloned());
    }
    out.extend(report.files.iter().cloned());
    Ok(out)
}

fn validate(study: &str, quick: bool, seed: u64, dir: &Path) -> Result<Outcome> {
    let names: Vec<&str> = match study {
        "all" => STUDIES.to_vec(),
        other => vec![other],
    };
    let mut outcome = Outcome::default();
    for name in names {
        let report = if name == "acceptance" {
            acceptance_report(&(1..=11).collect::<Vec<_>>())?
        } else {
            run_study(name, quick, seed, Some(dir))?
        };
        outcome.outputs.extend(report_outputs(&report, dir)?);
        for c in &report.checks {
            outcome.lines.push(format!(
                "{} {}: {} = {:.6e} ({})",
                if c.passed { "PASS" } else { "FAIL" },
                report.study,
                c.name,
                c.value,
                c.bound
            ));
        }
        outcome.lines.extend(
            report
                .notes
                .iter()
                .map(|n| format!("note {}: {n}", report.study)),
        );
        outcome.failed_checks |= !report.passed();
    }
    Ok(outcome)
}
