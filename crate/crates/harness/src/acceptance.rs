//! The acceptance criteria, one function each.

use std::time::Instant;

use filament_core::analytics::avg_speed;
use filament_core::coeffs::ModalCoeffs;
use filament_core::eigen::{
    characteristic, characteristic_floor, find_roots, scaled_characteristic, EigenBasis,
};
use filament_core::forcing::library_case;
use filament_core::nodal::{ConstrainedState, NodalModel, NodalStepper};
use filament_core::optimizer::{
    solve_work_bending_constrained, solve_work_constrained, work_fraction_by_mode, OptProblem,
};
use filament_core::sim::SimConfig;
use filament_core::state::FilamentState;
use filament_core::trajectory::Method;

use crate::error::Result;
use crate::report::StudyReport;
use crate::studies::{self, simulate};

pub const ROOT_REFERENCE: [f64; 3] = [4.730, 7.853, 10.996];
pub const ROOT_RESIDUAL_TOL: f64 = 1e-12;
pub const ROOT_SECONDS: f64 = 1.0;
pub const SPEED_BOUND: f64 = -0.095;
pub const OPT_RESTARTS: usize = 20;
pub const WORK_FRACTION_BOUND: f64 = 0.9;
pub const OPT_SECONDS: f64 = 300.0;
pub const LENGTH_TOL_A: f64 = 1e-14;
pub const CONSTRAINT_TOL_B: f64 = 1e-11;
pub const PARITY_TOL: f64 = 1e-8;
pub const JACOBIAN_TOL: f64 = 1e-6;

pub const TITLES: [&str; 11] = [
    "eigen-roots",
    "table reproduction",
    "optimization",
    "cross-method convergence",
    "non-swimmers",
    "energy decay",
    "inextensibility",
    "parity and antisymmetry",
    "periodic attraction",
    "work consistency",
    "Newton convergence",
];

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub id: usize,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CriterionResult {
    pub fn title(&self) -> &'static str {
        TITLES[self.id - 1]
    }

    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} {} {}: {} ({:.1}s)",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.title(),
            self.detail,
            self.seconds
        )
    }
}

pub fn evaluate(id: usize) -> Result<CriterionResult> {
    let start = Instant::now();
    let (passed, detail) = match id {
        1 => eigen_roots()?,
        2 => from_study(studies::table1_study(&studies::Table1Params::full(), None)?),
        3 => optimization()?,
        4 => from_study(studies::methods_convergence(
            &studies::ConvergenceParams::full(),
            None,
        )?),
        5 => from_study(studies::case_catalog(
            &studies::CatalogParams {
                cases: vec!["case1".into(), "case2".into()],
                ..studies::CatalogParams::full()
            },
            None,
        )?),
        6 => from_study(studies::energy_decay(&studies::EnergyParams::full(), None)?),
        7 => inextensibility()?,
        8 => parity()?,
        9 => from_study(studies::periodic_attraction(
            &studies::AttractionParams::full(),
            None,
        )?),
        10 => from_study(studies::work_consistency(
            &studies::WorkParams::full(),
            None,
        )?),
        11 => newton()?,
        other => {
            return Err(crate::error::Error::Config {
                path: "criterion".into(),
                message: format!("no criterion {other}"),
            })
        }
    };
    Ok(CriterionResult {
        id,
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// All criteria as one report, one check per criterion.
pub fn acceptance_report(ids: &[usize]) -> Result<StudyReport> {
    let mut report = StudyReport::new("acceptance", serde_json::json!({ "criteria": ids }));
    for &id in ids {
        let r = evaluate(id)?;
        report.check(
            format!("criterion {id} {} seconds", r.title()),
            r.seconds,
            r.detail,
            r.passed,
        );
    }
    Ok(report)
}

fn from_study(report: StudyReport) -> (bool, String) {
    let detail = report
        .checks
        .iter()
        .map(|c| {
            format!(
                "{}={:.5e}{}",
                c.name,
                c.value,
                if c.passed { "" } else { " [x]" }
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    (report.passed(), detail)
}

fn eigen_roots() -> Result<(bool, String)> {
    let start = Instant::now();
    let xi = find_roots(12)?;
    let basis = EigenBasis::new(12)?;
    let seconds = start.elapsed().as_secs_f64();
    let digits = ROOT_REFERENCE
        .iter()
        .zip(&xi)
        .all(|(r, x)| ((x * 1000.0).round() - r * 1000.0).abs() < 0.5);
    let scaled = xi
        .iter()
        .fold(0.0_f64, |m, &x| m.max(scaled_characteristic(x).abs()));
    let within_floor = xi
        .iter()
        .all(|&x| characteristic(x).abs() <= characteristic_floor(x) + 1e-14);
    let literal_low = xi[..3]
        .iter()
        .fold(0.0_f64, |m, &x| m.max(characteristic(x).abs()));
    let passed = digits
        && scaled < ROOT_RESIDUAL_TOL
        && within_floor
        && seconds < ROOT_SECONDS
        && basis.k_max() == 12;
    Ok((
        passed,
        format!(
            "xi = {:.6}, {:.6}, {:.6}; max |cos - sech| = {scaled:.2e}; literal residual within one ulp: \
             {within_floor} (k<=3: {literal_low:.2e}); {seconds:.3}s",
            xi[0], xi[1], xi[2]
        ),
    ))
}

fn optimization() -> Result<(bool, String)> {
    let start = Instant::now();
    let basis = EigenBasis::new(12)?;
    let mut p = OptProblem::new(1, 12);
    p.work_target = None;
    p.restarts = OPT_RESTARTS;
    let best = solve_work_bending_constrained(&p, &basis)?;
    let q = OptProblem::new(3, 10);
    let lin = solve_work_constrained(&q, &basis)?;
    let fractions = work_fraction_by_mode(&lin.coeffs, q.omega, &basis)?;
    let seconds = start.elapsed().as_secs_f64();
    let passed =
        best.speed <= SPEED_BOUND && fractions[0] > WORK_FRACTION_BOUND && seconds < OPT_SECONDS;
    Ok((
        passed,
        format!(
            "best unit-norm speed {:.6} (bound {SPEED_BOUND}); m=1 work fraction {:.6} (bound {WORK_FRACTION_BOUND})",
            best.speed, fractions[0]
        ),
    ))
}

fn inextensibility() -> Result<(bool, String)> {
    let f = library_case("case6")?;
    let n = 100;
    let config = SimConfig {
        n_segments: n,
        t_end: 1.0,
        ..Default::default()
    };
    let traj = simulate(Method::A, &config, &f, &FilamentState::straight(n)?)?;
    let err_a = traj.records().iter().fold(0.0_f64, |m, r| {
        m.max(r.state.segment_length_error() * n as f64)
    });
    let mut stepper = NodalStepper::new(&f, &config)?;
    let mut state = ConstrainedState::from_filament(&FilamentState::straight(n)?);
    let steps = (config.t_end / config.dt).round() as usize;
    let mut err_b = 0.0_f64;
    for k in 1..=steps {
        state = stepper.step_to(&state, k as f64 * config.dt)?;
        err_b = err_b.max(state.constraint_residual());
    }
    Ok((
        err_a < LENGTH_TOL_A && err_b < CONSTRAINT_TOL_B,
        format!(
            "method a max relative length error {err_a:.2e} (bound {LENGTH_TOL_A:e}); method b max constraint \
             residual {err_b:.2e} over {steps} steps (bound {CONSTRAINT_TOL_B:e})"
        ),
    ))
}

fn parity() -> Result<(bool, String)> {
    let basis = EigenBasis::new(12)?;
    let anti = basis.antisymmetry_error();
    let leak = basis.parity_leak();
    let omega = 2.0 * std::f64::consts::PI;
    let mut single = 0.0_f64;
    for k in 1..=12 {
        let mut c = ModalCoeffs::zeros(1, 12);
        c.set(1, k, 0.7, -0.4);
        single = single.max(avg_speed(&c, omega, 1.0, &basis)?.abs());
    }
    Ok((
        anti < PARITY_TOL && leak < PARITY_TOL && single == 0.0,
        format!(
            "|S + S^T|max {anti:.2e}; same-parity max {leak:.2e}; single-mode max |U| {single:e}"
        ),
    ))
}

/// Column `col` of the interleaved unknowns `(x_i, y_i, tau_i)`.
fn nudge(s: &mut ConstrainedState, col: usize, h: f64) {
    let (i, r) = (col / 3, col % 3);
    if r == 2 {
        s.tau[i] += h;
    } else {
        s.nodes[i][r] += h;
    }
}

fn unknown(s: &ConstrainedState, col: usize) -> f64 {
    let (i, r) = (col / 3, col % 3);
    if r == 2 {
        s.tau[i]
    } else {
        s.nodes[i][r]
    }
}

fn generic_state(n: usize, t: f64) -> Result<ConstrainedState> {
    let theta = (0..n)
        .map(|i| 0.4 * (2.3 * i as f64 / n as f64 + 0.2).sin() + 0.1)
        .collect();
    let mut s = ConstrainedState::from_filament(&FilamentState::new([0.2, -0.4], theta, t)?);
    s.tau = (0..n).map(|k| 3.0 * (k as f64 * 0.7).cos()).collect();
    Ok(s)
}

fn newton() -> Result<(bool, String)> {
    let f = library_case("case7")?;
    let n = 24;
    let config = SimConfig {
        n_segments: n,
        ..Default::default()
    };
    let model = NodalModel::new(&f, &config)?;
    let prev = generic_state(n, 0.3)?;
    let mut guess = prev.clone();
    guess.time += 1e-3;
    for (i, p) in guess.nodes.iter_mut().enumerate() {
        p[0] += 1e-3 * (i as f64 * 1.3).sin();
        p[1] += 1e-3 * (i as f64 * 0.4).cos();
    }
    let jac = model.jacobian(&prev, &guess)?;
    let dim = 3 * n + 2;
    let mut worst = 0.0_f64;
    for col in 0..dim {
        let h = 1e-6 * unknown(&guess, col).abs().max(1.0);
        let (mut up, mut um) = (guess.clone(), guess.clone());
        nudge(&mut up, col, h);
        nudge(&mut um, col, -h);
        let (rp, rm) = (model.residual(&prev, &up)?, model.residual(&prev, &um)?);
        for row in 0..dim {
            let fd = (rp[row] - rm[row]) / (2.0 * h);
            let a = jac.get(row, col);
            worst = worst.max((fd - a).abs() / a.abs().max(1.0));
        }
    }
    let mut stepper = NodalStepper::new(&f, &config)?;
    let next = stepper.step_to(&prev, prev.time + 1e-4)?;
    let log = stepper.residual_log().to_vec();
    let pairs: Vec<f64> = log
        .windows(2)
        .filter(|w| w[0] < 1e-2 && w[1] > 1e-13)
        .map(|w| w[1] / (w[0] * w[0]))
        .collect();
    let quadratic = !pairs.is_empty() && pairs.iter().all(|c| *c < 10.0);
    let log_text = log
        .iter()
        .map(|r| format!("{r:.1e}"))
        .collect::<Vec<_>>()
        .join(" ");
    Ok((
        worst < JACOBIAN_TOL && quadratic && next.constraint_residual() < CONSTRAINT_TOL_B,
        format!(
            "jacobian vs differences {worst:.2e} (bound {JACOBIAN_TOL:e}); residuals {log_text}"
        ),
    ))
}
