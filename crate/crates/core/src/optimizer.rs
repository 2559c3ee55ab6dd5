//! Waveform optimization over modal coefficients.
//!
//! The work-constrained problem is a generalized symmetric eigenproblem. The
//! problem with the additional unit-norm constraints on `a` and `b` is solved
//! by an augmented Lagrangian with BFGS inner iterations and random restarts.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{avg_speed, avg_work, QuadraticForms};
use crate::coeffs::ModalCoeffs;
use crate::eigen::EigenBasis;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptProblem {
    pub m_max: usize,
    pub k_max: usize,
    pub omega: f64,
    pub gamma: f64,
    /// Value the work form is pinned to; `None` drops the work constraint.
    pub work_target: Option<f64>,
    pub restarts: usize,
    pub seed: u64,
}

impl OptProblem {
    pub fn new(m_max: usize, k_max: usize) -> Self {
        Self {
            m_max,
            k_max,
            omega: 2.0 * std::f64::consts::PI,
            gamma: 1.0,
            work_target: Some(1.0),
            restarts: 20,
            seed: 0,
        }
    }

    fn validate(&self, basis: &EigenBasis) -> Result<()> {
        if self.m_max < 1 {
            return Err(Error::InvalidInput("m_max must be at least 1".into()));
        }
        if self.k_max < 2 {
            return Err(Error::InvalidInput(
                "k_max must be at least 2: a single mode cannot swim".into(),
            ));
        }
        if self.k_max > basis.k_max() {
            return Err(Error::ModeOutOfRange {
                k: self.k_max,
                available: basis.k_max(),
            });
        }
        if !(self.omega > 0.0 && self.gamma > 0.0) {
            return Err(Error::InvalidInput(
                "omega and gamma must be positive".into(),
            ));
        }
        if let Some(w) = self.work_target {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "work target must be positive, got {w}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RestartOutcome {
    pub index: usize,
    pub speed: f64,
    pub max_residual: f64,
    pub converged: bool,
    pub outer_iterations: usize,
    /// Flattened `[a…, b…]` at termination.
    pub x: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct OptResult {
    pub coeffs: ModalCoeffs,
    pub speed: f64,
    pub work: f64,
    /// One entry per active equality constraint.
    pub residuals: Vec<f64>,
    pub best_restart: Option<usize>,
    pub seed: Option<u64>,
    /// Set when the minimizer is not unique beyond the time-shift symmetry.
    pub degenerate: bool,
    pub restarts: Vec<RestartOutcome>,
}

impl OptResult {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, r| m.max(r.abs()))
    }
}

/// Minimizes the averaged speed subject to `W = work_target` (default 1).
///
/// Whitening by the diagonal work form turns this into the smallest
/// eigenvalue of a symmetric matrix. Each temporal mode contributes a block
/// that is invariant under rotation of its `(a, b)` pairs, so eigenvalues come
/// in pairs; only a multiplicity above two is reported as degenerate.
pub fn solve_work_constrained(p: &OptProblem, basis: &EigenBasis) -> Result<OptResult> {
    p.validate(basis)?;
    let target = p.work_target.unwrap_or(1.0);
    let forms = QuadraticForms::new(p.m_max, p.k_max, p.omega, p.gamma, basis)?;
    let scale = forms.w.map(|w| 1.0 / w.sqrt());
    let whitened = DMatrix::from_fn(forms.u.nrows(), forms.u.ncols(), |i, j| {
        scale[i] * forms.u[(i, j)] * scale[j]
    });
    let eig = SymmetricEigen::new(whitened);
    let (imin, lmin) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| Error::Optimization("empty problem".into()))?;
    let spread = eig.eigenvalues.amax().max(f64::MIN_POSITIVE);
    let multiplicity = eig
        .eigenvalues
        .iter()
        .filter(|l| (*l - lmin).abs() <= 1e-9 * spread)
        .count();
    let y = eig.eigenvectors.column(imin);
    let x: DVector<f64> = y.component_mul(&scale) * target.sqrt();
    let coeffs = ModalCoeffs::from_flat(p.m_max, p.k_max, x.as_slice());
    let speed = avg_speed(&coeffs, p.omega, p.gamma, basis)?;
    let work = avg_work(&coeffs, p.omega, basis)?;
    Ok(OptResult {
        coeffs,
        speed,
        work,
        residuals: vec![work - target],
        best_restart: None,
        seed: None,
        degenerate: multiplicity > 2,
        restarts: Vec::new(),
    })
}

/// Fraction of the work carried by each temporal mode.
pub fn work_fraction_by_mode(
    coeffs: &ModalCoeffs,
    omega: f64,
    basis: &EigenBasis,
) -> Result<Vec<f64>> {
    let total = avg_work(coeffs, omega, basis)?;
    (1..=coeffs.m_max())
        .map(|m| {
            let mut only = ModalCoeffs::zeros(coeffs.m_max(), coeffs.k_max());
            for k in 1..=coeffs.k_max() {
                only.set(m, k, coeffs.a(m, k), coeffs.b(m, k));
            }
            Ok(avg_work(&only, omega, basis)? / total)
        })
        .collect()
}

/// Equality constraints `c_j(x) = xᵀ D_j x − t_j` with diagonal `D_j`.
struct Constraints {
    diags: Vec<DVector<f64>>,
    targets: Vec<f64>,
}

impl Constraints {
    fn values(&self, x: &DVector<f64>) -> Vec<f64> {
        self.diags
            .iter()
            .zip(&self.targets)
            .map(|(d, t)| x.iter().zip(d.iter()).map(|(v, w)| w * v * v).sum::<f64>() - t)
            .collect()
    }
}

const AL_TOL: f64 = 1e-9;
const AL_MAX_OUTER: usize = 60;
const RHO_GROWTH: f64 = 10.0;
const INNER_MAX: usize = 2000;

/// Minimizes the averaged speed subject to `Σa² = Σb² = 1` and, when
/// `work_target` is set, `W = work_target`. Only `m_max = 1` is supported.
pub fn solve_work_bending_constrained(p: &OptProblem, basis: &EigenBasis) -> Result<OptResult> {
    p.validate(basis)?;
    if p.m_max != 1 {
        return Err(Error::InvalidInput(
            "the norm-constrained problem is posed for m_max = 1".into(),
        ));
    }
    if p.restarts == 0 {
        return Err(Error::InvalidInput(
            "at least one restart is required".into(),
        ));
    }
    let forms = QuadraticForms::new(1, p.k_max, p.omega, p.gamma, basis)?;
    let k = p.k_max;
    let n = 2 * k;
    let mut diags = vec![
        DVector::from_fn(n, |i, _| if i < k { 1.0 } else { 0.0 }),
        DVector::from_fn(n, |i, _| if i >= k { 1.0 } else { 0.0 }),
    ];
    let mut targets = vec![1.0, 1.0];
    if let Some(w) = p.work_target {
        let wk = &forms.w.as_slice()[..k];
        let lo = 2.0 * wk.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = 2.0 * wk.iter().copied().fold(0.0, f64::max);
        if w < lo || w > hi {
            return Err(Error::Optimization(format!(
                "work target {w} is infeasible on the unit spheres: attainable range is [{lo:.6e}, {hi:.6e}]"
            )));
        }
        diags.push(forms.w.clone());
        targets.push(w);
    }
    let cons = Constraints { diags, targets };

    let outcomes: Vec<RestartOutcome> = (0..p.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
            rng.set_stream(r as u64);
            let mut x = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
            let (na, nb) = (x.rows(0, k).norm(), x.rows(k, k).norm());
            x.rows_mut(0, k).scale_mut(1.0 / na);
            x.rows_mut(k, k).scale_mut(1.0 / nb);
            augmented_lagrangian(&forms, &cons, x, r)
        })
        .collect();

    let best = outcomes
        .iter()
        .filter(|o| o.converged)
        .min_by(|a, b| a.speed.total_cmp(&b.speed).then(a.index.cmp(&b.index)))
        .ok_or_else(|| {
            let diag: Vec<String> = outcomes
                .iter()
                .map(|o| {
                    format!(
                        "#{}: speed {:.6e}, residual {:.1e}",
                        o.index, o.speed, o.max_residual
                    )
                })
                .collect();
            Error::Optimization(format!("no restart converged ({})", diag.join("; ")))
        })?;
    let coeffs = ModalCoeffs::from_flat(1, k, &best.x);
    let x = DVector::from_vec(best.x.clone());
    Ok(OptResult {
        speed: avg_speed(&coeffs, p.omega, p.gamma, basis)?,
        work: avg_work(&coeffs, p.omega, basis)?,
        residuals: cons.values(&x),
        coeffs,
        best_restart: Some(best.index),
        seed: Some(p.seed),
        degenerate: false,
        restarts: outcomes,
    })
}

fn augmented_lagrangian(
    forms: &QuadraticForms,
    cons: &Constraints,
    mut x: DVector<f64>,
    index: usize,
) -> RestartOutcome {
    let m = cons.diags.len();
    let mut mu = vec![0.0; m];
    let mut rho = 1.0;
    let mut prev_violation = f64::INFINITY;
    let mut outer = 0;
    let mut converged = false;
    while outer < AL_MAX_OUTER {
        outer += 1;
        let (mu_now, rho_now) = (mu.clone(), rho);
        let f = |z: &DVector<f64>| {
            let c = cons.values(z);
            let uz = &forms.u * z;
            let mut val = z.dot(&uz);
            let mut g = uz * 2.0;
            for j in 0..m {
                val += mu_now[j] * c[j] + 0.5 * rho_now * c[j] * c[j];
                let coef = 2.0 * (mu_now[j] + rho_now * c[j]);
                g += cons.diags[j].component_mul(z) * coef;
            }
            (val, g)
        };
        x = bfgs(f, x, 1e-12);
        let c = cons.values(&x);
        let violation = c.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for j in 0..m {
            mu[j] += rho * c[j];
        }
        if violation < AL_TOL {
            converged = true;
            break;
        }
        if violation > 0.25 * prev_violation {
            rho *= RHO_GROWTH;
        }
        prev_violation = violation;
    }
    let c = cons.values(&x);
    RestartOutcome {
        index,
        speed: forms.speed(&x),
        max_residual: c.iter().fold(0.0f64, |a, v| a.max(v.abs())),
        converged,
        outer_iterations: outer,
        x: x.as_slice().to_vec(),
    }
}

/// BFGS with an Armijo backtracking line search; stops when the gradient's
/// max-norm drops below `gtol` or progress stalls.
fn bfgs<F>(f: F, mut x: DVector<f64>, gtol: f64) -> DVector<f64>
where
    F: Fn(&DVector<f64>) -> (f64, DVector<f64>),
{
    let n = x.len();
    let mut h = DMatrix::<f64>::identity(n, n);
    let (mut fx, mut g) = f(&x);
    for _ in 0..INNER_MAX {
        if g.amax() < gtol {
            break;
        }
        let mut d = -(&h * &g);
        let mut slope = g.dot(&d);
        if slope >= 0.0 {
            h = DMatrix::identity(n, n);
            d = -g.clone();
            slope = g.dot(&d);
        }
        let mut step = 1.0;
        let (mut xn, mut fnew, mut gn);
        loop {
            xn = &x + &d * step;
            (fnew, gn) = f(&xn);
            if fnew <= fx + 1e-4 * step * slope || step < 1e-20 {
                break;
            }
            step *= 0.5;
        }
        if step < 1e-20 {
            break;
        }
        let s = &xn - &x;
        let y = &gn - &g;
        let sy = s.dot(&y);
        if sy > 1e-300 {
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            // H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ, expanded
            h += (&s * s.transpose()) * (rho * rho * yhy + rho)
                - (&hy * s.transpose() + &s * hy.transpose()) * rho;
        }
        let stalled = (fx - fnew).abs() <= 1e-16 * fx.abs().max(1e-300) && s.amax() < 1e-15;
        x = xn;
        fx = fnew;
        g = gn;
        if stalled {
            break;
        }
    }
    x
}

/// Distance between two `(a, b)` optima modulo the symmetries that leave both
/// the objective and the unit-norm constraints unchanged: a global sign and
/// the quarter-period time shift `(a, b) → (−b, a)`.
pub fn symmetric_distance(x: &[f64], y: &[f64]) -> f64 {
    let k = x.len() / 2;
    let (a, b) = y.split_at(k);
    let mut best = f64::INFINITY;
    let images: [Vec<f64>; 4] = [
        y.to_vec(),
        b.iter().map(|v| -v).chain(a.iter().copied()).collect(),
        y.iter().map(|v| -v).collect(),
        b.iter().copied().chain(a.iter().map(|v| -v)).collect(),
    ];
    for img in images {
        let d = x
            .iter()
            .zip(&img)
            .map(|(p, q)| (p - q).powi(2))
            .sum::<f64>()
            .sqrt();
        best = best.min(d);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::OnceLock;

    fn basis() -> &'static EigenBasis {
        static B: OnceLock<EigenBasis> = OnceLock::new();
        B.get_or_init(|| EigenBasis::new(12).unwrap())
    }

    #[test]
    fn validation() {
        let b = basis();
        assert!(solve_work_constrained(&OptProblem::new(1, 1), b).is_err());
        assert!(solve_work_constrained(&OptProblem::new(0, 4), b).is_err());
        assert!(solve_work_constrained(&OptProblem::new(1, 13), b).is_err());
        let mut p = OptProblem::new(2, 4);
        assert!(solve_work_bending_constrained(&p, b).is_err());
        p.m_max = 1;
        p.restarts = 0;
        assert!(solve_work_bending_constrained(&p, b).is_err());
    }

    #[test]
    fn infeasible_work_target_is_reported() {
        let mut p = OptProblem::new(1, 12);
        p.work_target = Some(1.0);
        match solve_work_bending_constrained(&p, basis()) {
            Err(Error::Optimization(msg)) => assert!(msg.contains("infeasible"), "{msg}"),
            other => panic!("expected infeasibility, got {other:?}"),
        }
    }

    #[test]
    fn eigen_solution_satisfies_constraint_and_matches_analytics() {
        let p = OptProblem::new(2, 6);
        let r = solve_work_constrained(&p, basis()).unwrap();
        assert!(r.max_residual() < 1e-12);
        assert!(r.speed < 0.0);
        assert!(!r.degenerate);
    }

    #[test]
    fn bfgs_minimizes_a_quadratic() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 2.0]);
        let b = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let f = |x: &DVector<f64>| (0.5 * x.dot(&(&a * x)) - b.dot(x), &a * x - &b);
        let x = bfgs(f, DVector::zeros(3), 1e-12);
        let exact = a.clone().lu().solve(&b).unwrap();
        assert!((x - exact).amax() < 1e-10);
    }

    #[test]
    fn symmetric_distance_identifies_images() {
        let x = vec![0.6, 0.8, 0.0, 1.0];
        let y = vec![0.0, -1.0, 0.6, 0.8];
        assert!(symmetric_distance(&x, &y) < 1e-15);
        assert!(symmetric_distance(&x, &[-0.6, -0.8, 0.0, -1.0]) < 1e-15);
        assert!(symmetric_distance(&x, &[1.0, 0.0, 0.0, 1.0]) > 0.1);
    }
}
