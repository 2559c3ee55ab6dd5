//! Clamped-clamped biharmonic eigenfunctions on [0, 1].
//!
//! The k-th eigenvalue is `λ_k = ξ_k⁴` where `ξ_k` is the k-th positive root of
//! `cos ξ cosh ξ = 1`. Eigenfunctions are evaluated in a regrouped form that only
//! contains decaying exponentials, so they stay accurate up to [`MAX_MODES`].

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::quadrature::{simpson_weights, uniform_grid};

/// Largest supported mode index.
pub const MAX_MODES: usize = 20;

/// Default number of quadrature samples on [0, 1].
pub const DEFAULT_POINTS: usize = 10_001;

const ROOT_TOL: f64 = 1e-15;
const MAX_ROOT_ITERS: usize = 200;

/// `cos ξ − sech ξ`, the characteristic equation divided through by `cosh ξ`.
///
/// Near a root the literal form `cos ξ cosh ξ − 1` amplifies the spacing of
/// representable doubles by `cosh ξ`, so this scaled form is the one whose
/// residual can be driven to rounding level for every supported mode.
pub fn scaled_characteristic(xi: f64) -> f64 {
    xi.cos() - 1.0 / xi.cosh()
}

/// `cos ξ cosh ξ − 1` evaluated literally in double precision.
pub fn characteristic(xi: f64) -> f64 {
    xi.cos() * xi.cosh() - 1.0
}

/// Size of `cos ξ cosh ξ − 1` that a one-ulp perturbation of `ξ` produces near
/// the root. No double can do better than about half of this.
pub fn characteristic_floor(xi: f64) -> f64 {
    let ulp = f64::from_bits(xi.to_bits() + 1) - xi;
    xi.cosh() * (xi.sin().abs() + xi.cos().abs() * xi.tanh().abs()) * ulp
}

fn scaled_derivative(xi: f64) -> f64 {
    -xi.sin() + xi.tanh() / xi.cosh()
}

/// The first `k_max` positive roots of `cos ξ cosh ξ = 1`.
///
/// Newton iteration seeded at `(2k+1)π/2`, falling back to bisection whenever
/// a step leaves the bracketing interval.
pub fn find_roots(k_max: usize) -> Result<Vec<f64>> {
    if k_max == 0 {
        return Err(Error::InvalidInput("k_max must be at least 1".into()));
    }
    if k_max > MAX_MODES {
        return Err(Error::ModeCap {
            requested: k_max,
            cap: MAX_MODES,
        });
    }
    (1..=k_max).map(root).collect()
}

fn root(k: usize) -> Result<f64> {
    let centre = (2 * k + 1) as f64 * std::f64::consts::FRAC_PI_2;
    let (mut lo, mut hi) = (centre - 0.5, centre + 0.5);
    let mut f_lo = scaled_characteristic(lo);
    if f_lo * scaled_characteristic(hi) > 0.0 {
        return Err(Error::RootNotConverged {
            k,
            residual: f64::NAN,
        });
    }
    let mut x = centre;
    for _ in 0..MAX_ROOT_ITERS {
        let f = scaled_characteristic(x);
        if f == 0.0 {
            return Ok(x);
        }
        if (f < 0.0) == (f_lo < 0.0) {
            lo = x;
            f_lo = f;
        } else {
            hi = x;
        }
        let step = f / scaled_derivative(x);
        let mut next = x - step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= ROOT_TOL * x || hi - lo <= ROOT_TOL * x {
            return Ok(polish(next));
        }
        x = next;
    }
    Err(Error::RootNotConverged {
        k,
        residual: scaled_characteristic(x),
    })
}

/// Walks to the neighbouring double with the smallest scaled residual.
fn polish(mut x: f64) -> f64 {
    let step = |v: f64, up: bool| {
        let bits = v.to_bits();
        f64::from_bits(if up { bits + 1 } else { bits - 1 })
    };
    let mut best = scaled_characteristic(x).abs();
    for up in [true, false] {
        loop {
            let y = step(x, up);
            let fy = scaled_characteristic(y).abs();
            if fy < best {
                best = fy;
                x = y;
            } else {
                break;
            }
        }
    }
    x
}

/// Unit-norm clamped mode for root `xi`, evaluated at `s` with its derivative.
///
/// Equals `−ψ̂(s)/‖ψ̂‖` for the textbook `ψ̂ = (cos ξ − cosh ξ)(cos ξs − cosh ξs)
/// + (sin ξ + sinh ξ)(sin ξs − sinh ξs)`, written so that no term grows faster
/// than `O(1)`.
fn unit_mode(xi: f64, s: f64) -> (f64, f64) {
    let e = (-xi).exp();
    let (sx, cx) = xi.sin_cos();
    let den = 1.0 - e * e - 2.0 * sx * e;
    let sigma = (1.0 + e * e - 2.0 * cx * e) / den;
    let c = sx - cx + e;
    let (sxs, cxs) = (xi * s).sin_cos();
    let decay = (-xi * s).exp();
    let up = (xi * (s - 1.0)).exp();
    let down = (-xi * (s + 1.0)).exp();
    let value = cxs - sigma * sxs - decay + c * (up - down) / den;
    let slope = xi * (-sxs - sigma * cxs + decay) + c * xi * (up + down) / den;
    (value, slope)
}

/// Reference evaluation straight from the hyperbolic form, sign-flipped to
/// match [`EigenBasis`]. Only trustworthy for small `ξ`; used as a test oracle.
pub fn textbook_mode(xi: f64, s: f64) -> (f64, f64) {
    let a = xi.cos() - xi.cosh();
    let b = xi.sin() + xi.sinh();
    let v = a * ((xi * s).cos() - (xi * s).cosh()) + b * ((xi * s).sin() - (xi * s).sinh());
    let d = xi * (a * (-(xi * s).sin() - (xi * s).sinh()) + b * ((xi * s).cos() - (xi * s).cosh()));
    (v, d)
}

/// Eigen-data for modes `1..=k_max`, tabulated on a uniform Simpson grid.
#[derive(Debug, Clone)]
pub struct EigenBasis {
    xi: Vec<f64>,
    lambda: Vec<f64>,
    grid: Vec<f64>,
    weights: Vec<f64>,
    psi: Vec<Vec<f64>>,
    dpsi: Vec<Vec<f64>>,
    norms: Vec<f64>,
    coupling: DMatrix<f64>,
    coupling_raw: DMatrix<f64>,
}

impl EigenBasis {
    pub fn new(k_max: usize) -> Result<Self> {
        Self::with_points(k_max, DEFAULT_POINTS)
    }

    pub fn with_points(k_max: usize, points: usize) -> Result<Self> {
        let xi = find_roots(k_max)?;
        let weights = simpson_weights(points)?;
        let grid = uniform_grid(points);
        let mut psi = Vec::with_capacity(k_max);
        let mut dpsi = Vec::with_capacity(k_max);
        let mut norms = Vec::with_capacity(k_max);
        for &x in &xi {
            let (v, d): (Vec<f64>, Vec<f64>) = grid.iter().map(|&s| unit_mode(x, s)).unzip();
            if v.iter().chain(&d).any(|z| !z.is_finite()) {
                return Err(Error::NonFinite("eigenfunction evaluation"));
            }
            let norm = weights
                .iter()
                .zip(&v)
                .map(|(w, p)| w * p * p)
                .sum::<f64>()
                .sqrt();
            psi.push(v.iter().map(|p| -p / norm).collect());
            dpsi.push(d.iter().map(|p| -p / norm).collect());
            norms.push(norm);
        }
        let lambda = xi.iter().map(|x| x.powi(4)).collect();
        let mut basis = Self {
            xi,
            lambda,
            grid,
            weights,
            psi,
            dpsi,
            norms,
            coupling: DMatrix::zeros(k_max, k_max),
            coupling_raw: DMatrix::zeros(k_max, k_max),
        };
        basis.coupling_raw = basis.compute_coupling();
        basis.coupling = basis.coupling_raw.clone();
        basis.coupling.fill_diagonal(0.0);
        Ok(basis)
    }

    pub fn k_max(&self) -> usize {
        self.xi.len()
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Samples of `ψ_k` (1-based `k`) on [`Self::grid`].
    pub fn psi(&self, k: usize) -> &[f64] {
        &self.psi[k - 1]
    }

    /// Samples of `ψ_k′` (1-based `k`) on [`Self::grid`].
    pub fn dpsi(&self, k: usize) -> &[f64] {
        &self.dpsi[k - 1]
    }

    /// Quadrature norms of the unit-scaled modes before the final division.
    pub fn norm_factors(&self) -> &[f64] {
        &self.norms
    }

    /// `S[k-1, l-1] = ∫ ψ_k ψ_l′ ds`, with the diagonal set to its exact value 0
    /// (`ψ_k²/2` vanishes at both clamped ends).
    pub fn coupling(&self) -> &DMatrix<f64> {
        &self.coupling
    }

    /// Quadrature values of every entry, diagonal included.
    pub fn coupling_raw(&self) -> &DMatrix<f64> {
        &self.coupling_raw
    }

    /// `ψ_k(s)` and `ψ_k′(s)` at arbitrary `s` in [0, 1].
    pub fn eval(&self, k: usize, s: f64) -> Result<(f64, f64)> {
        if k == 0 || k > self.k_max() {
            return Err(Error::ModeOutOfRange {
                k,
                available: self.k_max(),
            });
        }
        let (v, d) = unit_mode(self.xi[k - 1], s);
        let n = self.norms[k - 1];
        let out = (-v / n, -d / n);
        if out.0.is_finite() && out.1.is_finite() {
            Ok(out)
        } else {
            Err(Error::NonFinite("eigenfunction evaluation"))
        }
    }

    /// Vectorised [`Self::eval`].
    pub fn eval_eigenfunction(&self, k: usize, s: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut v = Vec::with_capacity(s.len());
        let mut d = Vec::with_capacity(s.len());
        for &x in s {
            let (a, b) = self.eval(k, x)?;
            v.push(a);
            d.push(b);
        }
        Ok((v, d))
    }

    /// `∫ f ψ_k ds` for samples `f` on [`Self::grid`].
    pub fn project(&self, f: &[f64], k: usize) -> f64 {
        self.weights
            .iter()
            .zip(f)
            .zip(&self.psi[k - 1])
            .map(|((w, a), b)| w * a * b)
            .sum()
    }

    /// `∫ f g ds` for samples on [`Self::grid`].
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(f)
            .zip(g)
            .map(|((w, a), b)| w * a * b)
            .sum()
    }

    fn compute_coupling(&self) -> DMatrix<f64> {
        let k = self.k_max();
        DMatrix::from_fn(k, k, |i, j| self.inner(&self.psi[i], &self.dpsi[j]))
    }

    /// `max |S + Sᵀ|` over the raw quadrature values.
    pub fn antisymmetry_error(&self) -> f64 {
        let s = &self.coupling_raw;
        (s + s.transpose()).amax()
    }

    /// Largest `|S_kl|` over pairs with `k ≡ l (mod 2)`.
    pub fn parity_leak(&self) -> f64 {
        let k = self.k_max();
        let mut worst: f64 = 0.0;
        for i in 0..k {
            for j in 0..k {
                if (i + j) % 2 == 0 {
                    worst = worst.max(self.coupling_raw[(i, j)].abs());
                }
            }
        }
        worst
    }
}
