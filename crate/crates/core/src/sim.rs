//! Settings shared by the two time steppers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::MIN_SEGMENTS;

/// Time discretization of the angle scheme.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeScheme {
    #[default]
    BackwardEuler,
    Trapezoidal,
}

/// Weight of `θ̇_i` in the velocity of its own segment midpoint.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MidpointRule {
    /// `1/(2N)`: the midpoint sits half a segment past node `i − 1`.
    #[default]
    Exact,
    /// `3/(2N)`, the coefficient as it appears in print.
    AsPrinted,
}

impl MidpointRule {
    pub fn weight(self, n: usize) -> f64 {
        match self {
            MidpointRule::Exact => 0.5 / n as f64,
            MidpointRule::AsPrinted => 1.5 / n as f64,
        }
    }
}

/// Range of the total-force sum.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForceRows {
    /// Sum over all `N` segments.
    #[default]
    AllSegments,
    /// Stops at segment `N − 1`. This duplicates the last normal-force row,
    /// so every solve reports a singular matrix.
    FirstNMinusOne,
}

/// End conditions of the angle scheme.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryStencil {
    /// One-sided `θ_ss` with `θ_1`, `θ_N` at their midpoints: the first row
    /// reads `−N²(θ_2 − θ_1) + Nκ0(0) + ∂_sκ0(0)` and the last angle is
    /// `θ_{N−1} + κ0(1)/N − ∂_sκ0(1)/N²`.
    #[default]
    Midpoint,
    /// Factor 2 on both end stencils and no `∂_sκ0` in the first row. This
    /// pins `θ_ss(0) ≈ 0` and `θ_ss(1) ≈ ∂_sκ0/2`, a first-order error.
    AsPrinted,
}

/// How the angle scheme solves its velocity system.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearSolver {
    /// Forward sweep along the filament plus a 2x2 solve for the basepoint.
    #[default]
    Sweep,
    /// Dense `(N+1)x(N+1)` assembly, LU with partial pivoting.
    Dense,
}

/// Counters accumulated over a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub steps: usize,
    pub newton_iterations: usize,
    pub jacobian_builds: usize,
    pub halvings: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Drag anisotropy.
    pub gamma: f64,
    pub n_segments: usize,
    pub dt: f64,
    /// Absolute end time.
    pub t_end: f64,
    /// `None` picks the scheme default.
    pub newton_tol: Option<f64>,
    pub max_newton_iters: usize,
    pub max_halvings: u32,
    /// Keep every `output_stride`-th step, plus the last.
    pub output_stride: usize,
    pub scheme: TimeScheme,
    pub midpoint: MidpointRule,
    pub force_rows: ForceRows,
    pub boundary: BoundaryStencil,
    pub solver: LinearSolver,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            n_segments: 100,
            dt: 2e-4,
            t_end: 10.0,
            newton_tol: None,
            max_newton_iters: 12,
            max_halvings: 8,
            output_stride: 1,
            scheme: TimeScheme::default(),
            midpoint: MidpointRule::default(),
            force_rows: ForceRows::default(),
            boundary: BoundaryStencil::default(),
            solver: LinearSolver::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return bad(format!(
                "gamma must be finite and non-negative, got {}",
                self.gamma
            ));
        }
        if self.n_segments < MIN_SEGMENTS {
            return bad(format!(
                "n_segments must be at least {MIN_SEGMENTS}, got {}",
                self.n_segments
            ));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !self.t_end.is_finite() {
            return bad("t_end must be finite".into());
        }
        if let Some(tol) = self.newton_tol {
            if !(tol.is_finite() && tol > 0.0) {
                return bad(format!("newton_tol must be positive, got {tol}"));
            }
        }
        if self.max_newton_iters == 0 {
            return bad("max_newton_iters must be at least 1".into());
        }
        if self.output_stride == 0 {
            return bad("output_stride must be at least 1".into());
        }
        Ok(())
    }

    /// Step count and the time of step `k` from `t0` to `t_end`.
    pub(crate) fn schedule(&self, t0: f64) -> (usize, impl Fn(usize) -> f64 + '_) {
        let span = self.t_end - t0;
        let steps = if span <= 0.0 {
            0
        } else {
            (span / self.dt - 1e-9).ceil().max(1.0) as usize
        };
        let t_end = self.t_end;
        let dt = self.dt;
        (steps, move |k: usize| {
            if k >= steps {
                t_end
            } else {
                t0 + k as f64 * dt
            }
        })
    }

    pub(crate) fn is_recorded(&self, k: usize, steps: usize) -> bool {
        k % self.output_stride == 0 || k == steps
    }
}
