//! Nodal formulation: node positions plus midpoint tension multipliers, with
//! every segment length imposed as a constraint. Each backward Euler step is
//! one Newton solve in which the node frames and `κ0` are frozen.
//!
//! Unknowns are interleaved per node, `(x_i, y_i, τ̂_{i+1/2})`, so the
//! Jacobian is banded with seven sub- and super-diagonals.

use crate::analytics::instantaneous_speed;
use crate::error::{Error, Result};
use crate::forcing::ForcingSpec;
use crate::linalg::{norm_inf, BandedLu, BandedMatrix};
use crate::sim::{SimConfig, StepStats};
use crate::state::{angles_from_nodes, FilamentState, Vec2, MIN_SEGMENTS};
use crate::trajectory::{Diagnostics, Method, Record, Trajectory};

/// Newton tolerance on the scaled residual when the config leaves it unset.
pub const DEFAULT_TOL: f64 = 1e-11;

const BAND: usize = 7;

/// Nodes `X_0..X_N` and multipliers `τ̂_{1/2}..τ̂_{N−1/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedState {
    pub nodes: Vec<Vec2>,
    pub tau: Vec<f64>,
    pub time: f64,
}

impl ConstrainedState {
    pub fn new(nodes: Vec<Vec2>, tau: Vec<f64>, time: f64) -> Result<Self> {
        if tau.len() < MIN_SEGMENTS || nodes.len() != tau.len() + 1 {
            return Err(Error::InvalidInput(format!(
                "need N + 1 nodes and N >= {MIN_SEGMENTS} multipliers, got {} and {}",
                nodes.len(),
                tau.len()
            )));
        }
        if !(nodes.iter().flatten().chain(&tau).all(|v| v.is_finite()) && time.is_finite()) {
            return Err(Error::NonFinite("nodal state"));
        }
        Ok(Self { nodes, tau, time })
    }

    /// Nodes of `state` with zero multipliers.
    pub fn from_filament(state: &FilamentState) -> Self {
        Self {
            nodes: state.nodes(),
            tau: vec![0.0; state.n_segments()],
            time: state.time,
        }
    }

    pub fn n_segments(&self) -> usize {
        self.tau.len()
    }

    /// Chord angles, unwrapped along the filament; `reference` picks the branch
    /// of the first segment.
    pub fn to_filament(&self, reference: f64) -> Result<FilamentState> {
        FilamentState::new(
            self.nodes[0],
            angles_from_nodes(&self.nodes, reference),
            self.time,
        )
    }

    /// `max_i | N²|X_{i+1} − X_i|² − 1 |`.
    pub fn constraint_residual(&self) -> f64 {
        let n2 = (self.n_segments() * self.n_segments()) as f64;
        self.nodes
            .windows(2)
            .map(|w| (n2 * dist2(w[0], w[1]) - 1.0).abs())
            .fold(0.0, f64::max)
    }

    fn unknowns(&self) -> Vec<f64> {
        let n = self.n_segments();
        let mut u = Vec::with_capacity(3 * n + 2);
        for i in 0..n {
            u.extend_from_slice(&self.nodes[i]);
            u.push(self.tau[i]);
        }
        u.extend_from_slice(&self.nodes[n]);
        u
    }

    fn from_unknowns(u: &[f64], time: f64) -> Result<Self> {
        let n = (u.len() - 2) / 3;
        let nodes = (0..=n).map(|i| [u[3 * i], u[3 * i + 1]]).collect();
        let tau = (0..n).map(|k| u[3 * k + 2]).collect();
        Self::new(nodes, tau, time)
    }
}

fn sub(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

fn dist2(a: Vec2, b: Vec2) -> f64 {
    let d = sub(b, a);
    d[0] * d[0] + d[1] * d[1]
}

fn node(u: &[f64], i: usize) -> Vec2 {
    [u[3 * i], u[3 * i + 1]]
}

/// Quantities taken from the previous step.
#[derive(Debug, Clone, PartialEq)]
pub struct FrozenFrame {
    /// Unit chord `(X_{i+1} − X_{i−1})/|·|` at interior nodes `1..N−1`.
    pub e_t: Vec<Vec2>,
    /// `e_t` rotated by π/2.
    pub e_n: Vec<Vec2>,
    /// `κ0(s_i, t)` at interior nodes, at the new time.
    pub kappa0: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct NodalModel<'a> {
    forcing: &'a ForcingSpec,
    n: usize,
    gamma: f64,
}

impl<'a> NodalModel<'a> {
    pub fn new(forcing: &'a ForcingSpec, config: &SimConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            forcing,
            n: config.n_segments,
            gamma: config.gamma,
        })
    }

    pub fn n_segments(&self) -> usize {
        self.n
    }

    fn check(&self, state: &ConstrainedState) -> Result<()> {
        if state.n_segments() != self.n {
            return Err(Error::InvalidInput(format!(
                "state has {} segments, model has {}",
                state.n_segments(),
                self.n
            )));
        }
        for (i, w) in state.nodes.windows(2).enumerate() {
            if dist2(w[0], w[1]) == 0.0 {
                return Err(Error::DegenerateSegment { index: i });
            }
        }
        Ok(())
    }

    /// Frames from `prev` and `κ0` at time `t`.
    pub fn frame(&self, prev: &ConstrainedState, t: f64) -> Result<FrozenFrame> {
        self.check(prev)?;
        let nf = self.n as f64;
        let mut e_t = Vec::with_capacity(self.n - 1);
        let mut e_n = Vec::with_capacity(self.n - 1);
        let mut kappa0 = Vec::with_capacity(self.n - 1);
        for i in 1..self.n {
            let d = sub(prev.nodes[i + 1], prev.nodes[i - 1]);
            let len = d[0].hypot(d[1]);
            if !(len > 0.0) {
                return Err(Error::DegenerateSegment { index: i });
            }
            let t_i = [d[0] / len, d[1] / len];
            e_t.push(t_i);
            e_n.push([-t_i[1], t_i[0]]);
            kappa0.push(self.forcing.kappa0(i as f64 / nf, t));
        }
        Ok(FrozenFrame { e_t, e_n, kappa0 })
    }

    /// `(I + γ e eᵀ) v`.
    fn mobility(&self, e: Vec2, v: Vec2) -> Vec2 {
        let d = self.gamma * (e[0] * v[0] + e[1] * v[1]);
        [v[0] + d * e[0], v[1] + d * e[1]]
    }

    /// `F_{k+1/2}` for `k = 0..N−1`.
    fn forces(&self, frame: &FrozenFrame, u: &[f64]) -> Vec<Vec2> {
        let n = self.n;
        let nf = n as f64;
        let n2 = nf * nf;
        let mut q = vec![[0.0; 2]; n + 1];
        for i in 1..n {
            let (a, b, c) = (node(u, i - 1), node(u, i), node(u, i + 1));
            let k = frame.kappa0[i - 1];
            let e = frame.e_n[i - 1];
            for d in 0..2 {
                q[i][d] = n2 * (c[d] - 2.0 * b[d] + a[d]) - k * e[d];
            }
        }
        (0..n)
            .map(|k| {
                let tau = u[3 * k + 2];
                let (a, b) = (node(u, k), node(u, k + 1));
                [
                    nf * (q[k + 1][0] - q[k][0]) - tau * nf * (b[0] - a[0]),
                    nf * (q[k + 1][1] - q[k][1]) - tau * nf * (b[1] - a[1]),
                ]
            })
            .collect()
    }

    fn residual_with(&self, frame: &FrozenFrame, u_prev: &[f64], u: &[f64], c: f64) -> Vec<f64> {
        let n = self.n;
        let n2 = (n * n) as f64;
        let f = self.forces(frame, u);
        let mut r = vec![0.0; 3 * n + 2];
        for d in 0..2 {
            r[d] = c * f[0][d];
            r[3 * n + d] = c * f[n - 1][d];
        }
        for i in 1..n {
            let m = self.mobility(frame.e_t[i - 1], sub(f[i], f[i - 1]));
            for d in 0..2 {
                r[3 * i + d] = u[3 * i + d] - u_prev[3 * i + d] + c * m[d];
            }
        }
        for k in 0..n {
            r[3 * k + 2] = n2 * dist2(node(u, k), node(u, k + 1)) - 1.0;
        }
        r
    }

    /// Residual of the step from `prev` to `guess.time`, length `3N + 2`.
    ///
    /// Rows per node `i`: two momentum rows `X_i − X_i^prev + Δt N M_i (F_{i+1/2} − F_{i−1/2})`
    /// (at the ends `Δt N F_{1/2}` and `Δt N F_{N−1/2}`), then the length
    /// constraint `N²|X_{i+1} − X_i|² − 1` of segment `i + 1/2`.
    pub fn residual(&self, prev: &ConstrainedState, guess: &ConstrainedState) -> Result<Vec<f64>> {
        self.check(guess)?;
        let dt = guess.time - prev.time;
        if !(dt > 0.0) {
            return Err(Error::InvalidInput(format!(
                "step to {} from {}",
                guess.time, prev.time
            )));
        }
        let frame = self.frame(prev, guess.time)?;
        Ok(self.residual_with(
            &frame,
            &prev.unknowns(),
            &guess.unknowns(),
            dt * self.n as f64,
        ))
    }

    /// `∂F_{k+1/2}/∂X_j` as a multiple of the identity.
    fn dforce(&self, u: &[f64], k: usize, j: usize) -> f64 {
        let n = self.n;
        let nf = n as f64;
        let n2 = nf * nf;
        let dq = |i: usize| -> f64 {
            if i == 0 || i == n {
                0.0
            } else if j + 1 == i || j == i + 1 {
                n2
            } else if j == i {
                -2.0 * n2
            } else {
                0.0
            }
        };
        let tau = u[3 * k + 2];
        let dx = if j == k + 1 {
            1.0
        } else if j == k {
            -1.0
        } else {
            0.0
        };
        nf * (dq(k + 1) - dq(k)) - tau * nf * dx
    }

    /// `∂F_{k+1/2}/∂τ̂_{k+1/2}`.
    fn dforce_dtau(&self, u: &[f64], k: usize) -> Vec2 {
        let nf = self.n as f64;
        let d = sub(node(u, k + 1), node(u, k));
        [-nf * d[0], -nf * d[1]]
    }

    fn stencil(&self, k: usize) -> std::ops::RangeInclusive<usize> {
        k.saturating_sub(1)..=(k + 2).min(self.n)
    }

    fn jacobian_with(&self, frame: &FrozenFrame, u: &[f64], c: f64) -> BandedMatrix {
        let n = self.n;
        let n2 = (n * n) as f64;
        let mut jac = BandedMatrix::zeros(3 * n + 2, BAND, BAND);
        for (row, k) in [(0, 0), (3 * n, n - 1)] {
            for j in self.stencil(k) {
                let s = c * self.dforce(u, k, j);
                jac.add(row, 3 * j, s);
                jac.add(row + 1, 3 * j + 1, s);
            }
            let g = self.dforce_dtau(u, k);
            jac.add(row, 3 * k + 2, c * g[0]);
            jac.add(row + 1, 3 * k + 2, c * g[1]);
        }
        for i in 1..n {
            let e = frame.e_t[i - 1];
            let m = [
                [1.0 + self.gamma * e[0] * e[0], self.gamma * e[0] * e[1]],
                [self.gamma * e[1] * e[0], 1.0 + self.gamma * e[1] * e[1]],
            ];
            jac.add(3 * i, 3 * i, 1.0);
            jac.add(3 * i + 1, 3 * i + 1, 1.0);
            for j in (i - 1).saturating_sub(1)..=(i + 2).min(n) {
                let s = c * (self.dforce(u, i, j) - self.dforce(u, i - 1, j));
                if s != 0.0 {
                    for a in 0..2 {
                        for b in 0..2 {
                            jac.add(3 * i + a, 3 * j + b, s * m[a][b]);
                        }
                    }
                }
            }
            let (gp, gm) = (self.dforce_dtau(u, i), self.dforce_dtau(u, i - 1));
            for a in 0..2 {
                jac.add(
                    3 * i + a,
                    3 * i + 2,
                    c * (m[a][0] * gp[0] + m[a][1] * gp[1]),
                );
                jac.add(
                    3 * i + a,
                    3 * i - 1,
                    -c * (m[a][0] * gm[0] + m[a][1] * gm[1]),
                );
            }
        }
        for k in 0..n {
            let d = sub(node(u, k + 1), node(u, k));
            for a in 0..2 {
                jac.add(3 * k + 2, 3 * (k + 1) + a, 2.0 * n2 * d[a]);
                jac.add(3 * k + 2, 3 * k + a, -2.0 * n2 * d[a]);
            }
        }
        jac
    }

    /// Analytic Jacobian of [`NodalModel::residual`] with respect to the
    /// interleaved unknowns of `guess`.
    pub fn jacobian(
        &self,
        prev: &ConstrainedState,
        guess: &ConstrainedState,
    ) -> Result<BandedMatrix> {
        self.check(guess)?;
        let dt = guess.time - prev.time;
        let frame = self.frame(prev, guess.time)?;
        Ok(self.jacobian_with(&frame, &guess.unknowns(), dt * self.n as f64))
    }

    /// Trapezoid-weighted drag density `f_i = (I + γ e eᵀ)⁻¹ V_i` at the nodes
    /// for node velocities `vel`.
    fn drag(&self, state: &ConstrainedState, vel: &[Vec2]) -> Vec<Vec2> {
        let n = self.n;
        let beta = self.gamma / (1.0 + self.gamma);
        (0..=n)
            .map(|i| {
                let d = sub(
                    state.nodes[(i + 1).min(n)],
                    state.nodes[i.saturating_sub(1)],
                );
                let len = d[0].hypot(d[1]);
                let e = [d[0] / len, d[1] / len];
                let p = beta * (e[0] * vel[i][0] + e[1] * vel[i][1]);
                [vel[i][0] - p * e[0], vel[i][1] - p * e[1]]
            })
            .collect()
    }

    /// Diagnostics of `state` given the node velocities of the step that
    /// produced it. Work, force and torque use the trapezoid rule.
    pub fn diagnostics(
        &self,
        state: &ConstrainedState,
        filament: &FilamentState,
        vel: &[Vec2],
    ) -> Diagnostics {
        let n = self.n;
        let nf = n as f64;
        let f = self.drag(state, vel);
        let x0 = state.nodes[0];
        let mut work = 0.0;
        let mut force = [0.0; 2];
        let mut torque = 0.0;
        for i in 0..=n {
            let w = if i == 0 || i == n { 0.5 } else { 1.0 } / nf;
            work += w * (f[i][0] * vel[i][0] + f[i][1] * vel[i][1]);
            force[0] += w * f[i][0];
            force[1] += w * f[i][1];
            let r = sub(state.nodes[i], x0);
            torque += w * (r[0] * f[i][1] - r[1] * f[i][0]);
        }
        Diagnostics {
            speed: instantaneous_speed(filament, self.forcing, self.gamma),
            work_rate: work,
            force_residual: force[0].hypot(force[1]),
            torque_residual: torque.abs(),
        }
    }
}

/// Backward Euler with Newton on the full nodal system.
pub struct NodalStepper<'a> {
    model: NodalModel<'a>,
    tol: f64,
    max_iter: usize,
    max_halvings: u32,
    log: Vec<f64>,
    stats: StepStats,
}

impl<'a> NodalStepper<'a> {
    pub fn new(forcing: &'a ForcingSpec, config: &SimConfig) -> Result<Self> {
        Ok(Self {
            model: NodalModel::new(forcing, config)?,
            tol: config.newton_tol.unwrap_or(DEFAULT_TOL),
            max_iter: config.max_newton_iters,
            max_halvings: config.max_halvings,
            log: Vec::new(),
            stats: StepStats::default(),
        })
    }

    pub fn model(&self) -> &NodalModel<'a> {
        &self.model
    }

    pub fn stats(&self) -> StepStats {
        self.stats
    }

    /// `‖residual‖_∞` at every iterate of the last Newton solve.
    pub fn residual_log(&self) -> &[f64] {
        &self.log
    }

    /// Advances `state` to `t1`, halving the interval when Newton fails.
    pub fn step_to(&mut self, state: &ConstrainedState, t1: f64) -> Result<ConstrainedState> {
        let out = self.advance(state, t1, 0)?;
        self.stats.steps += 1;
        Ok(out)
    }

    fn advance(
        &mut self,
        state: &ConstrainedState,
        t1: f64,
        depth: u32,
    ) -> Result<ConstrainedState> {
        match self.attempt(state, t1) {
            Err(Error::NewtonFailed { .. } | Error::SingularMatrix { .. })
                if depth < self.max_halvings =>
            {
                self.stats.halvings += 1;
                let mid = 0.5 * (state.time + t1);
                let half = self.advance(state, mid, depth + 1)?;
                self.advance(&half, t1, depth + 1)
            }
            other => other,
        }
    }

    /// Residual level set by rounding in the `Δt N⁴` second-difference terms.
    fn rounding_floor(&self, u: &[f64], dt: f64) -> f64 {
        let n4 = (self.model.n as f64).powi(4);
        let scale = (0..=self.model.n).fold(1.0_f64, |m, i| {
            m.max(u[3 * i].abs()).max(u[3 * i + 1].abs())
        });
        10.0 * f64::EPSILON * dt * n4 * scale
    }

    fn attempt(&mut self, state: &ConstrainedState, t1: f64) -> Result<ConstrainedState> {
        let dt = t1 - state.time;
        if !(dt > 0.0) {
            return Err(Error::InvalidInput(format!(
                "step to {t1} from {}",
                state.time
            )));
        }
        let frame = self.model.frame(state, t1)?;
        let c = dt * self.model.n as f64;
        let u0 = state.unknowns();
        let mut u = u0.clone();
        let tol = self.tol.max(self.rounding_floor(&u0, dt));
        let n = self.model.n;
        self.log.clear();
        for iter in 0..=self.max_iter {
            let r = self.model.residual_with(&frame, &u0, &u, c);
            let rn = norm_inf(&r);
            self.log.push(rn);
            if !rn.is_finite() {
                break;
            }
            // Length rows are O(1) and are held to the plain tolerance.
            let lengths = (0..n).fold(0.0_f64, |m, k| m.max(r[3 * k + 2].abs()));
            if rn < tol && lengths < self.tol {
                return ConstrainedState::from_unknowns(&u, t1);
            }
            if iter == self.max_iter {
                break;
            }
            let jac = self.model.jacobian_with(&frame, &u, c);
            self.stats.jacobian_builds += 1;
            let du = BandedLu::factor(jac)?.solve(&r);
            for (x, d) in u.iter_mut().zip(&du) {
                *x -= d;
            }
            self.stats.newton_iterations += 1;
        }
        Err(Error::NewtonFailed {
            time: t1,
            reason: format!(
                "residual {:e} above tolerance {tol:e}",
                self.log[self.log.len() - 1]
            ),
        })
    }
}

/// Runs the nodal scheme from `initial` to `config.t_end`. Recorded angles are
/// chord angles; diagnostics use the node velocities of the last step.
pub fn run(
    config: &SimConfig,
    forcing: &ForcingSpec,
    initial: &FilamentState,
) -> Result<Trajectory> {
    run_with_stats(config, forcing, initial).map(|(t, _)| t)
}

pub fn run_with_stats(
    config: &SimConfig,
    forcing: &ForcingSpec,
    initial: &FilamentState,
) -> Result<(Trajectory, StepStats)> {
    let mut stepper = NodalStepper::new(forcing, config)?;
    let n = config.n_segments;
    if initial.n_segments() != n {
        return Err(Error::InvalidInput(format!(
            "state has {} segments, config has {n}",
            initial.n_segments()
        )));
    }
    let mut state = ConstrainedState::from_filament(initial);
    let mut filament = initial.clone();
    let mut traj = Trajectory::new(Method::B, n);
    let rest = vec![[0.0; 2]; n + 1];
    traj.push(Record {
        diag: stepper.model.diagnostics(&state, &filament, &rest),
        state: filament.clone(),
    })?;
    let (steps, at) = config.schedule(state.time);
    for k in 1..=steps {
        let next = stepper.step_to(&state, at(k))?;
        filament = next.to_filament(filament.theta[0])?;
        if config.is_recorded(k, steps) {
            let dt = next.time - state.time;
            let vel: Vec<Vec2> = next
                .nodes
                .iter()
                .zip(&state.nodes)
                .map(|(a, b)| [(a[0] - b[0]) / dt, (a[1] - b[1]) / dt])
                .collect();
            traj.push(Record {
                diag: stepper.model.diagnostics(&next, &filament, &vel),
                state: filament.clone(),
            })?;
        }
        state = next;
    }
    Ok((traj, stepper.stats()))
}
