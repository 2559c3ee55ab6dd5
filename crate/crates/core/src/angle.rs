//! Angle formulation: the basepoint and tangent angles evolve, segment lengths
//! are fixed, and the velocities come from normal-force rows closed by total
//! force balance. The last angle is slaved to the free-end condition.

use crate::analytics::instantaneous_speed;
use crate::error::{Error, Result};
use crate::forcing::ForcingSpec;
use crate::linalg::{norm_inf, DenseLu, DenseMatrix};
use crate::sim::{
    BoundaryStencil, ForceRows, LinearSolver, MidpointRule, SimConfig, StepStats, TimeScheme,
};
use crate::state::{normal, tangent, FilamentState, Vec2};
use crate::trajectory::{Diagnostics, Method, Record, Trajectory};

/// Newton tolerance on the state increment when the config leaves it unset.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Basepoint velocity and all `N` angular velocities.
#[derive(Debug, Clone, PartialEq)]
pub struct Velocities {
    pub v0: Vec2,
    pub theta_dot: Vec<f64>,
}

/// Dense system over `(ẋ0, ẏ0, θ̇_1..θ̇_{N−1})`.
///
/// Row `j − 1` is the normal-force row of segment `j` for `j = 1..N−1`; the
/// last two rows are the x and y total-force balance.
#[derive(Debug, Clone)]
pub struct VelocitySystem {
    pub matrix: DenseMatrix,
    pub rhs: Vec<f64>,
    /// `dθ_N/dt − dθ_{N−1}/dt` at the assembly time.
    pub g_dot: f64,
}

impl VelocitySystem {
    pub fn solve(&self) -> Result<Velocities> {
        let u = DenseLu::factor(self.matrix.clone())?.solve(&self.rhs);
        if !u.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("velocity solve"));
        }
        let mut theta_dot = u[2..].to_vec();
        theta_dot.push(theta_dot[theta_dot.len() - 1] + self.g_dot);
        Ok(Velocities {
            v0: [u[0], u[1]],
            theta_dot,
        })
    }
}

/// Forcing terms that depend on time only.
#[derive(Debug, Clone)]
struct Frame {
    /// End source term for the first row, `∂_s κ0` at the segment midpoint after.
    source: Vec<f64>,
    g: f64,
    g_dot: f64,
}

#[derive(Debug, Clone)]
pub struct AngleModel<'a> {
    forcing: &'a ForcingSpec,
    n: usize,
    gamma: f64,
    midpoint: MidpointRule,
    force_rows: ForceRows,
    boundary: BoundaryStencil,
    solver: LinearSolver,
}

impl<'a> AngleModel<'a> {
    pub fn new(forcing: &'a ForcingSpec, config: &SimConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            forcing,
            n: config.n_segments,
            gamma: config.gamma,
            midpoint: config.midpoint,
            force_rows: config.force_rows,
            boundary: config.boundary,
            solver: config.solver,
        })
    }

    pub fn n_segments(&self) -> usize {
        self.n
    }

    fn frame(&self, t: f64) -> Frame {
        let n = self.n as f64;
        let mut source = Vec::with_capacity(self.n - 1);
        let start = self.forcing.sample(0.0, t);
        source.push(match self.boundary {
            BoundaryStencil::Midpoint => n * start.k0 + start.k0_s,
            BoundaryStencil::AsPrinted => 2.0 * n * start.k0,
        });
        for j in 2..self.n {
            source.push(self.forcing.sample((j as f64 - 0.5) / n, t).k0_s);
        }
        let (g, g_dot) = self.end_offset(t);
        Frame { source, g, g_dot }
    }

    /// `θ_N` from `θ_{N−1}` by the free-end condition, and `θ̇_N − θ̇_{N−1}`.
    pub fn eliminate_last_angle(&self, theta_prev: f64, t: f64) -> (f64, f64) {
        let (g, g_dot) = self.end_offset(t);
        (theta_prev + g, g_dot)
    }

    fn end_offset(&self, t: f64) -> (f64, f64) {
        let n = self.n as f64;
        let end = self.forcing.sample(1.0, t);
        let w = self.end_weight() * n * n;
        (end.k0 / n - end.k0_s / w, end.k0_t / n - end.k0_ts / w)
    }

    /// Replaces `θ_N` so that the state satisfies the free-end condition.
    pub fn constrain(&self, state: &mut FilamentState) -> Result<()> {
        self.check(state)?;
        let n = self.n;
        state.theta[n - 1] = self.eliminate_last_angle(state.theta[n - 2], state.time).0;
        Ok(())
    }

    fn check(&self, state: &FilamentState) -> Result<()> {
        if state.n_segments() != self.n {
            return Err(Error::InvalidInput(format!(
                "state has {} segments, model has {}",
                state.n_segments(),
                self.n
            )));
        }
        Ok(())
    }

    fn end_weight(&self) -> f64 {
        match self.boundary {
            BoundaryStencil::Midpoint => 1.0,
            BoundaryStencil::AsPrinted => 2.0,
        }
    }

    fn rhs_with(&self, theta: &[f64], frame: &Frame) -> Vec<f64> {
        let n2 = (self.n * self.n) as f64;
        let mut r = Vec::with_capacity(self.n - 1);
        r.push(-self.end_weight() * n2 * (theta[1] - theta[0]) + frame.source[0]);
        for j in 1..self.n - 1 {
            r.push(-n2 * (theta[j - 1] - 2.0 * theta[j] + theta[j + 1]) + frame.source[j]);
        }
        r
    }

    /// Right-hand sides of the normal-force rows for segments `1..N−1`.
    pub fn rhs(&self, state: &FilamentState) -> Result<Vec<f64>> {
        self.check(state)?;
        Ok(self.rhs_with(&state.theta, &self.frame(state.time)))
    }

    fn beta(&self) -> f64 {
        self.gamma / (1.0 + self.gamma)
    }

    fn drag(&self, t: Vec2, v: Vec2) -> Vec2 {
        let d = self.beta() * (t[0] * v[0] + t[1] * v[1]);
        [v[0] - d * t[0], v[1] - d * t[1]]
    }

    fn force_limit(&self) -> usize {
        match self.force_rows {
            ForceRows::AllSegments => self.n,
            ForceRows::FirstNMinusOne => self.n - 1,
        }
    }

    /// Dense assembly of the velocity system at `state.time`.
    pub fn assemble(&self, state: &FilamentState) -> Result<VelocitySystem> {
        self.check(state)?;
        let frame = self.frame(state.time);
        self.assemble_with(&state.theta, &frame)
    }

    fn assemble_with(&self, theta: &[f64], frame: &Frame) -> Result<VelocitySystem> {
        let n = self.n;
        let nf = n as f64;
        let c = self.midpoint.weight(n);
        let dim = n + 1;
        let frames: Vec<(Vec2, Vec2)> = theta.iter().map(|&th| (tangent(th), normal(th))).collect();
        let mut matrix = DenseMatrix::zeros(dim);
        let mut rhs = vec![0.0; dim];
        rhs[..n - 1].copy_from_slice(&self.rhs_with(theta, frame));
        // acc[col] = Σ_{i ≤ j} M_i ∂Ẋ_i/∂u_col
        let mut acc = vec![[0.0; 2]; dim];
        let mut constant = [0.0; 2];
        let limit = self.force_limit();
        for i in 1..=n {
            let (t_i, n_i) = frames[i - 1];
            let mut add = |col: usize, v: Vec2| {
                let m = self.drag(t_i, v);
                acc[col][0] += m[0];
                acc[col][1] += m[1];
            };
            add(0, [1.0, 0.0]);
            add(1, [0.0, 1.0]);
            for k in 1..i {
                let nk = frames[k - 1].1;
                add(k + 1, [nk[0] / nf, nk[1] / nf]);
            }
            // own-segment term; θ̇_N is θ̇_{N−1} + g'
            let own = if i < n { i } else { n - 1 };
            add(own + 1, [c * n_i[0], c * n_i[1]]);
            if i == n {
                constant[0] += c * n_i[0] * frame.g_dot;
                constant[1] += c * n_i[1] * frame.g_dot;
            }
            if i < n {
                for (col, a) in acc.iter().enumerate() {
                    matrix[(i - 1, col)] = (n_i[0] * a[0] + n_i[1] * a[1]) / nf;
                }
            }
            if i == limit {
                for (col, a) in acc.iter().enumerate() {
                    matrix[(n - 1, col)] = a[0] / nf;
                    matrix[(n, col)] = a[1] / nf;
                }
                rhs[n - 1] = -constant[0] / nf;
                rhs[n] = -constant[1] / nf;
            }
        }
        if !matrix.is_finite() || !rhs.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("velocity system assembly"));
        }
        Ok(VelocitySystem {
            matrix,
            rhs,
            g_dot: frame.g_dot,
        })
    }

    /// One pass along the filament for a given basepoint velocity. Returns the
    /// angular velocities and the total drag `Σ M_i Ẋ_i` over the force rows.
    fn sweep(&self, frames: &[(Vec2, Vec2)], r: &[f64], g_dot: f64, v0: Vec2) -> (Vec<f64>, Vec2) {
        let n = self.n;
        let nf = n as f64;
        let c = self.midpoint.weight(n);
        let mut theta_dot = Vec::with_capacity(n);
        let mut force = [0.0; 2];
        let mut turn = [0.0; 2];
        let mut limit_force = [0.0; 2];
        for j in 0..n {
            let (t_j, n_j) = frames[j];
            let base = [v0[0] + turn[0] / nf, v0[1] + turn[1] / nf];
            let td = if j + 1 < n {
                (nf * r[j] - n_j[0] * (force[0] + base[0]) - n_j[1] * (force[1] + base[1])) / c
            } else {
                theta_dot[n - 2] + g_dot
            };
            let xdot = [base[0] + c * n_j[0] * td, base[1] + c * n_j[1] * td];
            let m = self.drag(t_j, xdot);
            force[0] += m[0];
            force[1] += m[1];
            turn[0] += n_j[0] * td;
            turn[1] += n_j[1] * td;
            theta_dot.push(td);
            if j + 1 == self.force_limit() {
                limit_force = force;
            }
        }
        (theta_dot, limit_force)
    }

    fn solve_sweep(&self, theta: &[f64], frame: &Frame) -> Result<Velocities> {
        let frames: Vec<(Vec2, Vec2)> = theta.iter().map(|&th| (tangent(th), normal(th))).collect();
        let r = self.rhs_with(theta, frame);
        let zeros = vec![0.0; r.len()];
        let (_, fb) = self.sweep(&frames, &r, frame.g_dot, [0.0, 0.0]);
        let (_, fx) = self.sweep(&frames, &zeros, 0.0, [1.0, 0.0]);
        let (_, fy) = self.sweep(&frames, &zeros, 0.0, [0.0, 1.0]);
        let det = fx[0] * fy[1] - fy[0] * fx[1];
        let scale = fx[0].hypot(fx[1]) * fy[0].hypot(fy[1]);
        if !(det.abs() > 1e-12 * scale) {
            return Err(Error::SingularMatrix { column: self.n - 1 });
        }
        let v0 = [
            (-fb[0] * fy[1] + fy[0] * fb[1]) / det,
            (-fx[0] * fb[1] + fb[0] * fx[1]) / det,
        ];
        let (theta_dot, _) = self.sweep(&frames, &r, frame.g_dot, v0);
        if !(v0.iter().chain(&theta_dot).all(|v| v.is_finite())) {
            return Err(Error::NonFinite("velocity sweep"));
        }
        Ok(Velocities { v0, theta_dot })
    }

    fn velocities_with(&self, theta: &[f64], frame: &Frame) -> Result<Velocities> {
        if !theta.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("angles"));
        }
        match self.solver {
            LinearSolver::Sweep => self.solve_sweep(theta, frame),
            LinearSolver::Dense => self.assemble_with(theta, frame)?.solve(),
        }
    }

    /// Velocities of `state` at `state.time`; `θ_N` is taken as stored.
    pub fn velocities(&self, state: &FilamentState) -> Result<Velocities> {
        self.check(state)?;
        self.velocities_with(&state.theta, &self.frame(state.time))
    }

    /// `Ẋ_{i−1/2}` for `i = 1..N`.
    pub fn midpoint_velocities(&self, state: &FilamentState, vel: &Velocities) -> Vec<Vec2> {
        let nf = self.n as f64;
        let c = self.midpoint.weight(self.n);
        let mut turn = [0.0; 2];
        state
            .theta
            .iter()
            .zip(&vel.theta_dot)
            .map(|(&th, &td)| {
                let n_i = normal(th);
                let x = [
                    vel.v0[0] + turn[0] / nf + c * n_i[0] * td,
                    vel.v0[1] + turn[1] / nf + c * n_i[1] * td,
                ];
                turn[0] += n_i[0] * td;
                turn[1] += n_i[1] * td;
                x
            })
            .collect()
    }

    /// Power delivered to the fluid, `∫ (θ_ss − ∂_s κ0) θ̇ ds`, summed over the
    /// normal-force rows with the same boundary stencil as the solve.
    pub fn work_rate(&self, state: &FilamentState, vel: &Velocities) -> f64 {
        let r = self.rhs_with(&state.theta, &self.frame(state.time));
        let nf = self.n as f64;
        -r.iter()
            .zip(&vel.theta_dot)
            .map(|(q, td)| q * td)
            .sum::<f64>()
            / nf
    }

    /// `|Σ h_i| / N` and `|Σ (X_{i−1/2} − X_0) × h_i| / N` with `h_i = −M_i Ẋ_{i−1/2}`.
    pub fn force_torque_residuals(&self, state: &FilamentState, vel: &Velocities) -> (f64, f64) {
        let nf = self.n as f64;
        let xdot = self.midpoint_velocities(state, vel);
        let mids = state.midpoints();
        let mut f = [0.0; 2];
        let mut torque = 0.0;
        for ((&th, v), p) in state.theta.iter().zip(&xdot).zip(&mids) {
            let m = self.drag(tangent(th), *v);
            let h = [-m[0], -m[1]];
            f[0] += h[0];
            f[1] += h[1];
            torque += (p[0] - state.x0[0]) * h[1] - (p[1] - state.x0[1]) * h[0];
        }
        (f[0].hypot(f[1]) / nf, torque.abs() / nf)
    }

    pub fn diagnostics(&self, state: &FilamentState) -> Result<Diagnostics> {
        let vel = self.velocities(state)?;
        let (force_residual, torque_residual) = self.force_torque_residuals(state, &vel);
        Ok(Diagnostics {
            speed: instantaneous_speed(state, self.forcing, self.gamma),
            work_rate: self.work_rate(state, &vel),
            force_residual,
            torque_residual,
        })
    }
}

struct JacobianCache {
    lu: DenseLu,
    c: f64,
}

/// Implicit stepper on the reduced state `(x0, y0, θ_1..θ_{N−1})`.
pub struct AngleStepper<'a> {
    model: AngleModel<'a>,
    tol: f64,
    max_iter: usize,
    max_halvings: u32,
    scheme: TimeScheme,
    cache: Option<JacobianCache>,
    /// End time and reduced-state increment of the last accepted step.
    previous: Option<(f64, f64, Vec<f64>)>,
    stats: StepStats,
}

impl<'a> AngleStepper<'a> {
    pub fn new(forcing: &'a ForcingSpec, config: &SimConfig) -> Result<Self> {
        Ok(Self {
            model: AngleModel::new(forcing, config)?,
            tol: config.newton_tol.unwrap_or(DEFAULT_TOL),
            max_iter: config.max_newton_iters,
            max_halvings: config.max_halvings,
            scheme: config.scheme,
            cache: None,
            previous: None,
            stats: StepStats::default(),
        })
    }

    pub fn model(&self) -> &AngleModel<'a> {
        &self.model
    }

    pub fn stats(&self) -> StepStats {
        self.stats
    }

    fn reduce(state: &FilamentState) -> Vec<f64> {
        let n = state.n_segments();
        let mut q = Vec::with_capacity(n + 1);
        q.extend_from_slice(&state.x0);
        q.extend_from_slice(&state.theta[..n - 1]);
        q
    }

    fn expand(&self, q: &[f64], frame: &Frame) -> Vec<f64> {
        let mut theta = q[2..].to_vec();
        theta.push(theta[theta.len() - 1] + frame.g);
        theta
    }

    fn rate(&self, q: &[f64], frame: &Frame) -> Result<Vec<f64>> {
        let vel = self.model.velocities_with(&self.expand(q, frame), frame)?;
        let mut v = Vec::with_capacity(q.len());
        v.extend_from_slice(&vel.v0);
        v.extend_from_slice(&vel.theta_dot[..self.model.n - 1]);
        Ok(v)
    }

    /// `I − c ∂V/∂q` by forward differences. `V` ignores the basepoint, so
    /// only the angle columns are differenced.
    fn jacobian(&mut self, q: &[f64], v: &[f64], frame: &Frame, c: f64) -> Result<()> {
        let dim = q.len();
        let mut jac = DenseMatrix::identity(dim);
        let mut qp = q.to_vec();
        for col in 2..dim {
            let h = f64::EPSILON.sqrt() * q[col].abs().max(1.0);
            qp[col] = q[col] + h;
            let h = qp[col] - q[col];
            let vp = self.rate(&qp, frame)?;
            qp[col] = q[col];
            for row in 0..dim {
                jac[(row, col)] -= c * (vp[row] - v[row]) / h;
            }
        }
        self.cache = Some(JacobianCache {
            lu: DenseLu::factor(jac)?,
            c,
        });
        self.stats.jacobian_builds += 1;
        Ok(())
    }

    /// Advances `state` to `t1`, halving the interval on Newton failure.
    pub fn step_to(&mut self, state: &FilamentState, t1: f64) -> Result<FilamentState> {
        let out = self.advance(state, t1, 0)?;
        self.stats.steps += 1;
        Ok(out)
    }

    fn advance(&mut self, state: &FilamentState, t1: f64, depth: u32) -> Result<FilamentState> {
        match self.attempt(state, t1) {
            Err(Error::NewtonFailed { .. }) if depth < self.max_halvings => {
                self.stats.halvings += 1;
                let mid = 0.5 * (state.time + t1);
                let half = self.advance(state, mid, depth + 1)?;
                self.advance(&half, t1, depth + 1)
            }
            other => other,
        }
    }

    /// Smallest increment residual that rounding in the `N⁴`-stiff rate allows.
    fn rounding_floor(&self, q: &[f64], c: f64) -> f64 {
        let n4 = (self.model.n as f64).powi(4);
        let scale = q[2..].iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        50.0 * f64::EPSILON * c * n4 * scale
    }

    fn attempt(&mut self, state: &FilamentState, t1: f64) -> Result<FilamentState> {
        let dt = t1 - state.time;
        if !(dt > 0.0) {
            return Err(Error::InvalidInput(format!(
                "step to {t1} from {}",
                state.time
            )));
        }
        let q0 = Self::reduce(state);
        let frame = self.model.frame(t1);
        let (c, base) = match self.scheme {
            TimeScheme::BackwardEuler => (dt, q0.clone()),
            TimeScheme::Trapezoidal => {
                let c = 0.5 * dt;
                let v0 = self.rate(&q0, &self.model.frame(state.time))?;
                (c, q0.iter().zip(&v0).map(|(q, v)| q + c * v).collect())
            }
        };
        // linear extrapolation of the previous increment
        let mut q = match &self.previous {
            Some((t, prev_dt, inc)) if *t == state.time => {
                let w = dt / prev_dt;
                q0.iter().zip(inc).map(|(q, d)| q + w * d).collect()
            }
            _ => q0.clone(),
        };
        let tol = self.tol.max(self.rounding_floor(&q0, c));
        let mut last = f64::INFINITY;
        for pass in 0..2 {
            let stale = self
                .cache
                .as_ref()
                .is_none_or(|j| (j.c - c).abs() > 1e-6 * c)
                || pass == 1;
            let mut fresh = false;
            if stale {
                let v = self.rate(&q, &frame)?;
                self.jacobian(&q, &v, &frame, c)?;
                fresh = true;
            }
            let mut prev = f64::INFINITY;
            for _ in 0..self.max_iter {
                let v = self.rate(&q, &frame)?;
                let res: Vec<f64> = q
                    .iter()
                    .zip(&base)
                    .zip(&v)
                    .map(|((q, b), v)| q - b - c * v)
                    .collect();
                let r = norm_inf(&res);
                last = r;
                if !r.is_finite() {
                    break;
                }
                if r < tol {
                    let inc = q.iter().zip(&q0).map(|(a, b)| a - b).collect();
                    self.previous = Some((t1, dt, inc));
                    return FilamentState::new([q[0], q[1]], self.expand(&q, &frame), t1);
                }
                if !fresh && r > 0.5 * prev {
                    break;
                }
                prev = r;
                let delta = self
                    .cache
                    .as_ref()
                    .expect("jacobian present")
                    .lu
                    .solve(&res);
                for (qi, d) in q.iter_mut().zip(&delta) {
                    *qi -= d;
                }
                self.stats.newton_iterations += 1;
            }
            if fresh && pass == 1 {
                break;
            }
            if !q.iter().all(|v| v.is_finite()) {
                q = q0.clone();
            }
        }
        Err(Error::NewtonFailed {
            time: t1,
            reason: format!("residual {last:e} above tolerance {tol:e}"),
        })
    }
}

/// Runs the angle scheme from `initial` to `config.t_end`. The initial `θ_N`
/// is replaced by its constrained value.
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
    let mut stepper = AngleStepper::new(forcing, config)?;
    let mut state = initial.clone();
    stepper.model.constrain(&mut state)?;
    let mut traj = Trajectory::new(Method::A, config.n_segments);
    let diag = stepper.model.diagnostics(&state)?;
    traj.push(Record {
        state: state.clone(),
        diag,
    })?;
    let (steps, at) = config.schedule(state.time);
    for k in 1..=steps {
        state = stepper.step_to(&state, at(k))?;
        if config.is_recorded(k, steps) {
            let diag = stepper.model.diagnostics(&state)?;
            traj.push(Record {
                state: state.clone(),
                diag,
            })?;
        }
    }
    Ok((traj, stepper.stats()))
}
