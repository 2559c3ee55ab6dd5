//! Small-amplitude theory: linear response, time-averaged speed and work as
//! quadratic forms in the modal coefficients, and the speed integral evaluated
//! on simulated shapes.

use nalgebra::{DMatrix, DVector};

use crate::coeffs::ModalCoeffs;
use crate::eigen::EigenBasis;
use crate::error::{Error, Result};
use crate::forcing::ForcingSpec;
use crate::quadrature::trapezoid;
use crate::state::FilamentState;
use crate::trajectory::Trajectory;

/// Linear-response coefficients of one `(m, k)` pair.
pub fn response_pair(a: f64, b: f64, omega: f64, m: u32, lambda: f64) -> Result<(f64, f64)> {
    if m == 0 {
        return Err(Error::InvalidInput(
            "temporal mode m must be at least 1".into(),
        ));
    }
    let wm = omega * m as f64;
    let w = wm * wm / (wm * wm + lambda * lambda);
    let r = lambda / wm;
    Ok((w * (r * b - a), w * (-r * a - b)))
}

/// `(c_{m,k}, d_{m,k})` for every coefficient pair.
pub fn response_coeffs(
    coeffs: &ModalCoeffs,
    omega: f64,
    basis: &EigenBasis,
) -> Result<(ModalCoeffs, ModalCoeffs)> {
    check_dims(coeffs, basis)?;
    let mut c = ModalCoeffs::zeros(coeffs.m_max(), coeffs.k_max());
    let mut d = c.clone();
    for m in 1..=coeffs.m_max() {
        for k in 1..=coeffs.k_max() {
            let (ck, dk) = response_pair(
                coeffs.a(m, k),
                coeffs.b(m, k),
                omega,
                m as u32,
                basis.lambda()[k - 1],
            )?;
            c.set(m, k, ck, 0.0);
            d.set(m, k, dk, 0.0);
        }
    }
    Ok((c, d))
}

fn check_dims(coeffs: &ModalCoeffs, basis: &EigenBasis) -> Result<()> {
    if coeffs.k_max() > basis.k_max() {
        return Err(Error::ModeOutOfRange {
            k: coeffs.k_max(),
            available: basis.k_max(),
        });
    }
    Ok(())
}

/// `w_{m,k} = ω²m²/(ω²m² + λ_k²)`.
fn weight(omega: f64, m: usize, lambda: f64) -> f64 {
    let wm = omega * m as f64;
    wm * wm / (wm * wm + lambda * lambda)
}

/// Time-averaged swimming speed to leading order in the forcing amplitude.
pub fn avg_speed(coeffs: &ModalCoeffs, omega: f64, gamma: f64, basis: &EigenBasis) -> Result<f64> {
    check_dims(coeffs, basis)?;
    let s = basis.coupling();
    let lam = basis.lambda();
    let mut total = 0.0;
    for m in 1..=coeffs.m_max() {
        let wm = omega * m as f64;
        for k in 1..=coeffs.k_max() {
            let w = weight(omega, m, lam[k - 1]);
            let r = lam[k - 1] / wm;
            let (ak, bk) = (coeffs.a(m, k), coeffs.b(m, k));
            for l in 1..=coeffs.k_max() {
                let (al, bl) = (coeffs.a(m, l), coeffs.b(m, l));
                total += w * (r * (ak * bl - bk * al) + ak * al + bk * bl) * s[(k - 1, l - 1)];
            }
        }
    }
    Ok(0.5 * gamma * total)
}

/// Same quantity as [`avg_speed`], assembled from the response coefficients
/// as `−(γ/2) Σ (a_l c_k + b_l d_k) S_kl`.
pub fn avg_speed_from_response(
    coeffs: &ModalCoeffs,
    omega: f64,
    gamma: f64,
    basis: &EigenBasis,
) -> Result<f64> {
    let (c, d) = response_coeffs(coeffs, omega, basis)?;
    let s = basis.coupling();
    let mut total = 0.0;
    for m in 1..=coeffs.m_max() {
        for k in 1..=coeffs.k_max() {
            for l in 1..=coeffs.k_max() {
                total +=
                    (coeffs.a(m, l) * c.a(m, k) + coeffs.b(m, l) * d.a(m, k)) * s[(k - 1, l - 1)];
            }
        }
    }
    Ok(-0.5 * gamma * total)
}

/// Average work `Σ (λ_k/2) w_{m,k} (a² + b²)`.
pub fn avg_work(coeffs: &ModalCoeffs, omega: f64, basis: &EigenBasis) -> Result<f64> {
    check_dims(coeffs, basis)?;
    let forms = QuadraticForms::new(coeffs.m_max(), coeffs.k_max(), omega, 1.0, basis)?;
    Ok(forms.work(&DVector::from_vec(coeffs.to_flat())))
}

/// Speed and work as quadratic forms over the flattened `[a…, b…]` vector.
#[derive(Debug, Clone)]
pub struct QuadraticForms {
    pub m_max: usize,
    pub k_max: usize,
    /// Symmetric matrix with `⟨U⟩ = xᵀ U x`.
    pub u: DMatrix<f64>,
    /// Diagonal of the work form, `W = Σ w_i x_i²`.
    pub w: DVector<f64>,
}

impl QuadraticForms {
    pub fn new(
        m_max: usize,
        k_max: usize,
        omega: f64,
        gamma: f64,
        basis: &EigenBasis,
    ) -> Result<Self> {
        if k_max > basis.k_max() {
            return Err(Error::ModeOutOfRange {
                k: k_max,
                available: basis.k_max(),
            });
        }
        let n = m_max * k_max;
        let s = basis.coupling();
        let lam = basis.lambda();
        let mut u = DMatrix::zeros(2 * n, 2 * n);
        let mut w = DVector::zeros(2 * n);
        for m in 1..=m_max {
            let wm = omega * m as f64;
            let base = (m - 1) * k_max;
            for p in 0..k_max {
                let wp = weight(omega, m, lam[p]);
                w[base + p] = 0.5 * lam[p] * wp;
                w[n + base + p] = 0.5 * lam[p] * wp;
                for q in 0..k_max {
                    let wq = weight(omega, m, lam[q]);
                    let diag = 0.25 * gamma * (wp * s[(p, q)] + wq * s[(q, p)]);
                    u[(base + p, base + q)] = diag;
                    u[(n + base + p, n + base + q)] = diag;
                    let cross = 0.25
                        * gamma
                        * (wp * lam[p] / wm * s[(p, q)] - wq * lam[q] / wm * s[(q, p)]);
                    u[(base + p, n + base + q)] = cross;
                    u[(n + base + q, base + p)] = cross;
                }
            }
        }
        Ok(Self { m_max, k_max, u, w })
    }

    pub fn speed(&self, x: &DVector<f64>) -> f64 {
        x.dot(&(&self.u * x))
    }

    pub fn work(&self, x: &DVector<f64>) -> f64 {
        x.iter().zip(self.w.iter()).map(|(v, w)| w * v * v).sum()
    }
}

/// Modal projection of a forcing, with the L² mass the truncation discards.
#[derive(Debug, Clone)]
pub struct Projection {
    pub coeffs: ModalCoeffs,
    /// Per temporal mode: `(‖A_m‖² − Σ a², ‖B_m‖² − Σ b²)`.
    pub tail: Vec<(f64, f64)>,
}

/// Projects every temporal profile of `spec` onto the first `k_max` modes.
pub fn project(spec: &ForcingSpec, k_max: usize, basis: &EigenBasis) -> Result<Projection> {
    if k_max > basis.k_max() {
        return Err(Error::ModeOutOfRange {
            k: k_max,
            available: basis.k_max(),
        });
    }
    let m_max = spec.modes().iter().map(|m| m.m as usize).max().unwrap_or(0);
    let mut coeffs = ModalCoeffs::zeros(m_max.max(1), k_max);
    let mut tail = vec![(0.0, 0.0); m_max.max(1)];
    for mode in spec.modes() {
        let fa: Vec<f64> = basis.grid().iter().map(|&s| mode.a.eval(s).0).collect();
        let fb: Vec<f64> = basis.grid().iter().map(|&s| mode.b.eval(s).0).collect();
        let m = mode.m as usize;
        let mut ta = basis.inner(&fa, &fa);
        let mut tb = basis.inner(&fb, &fb);
        for k in 1..=k_max {
            let (pa, pb) = (basis.project(&fa, k), basis.project(&fb, k));
            coeffs.set(m, k, coeffs.a(m, k) + pa, coeffs.b(m, k) + pb);
            ta -= pa * pa;
            tb -= pb * pb;
        }
        tail[m - 1].0 += ta;
        tail[m - 1].1 += tb;
    }
    Ok(Projection { coeffs, tail })
}

/// `(κ0)_s (κ − κ0)` at the interior nodes.
pub fn swim_integrand(state: &FilamentState, f: &ForcingSpec) -> Vec<f64> {
    let n = state.n_segments();
    state
        .recover_curvature()
        .iter()
        .enumerate()
        .map(|(i, k)| {
            let q = f.sample((i + 1) as f64 / n as f64, state.time);
            q.k0_s * (k - q.k0)
        })
        .collect()
}

/// `U(t) = −γ ∫ (κ0)_s (κ − κ0) ds` by the trapezoid rule on interior nodes.
///
/// The curvature deviation vanishes at both ends, so the endpoint terms drop out.
pub fn instantaneous_speed(state: &FilamentState, f: &ForcingSpec, gamma: f64) -> f64 {
    let n = state.n_segments() as f64;
    -gamma * swim_integrand(state, f).iter().sum::<f64>() / n
}

/// Time integral of the stored speeds over `[t_start, t_end]`.
pub fn predicted_displacement(traj: &Trajectory, t_start: f64, t_end: f64) -> Result<f64> {
    let (x, y) = window(traj, t_start, t_end, |r| r.diag.speed)?;
    Ok(trapezoid(&x, &y))
}

/// `x0(t_end) − x0(t_start)` from the nearest stored records.
pub fn observed_displacement(traj: &Trajectory, t_start: f64, t_end: f64) -> Result<f64> {
    let (_, y) = window(traj, t_start, t_end, |r| r.state.x0[0])?;
    Ok(y[y.len() - 1] - y[0])
}

/// Samples of `value` over the records inside `[t_start, t_end]`, which must
/// be covered by the trajectory to within a relative slack of 1e-9.
pub fn window<F: Fn(&crate::trajectory::Record) -> f64>(
    traj: &Trajectory,
    t_start: f64,
    t_end: f64,
    value: F,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let recs = traj.records();
    let err = || Error::WindowOutOfRange {
        start: t_start,
        end: t_end,
        first: recs.first().map_or(f64::NAN, |r| r.time()),
        last: recs.last().map_or(f64::NAN, |r| r.time()),
    };
    if recs.is_empty() || !(t_end >= t_start) {
        return Err(err());
    }
    let slack = 1e-9 * (1.0 + t_end.abs());
    if recs[0].time() > t_start + slack || recs[recs.len() - 1].time() < t_end - slack {
        return Err(err());
    }
    let (x, y): (Vec<f64>, Vec<f64>) = recs
        .iter()
        .filter(|r| r.time() >= t_start - slack && r.time() <= t_end + slack)
        .map(|r| (r.time(), value(r)))
        .unzip();
    if x.is_empty() {
        return Err(err());
    }
    Ok((x, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;
    use std::sync::OnceLock;

    fn basis() -> &'static EigenBasis {
        static B: OnceLock<EigenBasis> = OnceLock::new();
        B.get_or_init(|| EigenBasis::new(12).unwrap())
    }

    const OMEGA: f64 = 2.0 * PI;

    #[test]
    fn response_oracle_mode_one() {
        // values from an independent 30-digit evaluation
        let lam = basis().lambda()[0];
        assert!((lam - 500.563901740432596).abs() < 1e-9);
        let (c, d) = response_pair(1.0, 0.0, OMEGA, 1, lam).unwrap();
        assert!((c - -0.000157533260270553251).abs() < 1e-15);
        assert!((d - -0.0125502367922865018).abs() < 1e-14);
        assert!(response_pair(1.0, 0.0, OMEGA, 0, lam).is_err());
    }

    #[test]
    fn response_high_frequency_limit() {
        let (c, d) = response_pair(0.7, -0.3, 1e12, 1, 500.0).unwrap();
        assert!((c + 0.7).abs() < 1e-9 && (d - 0.3).abs() < 1e-9);
        assert_eq!(
            response_pair(0.0, 0.0, OMEGA, 2, 500.0).unwrap(),
            (0.0, 0.0)
        );
    }

    #[test]
    fn work_oracle_mode_one() {
        let mut c = ModalCoeffs::zeros(1, 12);
        c.set(1, 1, 1.0, 0.0);
        let w = avg_work(&c, OMEGA, basis()).unwrap();
        assert!((w - 0.0394277317074596058).abs() < 1e-13, "{w}");
        assert_eq!(
            avg_work(&ModalCoeffs::zeros(2, 12), OMEGA, basis()).unwrap(),
            0.0
        );
    }

    #[test]
    fn single_mode_cannot_swim() {
        for k in 1..=12 {
            let mut c = ModalCoeffs::zeros(1, 12);
            c.set(1, k, 1.3, -0.4);
            assert_eq!(avg_speed(&c, OMEGA, 1.0, basis()).unwrap(), 0.0);
        }
    }

    #[test]
    fn one_parity_coefficients_give_no_speed() {
        let mut c = ModalCoeffs::zeros(2, 12);
        for k in (1..=12).step_by(2) {
            c.set(1, k, (k as f64).sin(), (k as f64).cos());
            c.set(2, k, 0.3 * k as f64, -0.1);
        }
        let u = avg_speed(&c, OMEGA, 1.0, basis()).unwrap();
        assert!(u.abs() < 1e-8, "{u}");
    }

    #[test]
    fn rejects_too_many_modes() {
        let small = EigenBasis::with_points(3, 101).unwrap();
        let c = ModalCoeffs::zeros(1, 4);
        assert!(avg_speed(&c, OMEGA, 1.0, &small).is_err());
        assert!(avg_work(&c, OMEGA, &small).is_err());
    }

    #[test]
    fn projection_of_a_mode_is_exact() {
        let spec = ForcingSpec::modal(OMEGA, std::sync::Arc::new(basis().clone()), &{
            let mut c = ModalCoeffs::zeros(1, 12);
            c.set(1, 2, 0.5, -0.25);
            c
        })
        .unwrap();
        let p = project(&spec, 12, basis()).unwrap();
        assert!((p.coeffs.a(1, 2) - 0.5).abs() < 1e-10);
        assert!((p.coeffs.b(1, 2) + 0.25).abs() < 1e-10);
        assert!(p.tail[0].0.abs() < 1e-10 && p.tail[0].1.abs() < 1e-10);
    }

    #[test]
    fn perfect_tracking_and_zero_forcing_give_zero_speed() {
        let f = crate::forcing::library_case("case6").unwrap();
        let n = 64;
        let t = 0.3;
        let mut theta = vec![0.0];
        for i in 1..n {
            let last = *theta.last().unwrap();
            theta.push(last + f.kappa0(i as f64 / n as f64, t) / n as f64);
        }
        let st = FilamentState::new([0.0, 0.0], theta, t).unwrap();
        assert!(instantaneous_speed(&st, &f, 1.0).abs() < 1e-12);
        assert_eq!(instantaneous_speed(&st, &ForcingSpec::zero(), 1.0), 0.0);
    }
}
