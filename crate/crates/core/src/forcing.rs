//! Preferred-curvature forcing `κ0(s,t) = Σ_m A_m(s) cos(ωmt) − B_m(s) sin(ωmt)`.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::coeffs::ModalCoeffs;
use crate::eigen::EigenBasis;
use crate::error::{Error, Result};
use crate::quadrature;

/// Number of Simpson samples used to normalize library profiles.
pub const NORMALIZATION_POINTS: usize = 2001;

/// Spatial profile with an analytic derivative.
#[derive(Debug, Clone)]
pub enum Profile {
    Zero,
    /// `sin(aπs + φ)`
    Sin {
        a: f64,
        phase: f64,
    },
    /// `cos(aπs + φ)`
    Cos {
        a: f64,
        phase: f64,
    },
    /// `Σ c_j s^j`
    Poly(Vec<f64>),
    /// `Σ c_k ψ_k(s)`
    Modes {
        basis: Arc<EigenBasis>,
        coeffs: Vec<f64>,
    },
    Scaled(f64, Box<Profile>),
    Sum(Vec<Profile>),
}

impl Profile {
    pub fn sin(a: f64) -> Self {
        Profile::Sin { a, phase: 0.0 }
    }

    pub fn cos(a: f64) -> Self {
        Profile::Cos { a, phase: 0.0 }
    }

    pub fn scaled(self, c: f64) -> Self {
        Profile::Scaled(c, Box::new(self))
    }

    pub fn plus(self, other: Profile) -> Self {
        match self {
            Profile::Sum(mut v) => {
                v.push(other);
                Profile::Sum(v)
            }
            p => Profile::Sum(vec![p, other]),
        }
    }

    pub fn modes(basis: Arc<EigenBasis>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() > basis.k_max() {
            return Err(Error::ModeOutOfRange {
                k: coeffs.len(),
                available: basis.k_max(),
            });
        }
        Ok(Profile::Modes { basis, coeffs })
    }

    /// Value and first derivative at `s`.
    pub fn eval(&self, s: f64) -> (f64, f64) {
        match self {
            Profile::Zero => (0.0, 0.0),
            Profile::Sin { a, phase } => {
                let (sn, cs) = (a * PI * s + phase).sin_cos();
                (sn, a * PI * cs)
            }
            Profile::Cos { a, phase } => {
                let (sn, cs) = (a * PI * s + phase).sin_cos();
                (cs, -a * PI * sn)
            }
            Profile::Poly(c) => {
                let mut v = 0.0;
                let mut d = 0.0;
                for (j, cj) in c.iter().enumerate().rev() {
                    v = v * s + cj;
                    if j > 0 {
                        d = d * s + j as f64 * cj;
                    }
                }
                (v, d)
            }
            Profile::Modes { basis, coeffs } => {
                let mut v = 0.0;
                let mut d = 0.0;
                for (k, c) in coeffs.iter().enumerate() {
                    if *c != 0.0 {
                        let (p, dp) = basis
                            .eval(k + 1, s)
                            .expect("mode count checked at construction");
                        v += c * p;
                        d += c * dp;
                    }
                }
                (v, d)
            }
            Profile::Scaled(c, p) => {
                let (v, d) = p.eval(s);
                (c * v, c * d)
            }
            Profile::Sum(ps) => ps.iter().fold((0.0, 0.0), |(v, d), p| {
                let (a, b) = p.eval(s);
                (v + a, d + b)
            }),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Profile::Zero => true,
            Profile::Scaled(c, p) => *c == 0.0 || p.is_zero(),
            Profile::Sum(ps) => ps.iter().all(Profile::is_zero),
            Profile::Poly(c) => c.iter().all(|x| *x == 0.0),
            Profile::Modes { coeffs, .. } => coeffs.iter().all(|x| *x == 0.0),
            _ => false,
        }
    }

    /// L² norm over [0, 1] by composite Simpson on `points` samples.
    pub fn l2_norm(&self, points: usize) -> Result<f64> {
        Ok(quadrature::integrate(|s| self.eval(s).0.powi(2), points)?.sqrt())
    }

    /// Rescales to unit L² norm; zero profiles are returned unchanged.
    pub fn normalized(self) -> Result<Self> {
        if self.is_zero() {
            return Ok(self);
        }
        let n = self.l2_norm(NORMALIZATION_POINTS)?;
        Ok(self.scaled(1.0 / n))
    }
}

/// One temporal harmonic `A(s) cos(ωmt) − B(s) sin(ωmt)`.
#[derive(Debug, Clone)]
pub struct TemporalMode {
    pub m: u32,
    pub a: Profile,
    pub b: Profile,
}

/// `κ0`, `∂_s κ0`, `∂_t κ0` and `∂_t ∂_s κ0` at one point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ForcingSample {
    pub k0: f64,
    pub k0_s: f64,
    pub k0_t: f64,
    pub k0_ts: f64,
}

#[derive(Debug, Clone)]
pub struct ForcingSpec {
    omega: f64,
    modes: Vec<TemporalMode>,
}

impl ForcingSpec {
    pub fn new(omega: f64, modes: Vec<TemporalMode>) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::InvalidInput(format!(
                "omega must be positive, got {omega}"
            )));
        }
        if let Some(m) = modes.iter().find(|m| m.m == 0) {
            return Err(Error::InvalidInput(format!(
                "temporal mode index must be at least 1, got {}",
                m.m
            )));
        }
        Ok(Self { omega, modes })
    }

    pub fn zero() -> Self {
        Self {
            omega: 2.0 * PI,
            modes: Vec::new(),
        }
    }

    /// `F1(s) cos(ωt) + F2(s) sin(ωt)`.
    pub fn single(omega: f64, f1: Profile, f2: Profile) -> Result<Self> {
        Self::new(
            omega,
            vec![TemporalMode {
                m: 1,
                a: f1,
                b: f2.scaled(-1.0),
            }],
        )
    }

    /// Modal forcing `A_m = Σ a_{m,k} ψ_k`, `B_m = Σ b_{m,k} ψ_k`.
    pub fn modal(omega: f64, basis: Arc<EigenBasis>, coeffs: &ModalCoeffs) -> Result<Self> {
        if coeffs.k_max() > basis.k_max() {
            return Err(Error::ModeOutOfRange {
                k: coeffs.k_max(),
                available: basis.k_max(),
            });
        }
        let modes = (1..=coeffs.m_max())
            .map(|m| {
                Ok(TemporalMode {
                    m: m as u32,
                    a: Profile::modes(basis.clone(), coeffs.a_row(m).to_vec())?,
                    b: Profile::modes(basis.clone(), coeffs.b_row(m).to_vec())?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(omega, modes)
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Same profiles at a different base frequency.
    pub fn with_omega(self, omega: f64) -> Result<Self> {
        Self::new(omega, self.modes)
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega
    }

    pub fn modes(&self) -> &[TemporalMode] {
        &self.modes
    }

    pub fn is_zero(&self) -> bool {
        self.modes.iter().all(|m| m.a.is_zero() && m.b.is_zero())
    }

    /// Multiplies every profile by `eps`.
    pub fn scaled(&self, eps: f64) -> Self {
        Self {
            omega: self.omega,
            modes: self
                .modes
                .iter()
                .map(|m| TemporalMode {
                    m: m.m,
                    a: m.a.clone().scaled(eps),
                    b: m.b.clone().scaled(eps),
                })
                .collect(),
        }
    }

    pub fn sample(&self, s: f64, t: f64) -> ForcingSample {
        let mut out = ForcingSample::default();
        for mode in &self.modes {
            let w = self.omega * mode.m as f64;
            let (sn, cs) = (w * t).sin_cos();
            let (a, a_s) = mode.a.eval(s);
            let (b, b_s) = mode.b.eval(s);
            out.k0 += a * cs - b * sn;
            out.k0_s += a_s * cs - b_s * sn;
            out.k0_t += -w * (a * sn + b * cs);
            out.k0_ts += -w * (a_s * sn + b_s * cs);
        }
        out
    }

    pub fn kappa0(&self, s: f64, t: f64) -> f64 {
        self.sample(s, t).k0
    }

    /// Evaluates all four fields on `s_grid`.
    pub fn eval(&self, s_grid: &[f64], t: f64) -> Result<Vec<ForcingSample>> {
        s_grid
            .iter()
            .map(|&s| {
                if (0.0..=1.0).contains(&s) {
                    Ok(self.sample(s, t))
                } else {
                    Err(Error::InvalidInput(format!("arclength {s} outside [0, 1]")))
                }
            })
            .collect()
    }
}

/// Identifiers of the built-in waveforms.
pub const LIBRARY_CASES: [&str; 7] = [
    "case1", "case2", "case3", "case4", "case5", "case6", "case7",
];

/// Which library profiles are scaled to unit L² norm.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    #[default]
    Both,
    /// `F2` only, `F1` kept as written. The tabulated displacements for the
    /// good swimmers are reproduced with this choice.
    SecondOnly,
}

/// Closed-form library cases `case1`..`case7`, both profiles L²-normalized.
///
/// `case8` and `case9` are optimizer outputs and are loaded from coefficient
/// files instead; see [`ForcingSpec::modal`].
pub fn library_case(id: &str) -> Result<ForcingSpec> {
    library_case_with(id, Normalization::Both)
}

pub fn library_case_with(id: &str, norm: Normalization) -> Result<ForcingSpec> {
    let two = 2.0;
    let four = 4.0;
    let trig = || Profile::cos(two).plus(Profile::sin(two));
    let (f1, f2) = match id {
        "case1" => (Profile::cos(four), Profile::cos(two)),
        "case2" => (Profile::sin(four), Profile::sin(two)),
        "case3" => (trig(), trig()),
        "case4" => (Profile::Zero, trig()),
        "case5" => (trig(), trig().scaled(-1.0)),
        "case6" => (Profile::cos(two), Profile::sin(two)),
        "case7" => (
            Profile::Poly(vec![0.0, 0.0, 1.0]),
            Profile::Poly(vec![1.0, -2.0, 1.0]),
        ),
        "case8" | "case9" => {
            return Err(Error::InvalidInput(format!(
                "{id} is defined by optimized coefficients; load it from a coefficient file"
            )))
        }
        other => return Err(Error::InvalidInput(format!("unknown case id {other:?}"))),
    };
    let f1 = match norm {
        Normalization::Both => f1.normalized()?,
        Normalization::SecondOnly => f1,
    };
    ForcingSpec::single(2.0 * PI, f1, f2.normalized()?)
}

/// `κ0 = sin(2π(s − t))`, the travelling wave used to compare the two schemes.
pub fn traveling_wave() -> ForcingSpec {
    // sin(2πs − 2πt) = sin(2πs) cos(2πt) − cos(2πs) sin(2πt)
    ForcingSpec::new(
        2.0 * PI,
        vec![TemporalMode {
            m: 1,
            a: Profile::sin(2.0),
            b: Profile::cos(2.0),
        }],
    )
    .expect("constant spec is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn case1_midpoint_at_t0_before_normalization() {
        let raw = ForcingSpec::single(2.0 * PI, Profile::cos(4.0), Profile::cos(2.0)).unwrap();
        assert!((raw.kappa0(0.5, 0.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_spec_vanishes() {
        let z = ForcingSpec::zero();
        assert_eq!(z.sample(0.3, 1.7), ForcingSample::default());
        assert!(z.is_zero());
        let scaled0 = library_case("case6").unwrap().scaled(0.0);
        assert!(scaled0.is_zero());
    }

    #[test]
    fn case6_normalization_is_sqrt_two() {
        let spec = library_case("case6").unwrap();
        // at t = 0 only F1 contributes
        let v = spec.kappa0(0.0, 0.0);
        assert!((v - 2f64.sqrt()).abs() < 1e-12, "{v}");
        // oracle: 10,001-point Simpson of cos² gives 1/2
        let half = quadrature::integrate(|s| (2.0 * PI * s).cos().powi(2), 10_001).unwrap();
        assert!((half - 0.5).abs() < 1e-14);
        assert!((v - (1.0 / half).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn second_only_keeps_f1_raw() {
        let spec = library_case_with("case6", Normalization::SecondOnly).unwrap();
        assert!((spec.kappa0(0.0, 0.0) - 1.0).abs() < 1e-15);
        // t = 1/4: κ0 = F2(s)
        let v = spec.kappa0(0.25, 0.25);
        assert!((v - 2f64.sqrt()).abs() < 1e-12, "{v}");
    }

    #[test]
    fn library_profiles_have_unit_norm() {
        for id in LIBRARY_CASES {
            let spec = library_case(id).unwrap();
            for m in spec.modes() {
                for p in [&m.a, &m.b] {
                    if !p.is_zero() {
                        assert!((p.l2_norm(4001).unwrap() - 1.0).abs() < 1e-10, "{id}");
                    }
                }
            }
        }
    }

    #[test]
    fn sign_convention_maps_f2_to_minus_b() {
        let spec = library_case("case6").unwrap();
        // quarter period: cos = 0, sin = 1, so κ0 = F2
        let t = 0.25;
        for s in [0.1, 0.3, 0.8] {
            let f2 = 2f64.sqrt() * (2.0 * PI * s).sin();
            assert!((spec.kappa0(s, t) - f2).abs() < 1e-12);
        }
    }

    #[test]
    fn unknown_and_coefficient_cases_are_rejected() {
        assert!(library_case("case10").is_err());
        assert!(library_case("case8").is_err());
    }

    #[test]
    fn traveling_wave_matches_closed_form() {
        let f = traveling_wave();
        for (s, t) in [(0.1, 0.0), (0.4, 0.13), (0.9, 0.77)] {
            let x = 2.0 * PI * (s - t);
            let q = f.sample(s, t);
            assert!((q.k0 - x.sin()).abs() < 1e-14);
            assert!((q.k0_s - 2.0 * PI * x.cos()).abs() < 1e-13);
            assert!((q.k0_t + 2.0 * PI * x.cos()).abs() < 1e-13);
            assert!((q.k0_ts - 4.0 * PI * PI * x.sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_points_outside_unit_interval() {
        assert!(library_case("case1")
            .unwrap()
            .eval(&[0.5, 1.5], 0.0)
            .is_err());
    }

    #[test]
    fn modal_profile_rejects_oversized_coefficients() {
        let basis = Arc::new(EigenBasis::with_points(2, 11).unwrap());
        assert!(Profile::modes(basis, vec![1.0, 0.0, 0.0]).is_err());
    }

    proptest! {
        #[test]
        fn periodic_in_time(s in 0.0f64..1.0, t in -3.0f64..3.0, id in 0usize..7) {
            let spec = library_case(LIBRARY_CASES[id]).unwrap();
            let a = spec.sample(s, t);
            let b = spec.sample(s, t + spec.period());
            prop_assert!((a.k0 - b.k0).abs() < 1e-12);
            prop_assert!((a.k0_s - b.k0_s).abs() < 1e-11);
        }

        #[test]
        fn parity_of_cases_one_and_two(s in 0.0f64..1.0, t in 0.0f64..1.0) {
            let c1 = library_case("case1").unwrap();
            let c2 = library_case("case2").unwrap();
            prop_assert!((c1.kappa0(1.0 - s, t) - c1.kappa0(s, t)).abs() < 1e-12);
            prop_assert!((c2.kappa0(1.0 - s, t) + c2.kappa0(s, t)).abs() < 1e-12);
        }

        #[test]
        fn derivatives_match_finite_differences(s in 0.05f64..0.95, t in 0.0f64..1.0, id in 0usize..7) {
            let spec = library_case(LIBRARY_CASES[id]).unwrap();
            let h = 1e-6;
            let q = spec.sample(s, t);
            let ds = (spec.kappa0(s + h, t) - spec.kappa0(s - h, t)) / (2.0 * h);
            let dt = (spec.kappa0(s, t + h) - spec.kappa0(s, t - h)) / (2.0 * h);
            let dts = (spec.sample(s, t + h).k0_s - spec.sample(s, t - h).k0_s) / (2.0 * h);
            prop_assert!((q.k0_s - ds).abs() < 1e-6 * (1.0 + ds.abs()));
            prop_assert!((q.k0_t - dt).abs() < 1e-6 * (1.0 + dt.abs()));
            prop_assert!((q.k0_ts - dts).abs() < 1e-5 * (1.0 + dts.abs()));
        }
    }
}
