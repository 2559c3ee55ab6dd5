//! Forcing for every catalog case, including the two optimized swimmers.

use std::sync::Arc;

use filament_core::coeffs::ModalCoeffs;
use filament_core::eigen::EigenBasis;
use filament_core::forcing::{library_case_with, ForcingSpec, Normalization};
use filament_core::optimizer::{solve_work_bending_constrained, symmetric_distance, OptProblem};

use crate::error::{Error, Result};

/// Spatial modes used by the optimized swimmers.
pub const SWIMMER_K_MAX: usize = 12;
/// Minimum symmetric distance between the two optimized swimmers.
pub const DISTINCT_OPTIMUM: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct Swimmers {
    pub basis: Arc<EigenBasis>,
    pub case8: ModalCoeffs,
    pub case9: ModalCoeffs,
    pub speed8: f64,
    pub speed9: f64,
    /// Case 9 is the quarter-period image of case 8 because no restart
    /// found a second optimum.
    pub case9_is_image: bool,
}

/// Best unit-norm swimmer (`case8`) and the best restart that is not a
/// symmetry image of it (`case9`).
pub fn optimal_swimmers(restarts: usize, seed: u64) -> Result<Swimmers> {
    let basis = Arc::new(EigenBasis::new(SWIMMER_K_MAX)?);
    let mut p = OptProblem::new(1, SWIMMER_K_MAX);
    p.work_target = None;
    p.restarts = restarts;
    p.seed = seed;
    let best = solve_work_bending_constrained(&p, &basis)?;
    let x8 = best.coeffs.to_flat();
    let second = best
        .restarts
        .iter()
        .filter(|r| r.converged && symmetric_distance(&x8, &r.x) > DISTINCT_OPTIMUM)
        .min_by(|a, b| a.speed.total_cmp(&b.speed));
    let (case9, speed9, case9_is_image) = match second {
        Some(r) => (
            ModalCoeffs::from_flat(1, SWIMMER_K_MAX, &r.x),
            r.speed,
            false,
        ),
        None => {
            let mut c = ModalCoeffs::zeros(1, SWIMMER_K_MAX);
            for k in 1..=SWIMMER_K_MAX {
                c.set(1, k, -best.coeffs.b(1, k), best.coeffs.a(1, k));
            }
            (c, best.speed, true)
        }
    };
    Ok(Swimmers {
        basis,
        case8: best.coeffs,
        case9,
        speed8: best.speed,
        speed9,
        case9_is_image,
    })
}

impl Swimmers {
    pub fn coeffs(&self, id: &str) -> Option<&ModalCoeffs> {
        match id {
            "case8" => Some(&self.case8),
            "case9" => Some(&self.case9),
            _ => None,
        }
    }
}

/// `case1`..`case7` from the library, `case8`/`case9` from `swimmers`.
pub fn case_forcing(
    id: &str,
    norm: Normalization,
    swimmers: Option<&Swimmers>,
) -> Result<ForcingSpec> {
    match (id, swimmers) {
        ("case8" | "case9", Some(s)) => {
            let c = s.coeffs(id).expect("case8 or case9");
            Ok(ForcingSpec::modal(
                2.0 * std::f64::consts::PI,
                s.basis.clone(),
                c,
            )?)
        }
        ("case8" | "case9", None) => {
            Err(Error::Study(format!("{id} needs optimized coefficients")))
        }
        _ => Ok(library_case_with(id, norm)?),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use filament_core::analytics::avg_speed;

    #[test]
    fn swimmers_are_unit_norm_and_equally_fast() {
        let s = optimal_swimmers(6, 3).unwrap();
        for c in [&s.case8, &s.case9] {
            let na: f64 = c.a_row(1).iter().map(|v| v * v).sum();
            let nb: f64 = c.b_row(1).iter().map(|v| v * v).sum();
            assert!(
                (na - 1.0).abs() < 1e-6 && (nb - 1.0).abs() < 1e-6,
                "{na} {nb}"
            );
        }
        let w = 2.0 * std::f64::consts::PI;
        let u9 = avg_speed(&s.case9, w, 1.0, &s.basis).unwrap();
        assert!((u9 - s.speed9).abs() < 1e-12);
        assert!(s.speed8 < -0.02 && s.speed8 <= s.speed9);
        if s.case9_is_image {
            assert!((u9 - s.speed8).abs() < 1e-12);
        }
    }

    #[test]
    fn optimized_cases_need_coefficients() {
        assert!(case_forcing("case8", Normalization::Both, None).is_err());
        assert!(case_forcing("case6", Normalization::Both, None).is_ok());
    }
}
