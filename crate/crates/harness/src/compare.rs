//! Gaps between two discretizations and their rate of decay.

use filament_core::trajectory::Trajectory;

use crate::error::{Error, Result};

/// `(L∞, L²)` node-position gaps at time `t`. The L² norm uses weights `1/N`.
/// Both trajectories are linearly interpolated in time.
pub fn compare_trajectories(a: &Trajectory, b: &Trajectory, t: f64) -> Result<(f64, f64)> {
    if a.n_segments() != b.n_segments() {
        return Err(Error::Study(format!(
            "segment counts differ: {} and {}",
            a.n_segments(),
            b.n_segments()
        )));
    }
    let (xa, xb) = (a.nodes_at(t)?, b.nodes_at(t)?);
    let n = a.n_segments() as f64;
    let mut linf = 0.0_f64;
    let mut sum = 0.0;
    for (p, q) in xa.iter().zip(&xb) {
        let d = (p[0] - q[0]).hypot(p[1] - q[1]);
        linf = linf.max(d);
        sum += d * d;
    }
    Ok((linf, (sum / n).sqrt()))
}

/// Least-squares slope of `log gap` against `log N`.
pub fn convergence_slope(gaps: &[f64], ns: &[usize]) -> Result<f64> {
    if gaps.len() != ns.len() || gaps.len() < 3 {
        return Err(Error::Study(format!(
            "need at least 3 matching points, got {} gaps and {} sizes",
            gaps.len(),
            ns.len()
        )));
    }
    if let Some(g) = gaps.iter().find(|g| !(**g > 0.0)) {
        return Err(Error::Study(format!("gaps must be positive, got {g}")));
    }
    let x: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let y: Vec<f64> = gaps.iter().map(|g| g.ln()).collect();
    let m = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / m, y.iter().sum::<f64>() / m);
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Study("segment counts must differ".into()));
    }
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use filament_core::state::FilamentState;
    use filament_core::trajectory::{Diagnostics, Method, Record};

    fn single(state: FilamentState) -> Trajectory {
        let mut t = Trajectory::new(Method::A, state.n_segments());
        t.push(Record {
            state,
            diag: Diagnostics::default(),
        })
        .unwrap();
        t
    }

    #[test]
    fn identical_trajectories_have_no_gap() {
        let a = single(FilamentState::semicircle(12).unwrap());
        assert_eq!(compare_trajectories(&a, &a, 0.0).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn translation_gap_is_the_shift() {
        let s = FilamentState::semicircle(12).unwrap();
        let mut moved = s.clone();
        moved.x0[0] += 0.25;
        let (linf, l2) = compare_trajectories(&single(s), &single(moved), 0.0).unwrap();
        assert!((linf - 0.25).abs() < 1e-15);
        // 13 nodes with weight 1/12
        assert!((l2 - 0.25 * (13.0f64 / 12.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn mismatched_sizes_rejected() {
        let a = single(FilamentState::straight(8).unwrap());
        let b = single(FilamentState::straight(9).unwrap());
        assert!(compare_trajectories(&a, &b, 0.0).is_err());
    }

    #[test]
    fn power_laws_give_their_exponent() {
        let ns = [25, 50, 100, 200];
        let g1: Vec<f64> = ns.iter().map(|&n| 3.0 / n as f64).collect();
        let g2: Vec<f64> = ns.iter().map(|&n| 0.7 / (n * n) as f64).collect();
        assert!((convergence_slope(&g1, &ns).unwrap() + 1.0).abs() < 1e-12);
        assert!((convergence_slope(&g2, &ns).unwrap() + 2.0).abs() < 1e-12);
        assert!(convergence_slope(&[1.0, 0.0, 0.5], &[1, 2, 3]).is_err());
        assert!(convergence_slope(&[1.0, 0.5], &[1, 2]).is_err());
    }
}
