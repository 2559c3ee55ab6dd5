//! Composite Simpson quadrature on uniform grids over [0, 1].

use crate::error::{Error, Result};

/// Uniform grid of `points` samples on [0, 1], endpoints included.
pub fn uniform_grid(points: usize) -> Vec<f64> {
    assert!(points >= 2, "a uniform grid needs at least two points");
    let h = 1.0 / (points - 1) as f64;
    (0..points).map(|i| i as f64 * h).collect()
}

/// Simpson weights for `points` uniform samples on [0, 1].
pub fn simpson_weights(points: usize) -> Result<Vec<f64>> {
    if points < 3 || points % 2 == 0 {
        return Err(Error::EvenPointCount(points));
    }
    let h = 1.0 / (points - 1) as f64;
    let mut w = vec![0.0; points];
    for (i, wi) in w.iter_mut().enumerate() {
        *wi = if i == 0 || i == points - 1 {
            h / 3.0
        } else if i % 2 == 1 {
            4.0 * h / 3.0
        } else {
            2.0 * h / 3.0
        };
    }
    Ok(w)
}

/// Integral over [0, 1] of samples taken on a uniform grid with an odd point count.
pub fn simpson(values: &[f64]) -> Result<f64> {
    let n = values.len();
    if n < 3 || n % 2 == 0 {
        return Err(Error::EvenPointCount(n));
    }
    let h = 1.0 / (n - 1) as f64;
    let mut odd = 0.0;
    let mut even = 0.0;
    for (i, v) in values.iter().enumerate().take(n - 1).skip(1) {
        if i % 2 == 1 {
            odd += v;
        } else {
            even += v;
        }
    }
    Ok(h / 3.0 * (values[0] + values[n - 1] + 4.0 * odd + 2.0 * even))
}

/// Samples `f` on a uniform grid and integrates it with [`simpson`].
pub fn integrate<F: Fn(f64) -> f64>(f: F, points: usize) -> Result<f64> {
    if points < 3 || points % 2 == 0 {
        return Err(Error::EvenPointCount(points));
    }
    let values: Vec<f64> = uniform_grid(points).into_iter().map(f).collect();
    simpson(&values)
}

/// Trapezoid rule on arbitrary (sorted) abscissae.
pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_and_linear_are_exact() {
        assert!((integrate(|_| 1.0, 11).unwrap() - 1.0).abs() < 1e-15);
        assert!((integrate(|s| s, 11).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn squared_sine_at_2001_points() {
        // antiderivative s/2 - sin(4 pi s)/(8 pi) gives exactly 1/2 on [0, 1]
        let v = integrate(|s| (2.0 * PI * s).sin().powi(2), 2001).unwrap();
        assert!((v - 0.5).abs() < 1e-10);
    }

    #[test]
    fn rejects_even_point_counts() {
        assert!(matches!(simpson(&[1.0; 4]), Err(Error::EvenPointCount(4))));
        assert!(simpson(&[1.0; 1]).is_err());
        assert!(simpson_weights(10).is_err());
    }

    #[test]
    fn weights_agree_with_direct_sum() {
        let n = 101;
        let w = simpson_weights(n).unwrap();
        let vals: Vec<f64> = uniform_grid(n).iter().map(|s| s.exp()).collect();
        let direct = simpson(&vals).unwrap();
        let weighted: f64 = w.iter().zip(&vals).map(|(a, b)| a * b).sum();
        assert!((direct - weighted).abs() < 1e-14);
        assert!((direct - (1f64.exp() - 1.0)).abs() < 1e-9);
    }

    #[test]
    fn trapezoid_on_nonuniform_points() {
        let x = [0.0, 0.1, 0.5, 1.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        assert!((trapezoid(&x, &y) - 2.0).abs() < 1e-14);
    }
}
