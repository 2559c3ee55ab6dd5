//! Discrete filament described by its basepoint and segment angles.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest segment count the boundary stencils support.
pub const MIN_SEGMENTS: usize = 4;

pub type Vec2 = [f64; 2];

#[inline]
pub fn tangent(theta: f64) -> Vec2 {
    let (s, c) = theta.sin_cos();
    [c, s]
}

#[inline]
pub fn normal(theta: f64) -> Vec2 {
    let (s, c) = theta.sin_cos();
    [-s, c]
}

/// Basepoint `X_0` plus angles `θ_1..θ_N` of the `N` equal segments.
///
/// Segment lengths are `1/N` by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilamentState {
    pub x0: Vec2,
    pub theta: Vec<f64>,
    pub time: f64,
}

impl FilamentState {
    pub fn new(x0: Vec2, theta: Vec<f64>, time: f64) -> Result<Self> {
        if theta.len() < MIN_SEGMENTS {
            return Err(Error::InvalidInput(format!(
                "a filament needs at least {MIN_SEGMENTS} segments, got {}",
                theta.len()
            )));
        }
        if !(x0.iter().chain(&theta).all(|v| v.is_finite()) && time.is_finite()) {
            return Err(Error::NonFinite("filament state"));
        }
        Ok(Self { x0, theta, time })
    }

    /// Straight filament along the x-axis starting at the origin.
    pub fn straight(n: usize) -> Result<Self> {
        Self::new([0.0, 0.0], vec![0.0; n], 0.0)
    }

    /// Half circle with constant curvature π: `θ_i = π(i − 1/2)/N`.
    pub fn semicircle(n: usize) -> Result<Self> {
        let theta = (1..=n).map(|i| PI * (i as f64 - 0.5) / n as f64).collect();
        Self::new([0.0, 0.0], theta, 0.0)
    }

    /// Shape whose discrete curvature at node `s_i` equals `kappa(s_i)`, with `θ_1 = 0`.
    pub fn from_curvature<F: Fn(f64) -> f64>(n: usize, kappa: F) -> Result<Self> {
        let mut theta = Vec::with_capacity(n);
        let mut th = 0.0;
        theta.push(th);
        for i in 1..n {
            th += kappa(i as f64 / n as f64) / n as f64;
            theta.push(th);
        }
        Self::new([0.0, 0.0], theta, 0.0)
    }

    pub fn n_segments(&self) -> usize {
        self.theta.len()
    }

    /// Nodes `X_0..X_N`.
    pub fn nodes(&self) -> Vec<Vec2> {
        let h = 1.0 / self.n_segments() as f64;
        let mut out = Vec::with_capacity(self.n_segments() + 1);
        let mut p = self.x0;
        out.push(p);
        for &th in &self.theta {
            let t = tangent(th);
            p = [p[0] + h * t[0], p[1] + h * t[1]];
            out.push(p);
        }
        out
    }

    /// Segment midpoints `X_{i−1/2}`, `i = 1..N`.
    pub fn midpoints(&self) -> Vec<Vec2> {
        self.nodes()
            .windows(2)
            .map(|w| [0.5 * (w[0][0] + w[1][0]), 0.5 * (w[0][1] + w[1][1])])
            .collect()
    }

    /// Per-segment `(e_t, e_n)`.
    pub fn frame_vectors(&self) -> Vec<(Vec2, Vec2)> {
        self.theta
            .iter()
            .map(|&th| (tangent(th), normal(th)))
            .collect()
    }

    /// `κ_i = N(θ_{i+1} − θ_i)` at interior nodes `s_i = i/N`, `i = 1..N−1`.
    pub fn recover_curvature(&self) -> Vec<f64> {
        let n = self.n_segments() as f64;
        self.theta.windows(2).map(|w| n * (w[1] - w[0])).collect()
    }

    /// `Σ κ_i² / N`.
    pub fn bending_energy(&self) -> f64 {
        let n = self.n_segments() as f64;
        self.recover_curvature().iter().map(|k| k * k).sum::<f64>() / n
    }

    /// Largest deviation of a reconstructed segment length from `1/N`.
    pub fn segment_length_error(&self) -> f64 {
        let h = 1.0 / self.n_segments() as f64;
        self.nodes()
            .windows(2)
            .map(|w| ((w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]) - h).abs())
            .fold(0.0, f64::max)
    }
}

/// Interior node arclengths `s_i = i/N`, `i = 1..N−1`.
pub fn interior_nodes(n: usize) -> Vec<f64> {
    (1..n).map(|i| i as f64 / n as f64).collect()
}

/// Angles of the chords between consecutive nodes, unwrapped so that
/// neighbouring segments differ by less than π. `reference` pins the branch of
/// the first segment.
pub fn angles_from_nodes(nodes: &[Vec2], reference: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(nodes.len().saturating_sub(1));
    let mut prev = reference;
    for w in nodes.windows(2) {
        let raw = (w[1][1] - w[0][1]).atan2(w[1][0] - w[0][0]);
        let th = raw + 2.0 * PI * ((prev - raw) / (2.0 * PI)).round();
        out.push(th);
        prev = th;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn too_few_segments_rejected() {
        assert!(FilamentState::straight(3).is_err());
        assert!(FilamentState::new([0.0, f64::NAN], vec![0.0; 5], 0.0).is_err());
    }

    #[test]
    fn straight_has_zero_curvature() {
        let s = FilamentState::straight(10).unwrap();
        assert!(s.recover_curvature().iter().all(|k| *k == 0.0));
        assert!((s.nodes()[10][0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn semicircle_curvature_is_pi() {
        let s = FilamentState::semicircle(100).unwrap();
        for k in s.recover_curvature() {
            assert!((k - PI).abs() < 1e-12);
        }
    }

    #[test]
    fn discrete_sine_curvature_converges() {
        let n = 200;
        let theta = (1..=n)
            .map(|i| (2.0 * PI * (i as f64 - 0.5) / n as f64).sin() / (2.0 * PI))
            .collect();
        let s = FilamentState::new([0.0, 0.0], theta, 0.0).unwrap();
        let err = s
            .recover_curvature()
            .iter()
            .zip(interior_nodes(n))
            .map(|(k, si)| (k - (2.0 * PI * si).cos()).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-3, "{err}");
    }

    #[test]
    fn frames_for_axis_angles() {
        let s = FilamentState::new([0.0, 0.0], vec![0.0, PI / 2.0, 0.0, 0.0], 0.0).unwrap();
        let f = s.frame_vectors();
        assert_eq!(f[0], ([1.0, 0.0], [-0.0, 1.0]));
        assert!((f[1].0[0]).abs() < 1e-16 && f[1].0[1] == 1.0);
        assert!((f[1].1[0] + 1.0).abs() < 1e-16 && f[1].1[1].abs() < 1e-16);
    }

    #[test]
    fn from_curvature_reproduces_node_values() {
        let s = FilamentState::from_curvature(50, |x| (3.0 * x).sin()).unwrap();
        for (k, si) in s.recover_curvature().iter().zip(interior_nodes(50)) {
            assert!((k - (3.0 * si).sin()).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn frames_are_orthonormal(th in proptest::collection::vec(-10.0f64..10.0, 4..40)) {
            let s = FilamentState::new([0.3, -1.0], th, 0.0).unwrap();
            for (t, n) in s.frame_vectors() {
                prop_assert!((t[0] * t[0] + t[1] * t[1] - 1.0).abs() < 1e-15);
                prop_assert!((t[0] * n[0] + t[1] * n[1]).abs() < 1e-15);
                prop_assert_eq!([-t[1], t[0]], n);
            }
        }

        #[test]
        fn segments_have_length_one_over_n(th in proptest::collection::vec(-10.0f64..10.0, 4..200)) {
            let s = FilamentState::new([1.0, 2.0], th, 0.0).unwrap();
            prop_assert!(s.segment_length_error() < 1e-14);
        }

        #[test]
        fn angles_round_trip_through_nodes(th in proptest::collection::vec(-0.5f64..0.5, 4..60), base in -20.0f64..20.0) {
            // cumulative sums of small increments make a winding curve
            let theta: Vec<f64> = th.iter().scan(base, |acc, d| { *acc += d; Some(*acc) }).collect();
            let s = FilamentState::new([0.0, 0.0], theta.clone(), 0.0).unwrap();
            let back = angles_from_nodes(&s.nodes(), base);
            for (a, b) in back.iter().zip(&theta) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
