//! Frozen reference values computed independently of this crate.

use filament_core::eigen::{find_roots, EigenBasis};
use filament_core::forcing::traveling_wave;
use filament_core::nodal::{ConstrainedState, NodalModel};
use filament_core::quadrature::{integrate, simpson, uniform_grid};
use filament_core::sim::SimConfig;

/// Bisection on [13.5, 14.5] in 40-digit arithmetic.
const XI_4: f64 = 14.137_165_491_257_464;

/// `∫ψ_1 ψ_2′ ds`, 10,001-point Simpson in 40-digit arithmetic.
const S_12: f64 = -3.342_016_046_114_660_4;

#[test]
fn fourth_root_matches_bisection() {
    let xi = find_roots(4).unwrap();
    assert!((xi[3] - XI_4).abs() < 1e-12, "{}", xi[3]);
    for (x, r) in xi.iter().zip([4.730, 7.853, 10.996]) {
        assert!((x - r).abs() < 5e-4);
    }
}

#[test]
fn lowest_eigenvalue_is_about_500() {
    let basis = EigenBasis::new(3).unwrap();
    assert!(
        (basis.lambda()[0] - 500.56).abs() < 0.01,
        "{}",
        basis.lambda()[0]
    );
}

#[test]
fn coupling_entry_matches_simpson() {
    let basis = EigenBasis::new(3).unwrap();
    let s = basis.coupling();
    assert!((s[(0, 1)] - S_12).abs() < 1e-8, "{}", s[(0, 1)]);
    assert!((s[(1, 0)] + S_12).abs() < 1e-8);
    assert!(s[(0, 2)].abs() < 1e-8);
}

#[test]
fn first_mode_has_unit_norm_on_fine_simpson_grid() {
    let basis = EigenBasis::new(1).unwrap();
    let grid = uniform_grid(10_001);
    let (psi, _) = basis.eval_eigenfunction(1, &grid).unwrap();
    let sq: Vec<f64> = psi.iter().map(|p| p * p).collect();
    assert!((simpson(&sq).unwrap() - 1.0).abs() < 1e-10);
}

#[test]
fn simpson_integrates_reference_functions() {
    assert_eq!(integrate(|_| 1.0, 11).unwrap(), 1.0);
    assert!((integrate(|s| s, 11).unwrap() - 0.5).abs() < 1e-15);
    let sin2 = |s: f64| (2.0 * std::f64::consts::PI * s).sin().powi(2);
    assert!((integrate(sin2, 2001).unwrap() - 0.5).abs() < 1e-10);
    assert!(simpson(&[1.0, 2.0]).is_err());
}

fn fourth_difference_error(basis: &EigenBasis, k: usize, h: f64) -> f64 {
    let lam = basis.lambda()[k - 1];
    [0.3, 0.45, 0.6]
        .iter()
        .map(|&s| {
            let p = |x: f64| basis.eval(k, x).unwrap().0;
            let d4 = (p(s - 2.0 * h) - 4.0 * p(s - h) + 6.0 * p(s) - 4.0 * p(s + h)
                + p(s + 2.0 * h))
                / h.powi(4);
            ((d4 - lam * p(s)) / (lam * p(s).abs().max(0.1))).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn fourth_difference_converges_at_second_order() {
    let basis = EigenBasis::new(3).unwrap();
    for k in 1..=3 {
        let hs = [0.02, 0.01, 0.005];
        let errs: Vec<f64> = hs
            .iter()
            .map(|&h| fourth_difference_error(&basis, k, h))
            .collect();
        let slope = (errs[2] / errs[0]).ln() / (hs[2] / hs[0]).ln();
        assert!((slope - 2.0).abs() < 0.1, "k={k}: {errs:?} slope {slope}");
        assert!(errs[2] < 1e-2);
    }
}

/// Residual of one backward-Euler step for `N = 4`, travelling-wave forcing,
/// assembled symbolically and evaluated to 20 digits.
const NODAL_N4: [f64; 14] = [
    -0.007_337_990_181_421_072_1,
    0.016_727_611_893_790_236,
    0.018_524_068_643_972_288,
    0.037_370_549_205_112_914,
    -0.050_359_682_767_364_953,
    -0.035_433_297_911_733_524,
    -0.041_938_422_735_568_276,
    0.030_211_119_251_415_654,
    0.025_270_952_514_550_289,
    0.019_939_211_010_192_768,
    0.033_805_180_931_507_063,
    -0.012_405_397_311_749_911,
    -0.000_322_691_495_406_744_14,
    0.025_463_995_099_365_888,
];

#[test]
fn four_segment_nodal_residual_matches_symbolic_assembly() {
    let n = 4;
    let ds = 1.0 / n as f64;
    let mut prev_nodes = vec![[0.0, 0.0]];
    for th in [0.1_f64, 0.3, 0.2, -0.1] {
        let p: [f64; 2] = *prev_nodes.last().unwrap();
        prev_nodes.push([p[0] + ds * th.cos(), p[1] + ds * th.sin()]);
    }
    let pert = [
        (1.0, -2.0),
        (3.0, 1.0),
        (-2.0, 2.0),
        (1.0, 3.0),
        (-1.0, -1.0),
    ];
    let guess_nodes: Vec<[f64; 2]> = prev_nodes
        .iter()
        .zip(pert)
        .map(|(p, (dx, dy))| [p[0] + dx / 1000.0, p[1] + dy / 1000.0])
        .collect();
    let prev = ConstrainedState::new(prev_nodes, vec![0.0; n], 0.3).unwrap();
    let guess = ConstrainedState::new(guess_nodes, vec![0.5, -0.75, 0.4, 0.1], 0.301).unwrap();
    let forcing = traveling_wave();
    let config = SimConfig {
        n_segments: n,
        ..SimConfig::default()
    };
    let model = NodalModel::new(&forcing, &config).unwrap();
    let r = model.residual(&prev, &guess).unwrap();
    assert_eq!(r.len(), 3 * n + 2);
    for (i, (got, want)) in r.iter().zip(NODAL_N4).enumerate() {
        assert!(
            (got - want).abs() < 1e-13 * want.abs().max(1.0),
            "row {i}: {got} vs {want}"
        );
    }
}
