use std::f64::consts::PI;

use filament_core::analytics::{avg_speed, avg_work, QuadraticForms};
use filament_core::coeffs::ModalCoeffs;
use filament_core::eigen::EigenBasis;
use filament_core::optimizer::{
    solve_work_bending_constrained, solve_work_constrained, OptProblem,
};
use nalgebra::DVector;

fn basis() -> EigenBasis {
    EigenBasis::new(12).unwrap()
}

fn forms(k: usize, basis: &EigenBasis) -> QuadraticForms {
    QuadraticForms::new(1, k, 2.0 * PI, 1.0, basis).unwrap()
}

/// Minimum of the speed form over `W = 1` on a 100³ grid of the whitened 3-sphere.
fn sphere_grid_minimum(f: &QuadraticForms) -> f64 {
    let m = 100;
    let mut best = f64::INFINITY;
    for i in 0..m {
        let psi = PI * (i as f64 + 0.5) / m as f64;
        for j in 0..m {
            let th = PI * (j as f64 + 0.5) / m as f64;
            for l in 0..m {
                let ph = 2.0 * PI * l as f64 / m as f64;
                let y = [
                    psi.cos(),
                    psi.sin() * th.cos(),
                    psi.sin() * th.sin() * ph.cos(),
                    psi.sin() * th.sin() * ph.sin(),
                ];
                let x = DVector::from_fn(4, |r, _| y[r] / f.w[r].sqrt());
                best = best.min(f.speed(&x));
            }
        }
    }
    best
}

#[test]
fn work_constrained_two_modes_matches_grid_search() {
    let basis = basis();
    let r = solve_work_constrained(&OptProblem::new(1, 2), &basis).unwrap();
    let grid = sphere_grid_minimum(&forms(2, &basis));
    assert!(
        grid >= r.speed - 1e-12,
        "grid {grid} beats optimum {}",
        r.speed
    );
    assert!(grid - r.speed < 1e-3, "grid {grid} vs optimum {}", r.speed);
}

/// Minimum over the torus `Σa² = Σb² = 1`, optionally cut by `W = target`.
fn torus_grid_minimum(f: &QuadraticForms, target: Option<f64>) -> f64 {
    let speed = |al: f64, be: f64| {
        let x = DVector::from_vec(vec![al.cos(), al.sin(), be.cos(), be.sin()]);
        f.speed(&x)
    };
    let mut best = f64::INFINITY;
    match target {
        None => {
            let m = 1000;
            for i in 0..m {
                for j in 0..m {
                    best = best.min(speed(
                        2.0 * PI * i as f64 / m as f64,
                        2.0 * PI * j as f64 / m as f64,
                    ));
                }
            }
        }
        Some(w) => {
            // W = w1 (cos²α + cos²β) + w2 (sin²α + sin²β)
            let (w1, w2) = (f.w[0], f.w[1]);
            let c = (w - 2.0 * w2) / (w1 - w2);
            let m = 1_000_000;
            for i in 0..m {
                let al = 2.0 * PI * i as f64 / m as f64;
                let cb2 = c - al.cos().powi(2);
                if !(0.0..=1.0).contains(&cb2) {
                    continue;
                }
                let cb = cb2.sqrt();
                let sb = (1.0 - cb2).sqrt();
                for (x, y) in [(cb, sb), (cb, -sb), (-cb, sb), (-cb, -sb)] {
                    best = best.min(speed(al, y.atan2(x)));
                }
            }
        }
    }
    best
}

#[test]
fn norm_constrained_two_modes_matches_torus_grid_search() {
    let basis = basis();
    let f = forms(2, &basis);
    let mut p = OptProblem::new(1, 2);
    p.work_target = None;
    let r = solve_work_bending_constrained(&p, &basis).unwrap();
    let grid = torus_grid_minimum(&f, None);
    assert!(
        grid >= r.speed - 1e-9 && grid - r.speed < 1e-3,
        "grid {grid} vs optimum {}",
        r.speed
    );

    let target = f.w[0] + f.w[1];
    p.work_target = Some(target);
    let r = solve_work_bending_constrained(&p, &basis).unwrap();
    assert!(r.max_residual() < 1e-8);
    let grid = torus_grid_minimum(&f, Some(target));
    assert!(
        grid >= r.speed - 1e-8 && grid - r.speed < 1e-3,
        "grid {grid} vs optimum {}",
        r.speed
    );
}

fn mirrored(c: &ModalCoeffs) -> ModalCoeffs {
    let mut out = c.clone();
    for m in 1..=c.m_max() {
        for k in (2..=c.k_max()).step_by(2) {
            out.set(m, k, -c.a(m, k), -c.b(m, k));
        }
    }
    out
}

#[test]
fn mirroring_negates_the_optimal_speed() {
    let basis = basis();
    let p = OptProblem::new(1, 6);
    let r = solve_work_constrained(&p, &basis).unwrap();
    let flipped = mirrored(&r.coeffs);
    let v = avg_speed(&flipped, p.omega, p.gamma, &basis).unwrap();
    assert!((v + r.speed).abs() < 1e-12);
    assert!((avg_work(&flipped, p.omega, &basis).unwrap() - 1.0).abs() < 1e-12);
    // the mirrored optimum is the fastest rightward swimmer
    let f = forms(6, &basis);
    let scale = f.w.map(|w| 1.0 / w.sqrt());
    let whitened = nalgebra::DMatrix::from_fn(12, 12, |i, j| scale[i] * f.u[(i, j)] * scale[j]);
    let top = whitened.symmetric_eigenvalues().max();
    assert!((top - v).abs() < 1e-12);
}

#[test]
fn feasible_perturbations_do_not_improve_the_optimum() {
    let basis = basis();
    let p = OptProblem::new(2, 5);
    let r = solve_work_constrained(&p, &basis).unwrap();
    let f = QuadraticForms::new(2, 5, p.omega, p.gamma, &basis).unwrap();
    let x = DVector::from_vec(r.coeffs.to_flat());
    let n = x.len();
    for dir in 0..n {
        for h in [1e-2, 1e-4] {
            let mut y = x.clone();
            y[dir] += h;
            let y = &y / f.work(&y).sqrt();
            assert!(f.speed(&y) >= r.speed - 1e-8, "direction {dir}");
        }
    }
}

#[test]
fn results_reproduce_through_analytics() {
    let basis = basis();
    let mut p = OptProblem::new(1, 8);
    p.restarts = 6;
    p.seed = 11;
    p.work_target = None;
    let exact = solve_work_constrained(&OptProblem::new(3, 10), &basis).unwrap();
    let iterated = solve_work_bending_constrained(&p, &basis).unwrap();
    for r in [&exact, &iterated] {
        let v = avg_speed(&r.coeffs, p.omega, p.gamma, &basis).unwrap();
        let w = avg_work(&r.coeffs, p.omega, &basis).unwrap();
        assert!((v - r.speed).abs() < 1e-12);
        assert!((w - r.work).abs() < 1e-12);
        assert!(r.max_residual() < 1e-8);
    }
}

#[test]
fn same_seed_gives_identical_results() {
    let basis = basis();
    let mut p = OptProblem::new(1, 6);
    p.restarts = 5;
    p.seed = 42;
    p.work_target = None;
    let a = solve_work_bending_constrained(&p, &basis).unwrap();
    let b = solve_work_bending_constrained(&p, &basis).unwrap();
    assert_eq!(a.coeffs, b.coeffs);
    assert_eq!(a.speed.to_bits(), b.speed.to_bits());
    assert_eq!(a.best_restart, b.best_restart);
    assert_eq!(a.seed, Some(42));
    for (x, y) in a.restarts.iter().zip(&b.restarts) {
        assert_eq!(x.x, y.x);
    }
}

#[test]
fn one_parity_feasible_point_cannot_swim() {
    let basis = basis();
    let k = 6;
    let mut c = ModalCoeffs::zeros(1, k);
    for j in (1..=k).step_by(2) {
        c.set(1, j, 0.3 * j as f64, -0.2);
    }
    let a: f64 = c.a_row(1).iter().map(|v| v * v).sum::<f64>().sqrt();
    let b: f64 = c.b_row(1).iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut unit = ModalCoeffs::zeros(1, k);
    for j in 1..=k {
        unit.set(1, j, c.a(1, j) / a, c.b(1, j) / b);
    }
    assert!(avg_speed(&unit, 2.0 * PI, 1.0, &basis).unwrap().abs() < 1e-10);
}
