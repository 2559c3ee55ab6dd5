//! Self-convergence of the angle scheme.

use filament_core::angle;
use filament_core::forcing::{library_case, ForcingSpec};
use filament_core::sim::SimConfig;
use filament_core::state::FilamentState;
use filament_core::trajectory::Trajectory;

fn config(n: usize, dt: f64, t_end: f64) -> SimConfig {
    SimConfig {
        n_segments: n,
        dt,
        t_end,
        ..SimConfig::default()
    }
}

fn slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    num / den
}

fn midpoint_displacement(traj: &Trajectory) -> [f64; 2] {
    let n = traj.n_segments();
    let a = traj.records()[0].state.nodes()[n / 2];
    let b = traj.last().unwrap().state.nodes()[n / 2];
    [b[0] - a[0], b[1] - a[1]]
}

/// Curvature vanishing at both ends, as the free-end conditions require.
fn compatible_shape(n: usize) -> FilamentState {
    FilamentState::from_curvature(n, |s| 3.0 * (std::f64::consts::PI * s).sin().powi(2)).unwrap()
}

#[test]
fn relaxation_displacement_is_first_order_in_dt() {
    let dts = [4e-4, 2e-4, 1e-4, 5e-5, 2.5e-5];
    let zero = ForcingSpec::zero();
    let init = compatible_shape(50);
    let d: Vec<[f64; 2]> = dts
        .iter()
        .map(|&dt| {
            midpoint_displacement(&angle::run(&config(50, dt, 0.004), &zero, &init).unwrap())
        })
        .collect();
    let gaps: Vec<f64> = d
        .windows(2)
        .map(|w| (w[0][0] - w[1][0]).hypot(w[0][1] - w[1][1]))
        .collect();
    let p = slope(&dts[..4], &gaps);
    assert!((p - 1.0).abs() < 0.2, "gaps {gaps:?}, slope {p}");
}

/// `E(T) − E(0)` and `∫Ẇ dt` with `E = ½∫κ²`, the rate taken at the end of
/// each step as backward Euler does.
fn energy_mismatch(n: usize, dt: f64, t_end: f64) -> (f64, f64) {
    let traj = angle::run(
        &config(n, dt, t_end),
        &ForcingSpec::zero(),
        &compatible_shape(n),
    )
    .unwrap();
    let r = traj.records();
    let de = 0.5 * (r[r.len() - 1].state.bending_energy() - r[0].state.bending_energy());
    let work: f64 = r
        .windows(2)
        .map(|w| w[1].diag.work_rate * (w[1].time() - w[0].time()))
        .sum();
    (de, work)
}

#[test]
fn energy_loss_matches_integrated_work_rate() {
    let dts = [4e-5, 2e-5, 1e-5];
    let rel: Vec<f64> = dts
        .iter()
        .map(|&dt| {
            let (de, w) = energy_mismatch(50, dt, 0.002);
            assert!(de < 0.0 && w > 0.0);
            ((de + w) / de).abs()
        })
        .collect();
    let p = slope(&dts, &rel);
    assert!((p - 1.0).abs() < 0.2, "{rel:?}, slope {p}");
    assert!(rel[2] < 5e-3);
}

#[test]
fn torque_residual_decays_with_refinement() {
    let f = library_case("case6").unwrap();
    let ns = [25, 50, 100, 200];
    let torque: Vec<f64> = ns
        .iter()
        .map(|&n| {
            let traj = angle::run(
                &config(n, 2e-4, 0.2),
                &f,
                &FilamentState::straight(n).unwrap(),
            )
            .unwrap();
            traj.records()[traj.len() / 2..]
                .iter()
                .map(|r| r.diag.torque_residual)
                .fold(0.0, f64::max)
        })
        .collect();
    let x: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let p = slope(&x, &torque);
    assert!(p < -0.8, "{torque:?}, slope {p}");
    assert!(torque.windows(2).all(|w| w[1] < w[0]));
}
