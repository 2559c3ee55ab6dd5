use std::f64::consts::PI;
use std::sync::OnceLock;

use filament_core::analytics::{avg_speed, avg_speed_from_response, avg_work};
use filament_core::coeffs::ModalCoeffs;
use filament_core::eigen::EigenBasis;
use filament_core::forcing::{library_case, LIBRARY_CASES};
use filament_core::sim::SimConfig;
use filament_core::state::FilamentState;
use filament_core::trajectory::Trajectory;
use filament_core::{angle, nodal};
use proptest::prelude::*;

fn basis() -> &'static EigenBasis {
    static BASIS: OnceLock<EigenBasis> = OnceLock::new();
    BASIS.get_or_init(|| EigenBasis::new(8).unwrap())
}

fn coeffs() -> impl Strategy<Value = ModalCoeffs> {
    (1usize..=3, 2usize..=8).prop_flat_map(|(m, k)| {
        proptest::collection::vec(-1.0f64..1.0, 2 * m * k)
            .prop_map(move |x| ModalCoeffs::from_flat(m, k, &x))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn speed_is_invariant_under_time_shift(c in coeffs(), tau in -2.0f64..2.0) {
        let omega = 2.0 * PI;
        let u = avg_speed(&c, omega, 1.0, basis()).unwrap();
        let v = avg_speed(&c.time_shifted(omega, tau), omega, 1.0, basis()).unwrap();
        prop_assert!((u - v).abs() < 1e-12 * u.abs().max(1.0), "{u} vs {v}");
        let w0 = avg_work(&c, omega, basis()).unwrap();
        let w1 = avg_work(&c.time_shifted(omega, tau), omega, basis()).unwrap();
        prop_assert!((w0 - w1).abs() < 1e-12 * w0);
    }

    #[test]
    fn speed_agrees_with_response_assembly(c in coeffs(), omega in 1.0f64..20.0, gamma in 0.1f64..3.0) {
        let u = avg_speed(&c, omega, gamma, basis()).unwrap();
        let v = avg_speed_from_response(&c, omega, gamma, basis()).unwrap();
        prop_assert!((u - v).abs() < 1e-12 * u.abs().max(1.0), "{u} vs {v}");
    }

    #[test]
    fn work_is_positive(c in coeffs()) {
        prop_assume!(c.to_flat().iter().any(|v| v.abs() > 1e-3));
        prop_assert!(avg_work(&c, 2.0 * PI, basis()).unwrap() > 0.0);
    }

    #[test]
    fn basis_boundary_and_parity(k in 1usize..=8, s in 0.0f64..1.0) {
        let b = basis();
        for end in [0.0, 1.0] {
            let (v, d) = b.eval(k, end).unwrap();
            prop_assert!(v.abs() < 1e-8 && d.abs() < 1e-8);
        }
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        let (p, _) = b.eval(k, s).unwrap();
        let (q, _) = b.eval(k, 1.0 - s).unwrap();
        prop_assert!((q - sign * p).abs() < 1e-9);
    }
}

fn short_config(n: usize, dt: f64) -> SimConfig {
    SimConfig {
        n_segments: n,
        dt,
        t_end: 10.0 * dt,
        ..SimConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn simulated_segments_keep_length(
        n in 4usize..24,
        a in -3.0f64..3.0,
        b in -2.0f64..2.0,
        case in 0usize..LIBRARY_CASES.len(),
    ) {
        let f = library_case(LIBRARY_CASES[case]).unwrap();
        let init = FilamentState::from_curvature(n, |s| a * (PI * s).sin() + b * s).unwrap();
        let config = short_config(n, 1e-3);
        for traj in [angle::run(&config, &f, &init).unwrap(), nodal::run(&config, &f, &init).unwrap()] {
            for r in traj.records() {
                prop_assert!(r.state.segment_length_error() * n as f64 <= 1e-14);
            }
        }
    }
}

#[test]
fn long_trajectory_round_trips_exactly() {
    let f = library_case("case6").unwrap();
    let config = SimConfig {
        n_segments: 20,
        dt: 1e-3,
        t_end: 10.0,
        ..SimConfig::default()
    };
    let traj = angle::run(&config, &f, &FilamentState::straight(20).unwrap()).unwrap();
    assert_eq!(traj.len(), 10_001);
    let mut buf = Vec::new();
    traj.write_csv(&mut buf).unwrap();
    let back = Trajectory::read_csv(buf.as_slice()).unwrap();
    assert_eq!(back, traj);
}
