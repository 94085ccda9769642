use branchstable::harness::*;
use branchstable::{RngStream, TimeProfile};
use proptest::prelude::*;

#[test]
fn inequality_suite_at_full_size() {
    let r = inequality_suite(100_000, RngStream::new(81, 0)).unwrap();
    assert_eq!(r.trials, 100_000);
    assert!(r.passed(), "{:?}", r.violations.first());
}

#[test]
fn a_planted_violation_is_reported() {
    // the estimates need beta <= 1; at beta = 3 the upper bound fails
    let w = check_inequalities(0.5, 1.0, 3.0, 3.5);
    assert!(!w.is_empty());
    assert!(w.iter().all(|v| v.lhs > v.rhs));
}

proptest! {
    #[test]
    fn inequalities_hold(a in 0.0f64..1e3, b in 0.0f64..1e3, beta in 1e-6f64..1.0, t in 0.0f64..=1.0) {
        let delta = beta + t * (1.0 - beta);
        let w = check_inequalities(a, b, beta, delta);
        prop_assert!(w.is_empty(), "{:?}", w);
    }

    #[test]
    fn ecf_is_bounded_hermitian_and_distance_is_a_metric(
        xs in prop::collection::vec(-50.0f64..50.0, 100..300),
        ys in prop::collection::vec(-50.0f64..50.0, 100..300),
        z in 0.01f64..3.0,
    ) {
        let grid = [-z, 0.0, z];
        let a = ecf(&xs, &grid).unwrap();
        let b = ecf(&ys, &grid).unwrap();
        prop_assert!(a.values.iter().all(|v| v.norm() <= 1.0 + 1e-12));
        prop_assert_eq!(a.values[1].re, 1.0);
        prop_assert!((a.values[0] - a.values[2].conj()).norm() < 1e-12);
        let dab = ecf_distance(&a, &b).unwrap();
        prop_assert_eq!(dab, ecf_distance(&b, &a).unwrap());
        prop_assert_eq!(ecf_distance(&a, &a).unwrap(), 0.0);
        prop_assert!(dab <= 2.0);
    }

    #[test]
    fn pairing_is_linear(c1 in -3.0f64..3.0, c2 in -3.0f64..3.0, w in 0.05f64..0.5) {
        let n = 400;
        let grid: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).collect();
        let x: Vec<(f64, f64)> = grid.iter().map(|&t| (t, (5.0 * t).sin())).collect();
        let y: Vec<(f64, f64)> = grid.iter().map(|&t| (t, t * t - 0.3)).collect();
        let mix: Vec<(f64, f64)> = x.iter().zip(&y).map(|(a, b)| (a.0, c1 * a.1 + c2 * b.1)).collect();
        let psi = TimeProfile::Bump { center: 0.5, width: w };
        let px = space_time_pairing(&x, &psi, 1e-2).unwrap().value;
        let py = space_time_pairing(&y, &psi, 1e-2).unwrap().value;
        let pm = space_time_pairing(&mix, &psi, 1e-2).unwrap().value;
        prop_assert!((pm - (c1 * px + c2 * py)).abs() < 1e-12 * (1.0 + px.abs() + py.abs()));
    }
}
