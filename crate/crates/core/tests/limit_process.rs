use branchstable::limit_process::*;
use branchstable::{Error, ModelParams};
use proptest::prelude::*;

fn quad() -> CharfnQuadrature {
    CharfnQuadrature::default()
}

#[test]
fn self_similarity_at_joint_times() {
    let p = ModelParams::new(3, 1.2, 0.45, 1.0).unwrap();
    let h = p.self_similarity_index();
    let (ts, zs) = ([0.4, 1.0, 1.7], [0.9, -0.4, 0.6]);
    for a in [0.7, 1.8] {
        let at: Vec<f64> = ts.iter().map(|t| a * t).collect();
        let az: Vec<f64> = zs.iter().map(|z| z * f64::powf(a, h)).collect();
        let lhs = log_charfn(&p, &at, &zs, &quad()).unwrap();
        let rhs = log_charfn(&p, &ts, &az, &quad()).unwrap();
        assert!((lhs / rhs - 1.0).norm() < 1e-6, "a {a}: {lhs} vs {rhs}");
    }
}

#[test]
fn beta_one_is_gaussian() {
    let p = ModelParams::new(3, 2.0, 1.0, 1.0).unwrap();
    let v = log_charfn(&p, &[0.5, 1.0], &[1.0, -0.3], &quad()).unwrap();
    assert_eq!(v.im, 0.0);
    // quadratic form: l(2z) = 4 l(z)
    let w = log_charfn(&p, &[0.5, 1.0], &[2.0, -0.6], &quad()).unwrap();
    assert!((w.re / v.re - 4.0).abs() < 1e-9);
}

#[test]
fn increments_are_not_independent() {
    // the limit has dependent increments: the joint exponent of
    // (xi_1, xi_2 - xi_1) differs from the sum of the marginal ones
    let p = ModelParams::new(5, 2.0, 0.5, 1.0).unwrap();
    let joint = log_charfn(&p, &[1.0, 2.0], &[1.0 - 1.0, 1.0], &quad()).unwrap();
    let first = log_charfn(&p, &[1.0], &[1.0], &quad()).unwrap();
    let second_incr = log_charfn(&p, &[1.0, 2.0], &[-1.0, 1.0], &quad()).unwrap();
    let sum = first + second_incr;
    assert!((joint - sum).norm() > 1e-3 * joint.norm());
}

#[test]
fn integrability_threshold() {
    // finite below alpha(1+beta)/beta, divergent at and above it
    let (alpha, beta) = (1.2, 0.45);
    let top = alpha * (1.0 + beta) / beta;
    assert!(integrability_value(alpha, beta, top - 0.5, 1e3, 1.0).unwrap().is_finite());
    assert!(matches!(integrability_value(alpha, beta, top + 0.1, 1e3, 1.0), Err(Error::Divergent(_))));
    assert!(integrability_value(alpha, beta, 3.0, -1.0, 1.0).is_err());
}

#[test]
fn sampled_marginal_is_centred_and_skewed() {
    let p = ModelParams::new(5, 2.0, 0.5, 1.0).unwrap();
    let grid = build_kernel_grid(&p, &[1.0], &KernelResolution::default()).unwrap();
    let x: Vec<f64> = sample_xi_paths(&grid, 20_000, branchstable::RngStream::new(61, 0)).into_iter().map(|v| v[0]).collect();
    let mut s = x.clone();
    s.sort_by(f64::total_cmp);
    // right-skewed (1 + beta)-stable with mean zero: the median is negative
    assert!(s[s.len() / 2] < 0.0);
    let m = x.iter().sum::<f64>() / x.len() as f64;
    let scale = (-log_charfn(&p, &[1.0], &[1.0], &quad()).unwrap().re).powf(1.0 / 1.5);
    assert!(m.abs() < 0.1 * scale, "{m}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn marginal_is_strictly_stable(z in 0.05f64..5.0, neg in any::<bool>()) {
        let p = ModelParams::new(3, 1.2, 0.45, 1.0).unwrap();
        let one = log_charfn(&p, &[1.0], &[1.0], &quad()).unwrap();
        let zz = if neg { -z } else { z };
        let v = log_charfn(&p, &[1.0], &[zz], &quad()).unwrap();
        let expect = one * z.powf(1.45);
        let expect = if neg { expect.conj() } else { expect };
        prop_assert!((v - expect).norm() < 1e-9 * expect.norm());
    }

    #[test]
    fn constants_relation(d in 1usize..8, alpha in 0.1f64..2.0, beta in 0.05f64..1.0, v in 0.1f64..5.0) {
        let p = ModelParams::new(d, alpha, beta, v).unwrap();
        let c = limit_constants(&p);
        prop_assert!(c.k1 > 0.0);
        prop_assert!((c.k.powf(1.0 + beta) / c.k1 - 1.0).abs() < 1e-13);
        prop_assert_eq!(c.intermediate, alpha / beta < d as f64 && (d as f64) < alpha * (1.0 + beta) / beta);
    }
}
