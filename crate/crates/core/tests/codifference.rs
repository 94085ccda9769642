use std::f64::consts::PI;

use branchstable::codifference::*;
use branchstable::numerics::special::sphere_area;
use branchstable::ModelParams;
use proptest::prelude::*;

/// `int_0^1 (4 pi u)^(-d/2) exp(-rho^2 / 4u) du`, computed in `ln u`.
fn heat_kernel_integral(d: f64, rho: f64) -> f64 {
    let (lo, n) = (-40.0f64, 4000);
    let h = -lo / n as f64;
    (0..n)
        .map(|k| {
            let u = (lo + (k as f64 + 0.5) * h).exp();
            (4.0 * PI * u).powf(-0.5 * d) * (-rho * rho / (4.0 * u)).exp() * u * h
        })
        .sum()
}

#[test]
fn regime_one_constant_from_first_order_expansion() {
    // For T -> infinity with query (0, 1, 2, 3) and alpha = 2, the far field is
    // f ~ (t - s) p_T(0) and A ~ (1+beta) g^beta f, so
    //   T^(d/2) D+ -> sqrt(1 + tan^2) (1+beta) (t-s) (4 pi)^(-d/2) |S^(d-1)|
    //                 int_0^1 dr int rho^(d-1) G(1 - r, rho)^beta d rho,
    // and G(tau, rho) = tau^(1-d/2) G(1, rho / sqrt(tau)) reduces the r-integral
    // to the factor 1 / (1 + (1 - d/2) beta + d/2).
    let (d, beta) = (5.0, 0.5);
    let (lo, hi, n) = (-15.0f64, 3.5f64, 3000);
    let h = (hi - lo) / n as f64;
    let i1: f64 = (0..n)
        .map(|k| {
            let rho = (lo + (k as f64 + 0.5) * h).exp();
            rho.powf(d) * heat_kernel_integral(d, rho).powf(beta) * h
        })
        .sum();
    let r_factor = 1.0 / (1.0 + (1.0 - 0.5 * d) * beta + 0.5 * d);
    let tan = (0.5 * PI * (1.0 + beta)).tan();
    let limit = (1.0 + tan * tan).sqrt() * (1.0 + beta) * (4.0 * PI).powf(-0.5 * d) * sphere_area(d) * i1 * r_factor;

    let p = ModelParams::new(5, 2.0, 0.5, 1.0).unwrap();
    let q = CodiffQuery::new(0.0, 1.0, 2.0, 3.0, 1.0, 1.0).unwrap();
    let big_t = 1e4;
    let v = codifference(&p, big_t, &q, &CodiffQuadrature::default()).unwrap();
    let scaled = v.d_plus * big_t.powf(2.5);
    assert!((scaled / limit - 1.0).abs() < 0.01, "{scaled} vs {limit}");
}

#[test]
fn homogeneity_and_zero_arguments() {
    let p = ModelParams::new(3, 1.2, 0.45, 1.0).unwrap();
    let quad = CodiffQuadrature::default();
    let base = codifference(&p, 50.0, &CodiffQuery::new(0.2, 1.0, 2.0, 3.0, 1.0, 1.0).unwrap(), &quad).unwrap();
    let doubled = codifference(&p, 50.0, &CodiffQuery::new(0.2, 1.0, 2.0, 3.0, 2.0, 2.0).unwrap(), &quad).unwrap();
    assert!((doubled.d_plus / base.d_plus - 2f64.powf(1.45)).abs() < 1e-9);
    assert!(base.d_plus > 0.0 && base.d_minus > 0.0);
    let zero = codifference(&p, 50.0, &CodiffQuery::new(0.2, 1.0, 2.0, 3.0, 0.0, 1.0).unwrap(), &quad).unwrap();
    assert_eq!((zero.d_plus, zero.d_minus), (0.0, 0.0));
    assert!(CodiffQuery::new(1.0, 1.0, 2.0, 3.0, 1.0, 1.0).is_err());
    assert!(CodiffQuery::new(0.0, 1.0, 2.0, 3.0, f64::NAN, 1.0).is_err());
}

#[test]
fn decay_is_faster_than_any_weaker_envelope() {
    let p = ModelParams::new(3, 1.2, 0.45, 1.0).unwrap();
    let q = CodiffQuery::new(0.0, 1.0, 2.0, 3.0, 1.0, 1.0).unwrap();
    let ts = log_grid(1e2, 1e4, 5);
    let r = codiff_sweep(&p, &q, &ts, &CodiffQuadrature::default()).unwrap();
    assert_eq!(r.regime, Regime::Two);
    assert!(r.d_plus.windows(2).all(|w| w[1] < w[0]));
    assert!(r.d_minus.windows(2).all(|w| w[1] < w[0]));
    assert!(r.envelopes.iter().all(|e| e.holds), "{:?}", r.envelopes);
}

proptest! {
    #[test]
    fn cross_terms_match_direct_formulas(f in 0.0f64..10.0, g in 0.0f64..10.0, beta in 0.01f64..1.0) {
        let p = 1.0 + beta;
        let (a, b, c) = cross_terms(f, g, p);
        let scale = (f + g).powf(p).max(f64::MIN_POSITIVE);
        prop_assert!((a - ((f + g).powf(p) - f.powf(p) - g.powf(p))).abs() <= 1e-12 * scale);
        prop_assert!((b - ((g - f).abs().powf(p) - f.powf(p) - g.powf(p))).abs() <= 1e-12 * scale);
        let signed = (g - f).abs().powf(p) * (g - f).signum();
        let c_direct = if g == f { f.powf(p) - g.powf(p) } else { signed - g.powf(p) + f.powf(p) };
        prop_assert!((c - c_direct).abs() <= 1e-12 * scale);
        let (a2, b2, c2) = cross_terms(g, f, p);
        prop_assert_eq!(a, a2);
        prop_assert_eq!(b, b2);
        prop_assert_eq!(c, -c2);
        prop_assert!(a >= 0.0 && b <= 0.0);
    }

    #[test]
    fn kappa_is_continuous_and_bounded(d in 0.5f64..10.0, alpha in 0.1f64..1.99, beta in 0.01f64..1.0) {
        let (k, regime) = kappa_formula(d, alpha, beta);
        let r = d / alpha;
        let star = d / (d + alpha);
        match regime {
            Regime::One => prop_assert_eq!(k, r),
            Regime::Two => prop_assert!(k <= r && beta <= star),
        }
        prop_assert_eq!(kappa_formula(d, alpha, star), (r, Regime::Two));
        let below = kappa_formula(d, alpha, star * (1.0 - 1e-9)).0;
        prop_assert!((below - r).abs() < 1e-8 * r);
        if alpha / beta < d {
            prop_assert!(k > 0.0);
        }
    }

    #[test]
    fn gamma_plane_agrees_with_kappa(alpha in 0.1f64..1.99, beta in 0.02f64..0.98, x in 0.01f64..0.99) {
        // d inside the intermediate range, expressed through gamma = d/alpha - 1
        let (lo, hi) = (alpha / beta, alpha * (1.0 + beta) / beta);
        let d = lo + x * (hi - lo);
        let gamma = d / alpha - 1.0;
        let (k_plane, region) = gamma_plane_classify(gamma, beta).unwrap();
        let (k, regime) = kappa_formula(d, alpha, beta);
        prop_assert!((k_plane - k).abs() < 1e-12 * k);
        match region {
            PlaneRegion::First => prop_assert_eq!(regime, Regime::One),
            PlaneRegion::Second => prop_assert_eq!(regime, Regime::Two),
            PlaneRegion::SeparatingCurve => {}
        }
    }
}
