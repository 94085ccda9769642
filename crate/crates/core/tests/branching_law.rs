use branchstable::branching_law::*;
use branchstable::numerics::fit::linear_fit;
use branchstable::numerics::special::gamma;
use branchstable::RngStream;
use proptest::prelude::*;

#[test]
fn table_mass_is_one_at_a_million() {
    for beta in [0.3, 0.5, 0.8] {
        let t = OffspringTable::build(beta, 1_000_000, 1e-3).unwrap();
        // compensated, smallest terms first
        let (mut sum, mut comp) = (t.tail_mass(), 0.0);
        for &p in t.probs().iter().rev() {
            let s = sum + p;
            comp += if sum.abs() >= p.abs() { (sum - s) + p } else { (p - s) + sum };
            sum = s;
        }
        let total = sum + comp;
        assert!((total - 1.0).abs() < 1e-12, "{beta}: {total}");
    }
}

#[test]
fn partial_mean_gap_matches_direct_summation() {
    for beta in [0.3, 0.5, 0.8] {
        let t = OffspringTable::build(beta, 1_000_000, 1e-3).unwrap();
        let mut mean = 0.0;
        let mut last_gap = 1.0;
        for (k, &p) in t.probs().iter().enumerate() {
            mean += k as f64 * p;
            if [10usize, 1000, 100_000].contains(&k) {
                let gap = partial_mean_gap(beta, k as u64).unwrap();
                assert!(((1.0 - mean) / gap - 1.0).abs() < 1e-8, "beta {beta}, K {k}: {} vs {gap}", 1.0 - mean);
                assert!(gap < last_gap);
                last_gap = gap;
            }
        }
    }
}

#[test]
fn partial_mean_gap_at_a_million() {
    // gap ~ (1+beta)/beta * C K^-beta with P(X > k) ~ C k^-(1+beta),
    // C = beta / ((1+beta) Gamma(1-beta))
    for beta in [0.3, 0.5, 0.8] {
        let gap = partial_mean_gap(beta, 1_000_000).unwrap();
        let asym = 1e6f64.powf(-beta) / gamma(1.0 - beta);
        assert!((gap / asym - 1.0).abs() < 1e-4, "{beta}: {gap} vs {asym}");
        if beta >= 0.5 {
            assert!(gap < 1e-3);
        }
    }
    // below beta = 1/2 the heavy tail keeps the gap above 1e-3 at this K
    assert!(partial_mean_gap(0.3, 1_000_000).unwrap() > 1e-3);
}

#[test]
fn truncated_generating_function_matches_closed_form() {
    let k0 = 1_000_000;
    for beta in [0.3, 0.5, 0.8, 1.0] {
        let t = OffspringTable::build(beta, k0, 1e-3).unwrap();
        for i in 1..=9 {
            let s = i as f64 / 10.0;
            let mut acc = 0.0;
            let mut sk = 1.0;
            for &p in t.probs() {
                acc += p * sk;
                sk *= s;
            }
            // the omitted terms are at most s^(K0+1) P(X > K0)
            let bound = sk * t.tail_mass();
            let exact = offspring_gf(beta, s).unwrap();
            assert!((acc - exact).abs() <= 1e-8 + bound, "beta {beta}, s {s}: {acc} vs {exact}");
        }
    }
}

#[test]
fn scaled_pmf_converges_monotonically() {
    for beta in [0.3, 0.5, 0.8] {
        let limit = 1.0 / ((1.0 + beta) * gamma(-1.0 - beta));
        let ks: Vec<u64> = (0..=12).map(|i| (1e3 * 10f64.powf(i as f64 / 4.0)).round() as u64).collect();
        let scaled: Vec<f64> =
            ks.iter().map(|&k| (k as f64).powf(2.0 + beta) * offspring_pmf(beta, k).unwrap()).collect();
        let dist: Vec<f64> = scaled.iter().map(|v| (v - limit).abs()).collect();
        assert!(dist.windows(2).all(|w| w[1] < w[0]), "{beta}: {scaled:?}");
        assert!(dist[dist.len() - 1] / limit < 1e-5);
        assert!(limit > 0.0);
    }
}

#[test]
fn empirical_tail_slope() {
    for (i, beta) in [0.3, 0.5, 0.8].into_iter().enumerate() {
        let t = OffspringTable::build(beta, 100_000, 1e-3).unwrap();
        let mut rng = RngStream::new(2024, i as u64).rng();
        let n = 10_000_000;
        let mut draws: Vec<u64> = (0..n).map(|_| t.sample(&mut rng).unwrap()).collect();
        draws.sort_unstable();
        // fit from k = 10 up to where at least 50 draws remain above k
        let count_above = |k: f64| n - draws.partition_point(|&x| (x as f64) <= k);
        let mut ks = vec![10.0];
        while count_above(ks[ks.len() - 1] * 10f64.powf(0.125)) >= 50 {
            ks.push(ks[ks.len() - 1] * 10f64.powf(0.125));
        }
        assert!(ks.len() >= 9, "beta {beta}: fit range below one decade");
        let surv: Vec<f64> = ks.iter().map(|&k| count_above(k) as f64 / n as f64).collect();
        let x: Vec<f64> = ks.iter().map(|k| k.ln()).collect();
        let y: Vec<f64> = surv.iter().map(|s| s.ln()).collect();
        let slope = linear_fit(&x, &y).slope;
        eprintln!("beta {beta}: tail slope {slope:.4} over k in [10, {:.0}]", ks[ks.len() - 1]);
        assert!((slope / -(1.0 + beta) - 1.0).abs() < 0.1, "{beta}: {slope}");
    }
}

#[test]
fn empirical_mean_is_one() {
    let t = OffspringTable::build(0.5, 100_000, 1e-3).unwrap();
    let mut rng = RngStream::new(7, 1).rng();
    let n = 1_000_000;
    let draws: Vec<f64> = (0..n).map(|_| t.sample(&mut rng).unwrap() as f64).collect();
    let mean = draws.iter().sum::<f64>() / n as f64;
    let sd = (draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    assert!((mean - 1.0).abs() < 3.0 * sd / (n as f64).sqrt(), "{mean} +- {}", sd / (n as f64).sqrt());
}

proptest! {
    #[test]
    fn pmf_recurrence_and_nonnegativity(beta in 0.01f64..1.0, k in 2u64..5000) {
        let p = offspring_pmf(beta, k).unwrap();
        let q = offspring_pmf(beta, k + 1).unwrap();
        prop_assert!(p >= 0.0 && q >= 0.0);
        let r = (k as f64 - 1.0 - beta) / (k as f64 + 1.0);
        prop_assert!((q - p * r).abs() <= 1e-12 * p);
        prop_assert_eq!(offspring_pmf(beta, 1).unwrap(), 0.0);
    }

    #[test]
    fn survival_steps_by_the_pmf(beta in 0.01f64..0.99, k in 1u64..100_000) {
        let a = offspring_survival(beta, k).unwrap();
        let b = offspring_survival(beta, k + 1).unwrap();
        let p = offspring_pmf(beta, k + 1).unwrap();
        prop_assert!(((a - b) / p - 1.0).abs() < 1e-9);
    }

    #[test]
    fn generating_function_is_critical(beta in 0.01f64..1.0, s in 0.0f64..0.999) {
        let g = offspring_gf(beta, s).unwrap();
        prop_assert!(g >= s && g <= 1.0);
        // g'(s) = 1 - (1-s)^beta
        let h = 1e-6;
        let d = (offspring_gf(beta, s + h).unwrap() - offspring_gf(beta, s).unwrap()) / h;
        prop_assert!((d - (1.0 - (1.0 - s).powf(beta))).abs() < 1e-4);
    }
}
