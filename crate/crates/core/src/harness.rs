//! Empirical characteristic functions, space-time pairings and the
//! elementary-inequality property suite.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codifference::cross_terms;
use crate::error::{invalid, Result};
use crate::model::TimeProfile;
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcfTable {
    pub z: Vec<f64>,
    pub values: Vec<Complex64>,
    pub n: usize,
}

impl EcfTable {
    /// One standard error of the real or imaginary part is at most `1/sqrt(N)`.
    pub fn band(&self) -> f64 {
        1.0 / (self.n as f64).sqrt()
    }
}

pub const MIN_ECF_SAMPLES: usize = 100;

pub fn ecf(samples: &[f64], z: &[f64]) -> Result<EcfTable> {
    if samples.is_empty() {
        return Err(invalid("empirical characteristic function of an empty sample"));
    }
    if samples.len() < MIN_ECF_SAMPLES {
        return Err(invalid(format!("need at least {MIN_ECF_SAMPLES} samples, got {}", samples.len())));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(invalid("samples contain non-finite values"));
    }
    let n = samples.len() as f64;
    let values = z
        .par_iter()
        .map(|&zz| {
            if zz == 0.0 {
                return Complex64::new(1.0, 0.0);
            }
            let (c, s) = samples.iter().fold((0.0, 0.0), |(c, s), &x| {
                let (si, co) = (zz * x).sin_cos();
                (c + co, s + si)
            });
            Complex64::new(c / n, s / n)
        })
        .collect();
    Ok(EcfTable { z: z.to_vec(), values, n: samples.len() })
}

pub fn ecf_distance(a: &EcfTable, b: &EcfTable) -> Result<f64> {
    if a.z != b.z {
        return Err(invalid("ECF tables live on different z-grids"));
    }
    Ok(a.values.iter().zip(&b.values).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max))
}

pub fn ecf_distance_to(a: &EcfTable, charfn: impl Fn(f64) -> Complex64) -> f64 {
    a.z.iter().zip(&a.values).map(|(&z, v)| (v - charfn(z)).norm()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pairing {
    pub value: f64,
    /// The same trapezoid on every second node.
    pub coarse: f64,
    pub flagged: bool,
}

/// `int_0^1 X(t) psi(t) dt` by the trapezoid rule on the path's own grid;
/// the result is flagged if halving the grid moves it by more than
/// `rel_tol` (relative to the integral of `|X psi|`).
pub fn space_time_pairing(path: &[(f64, f64)], psi: &TimeProfile, rel_tol: f64) -> Result<Pairing> {
    psi.validate()?;
    if path.len() < 3 {
        return Err(invalid("path needs at least three points"));
    }
    let (t0, t1) = (path[0].0, path[path.len() - 1].0);
    if t0 > 1e-12 || t1 < 1.0 - 1e-9 {
        return Err(invalid(format!("path grid [{t0}, {t1}] does not cover [0, 1]")));
    }
    let trap = |step: usize| {
        let pts: Vec<(f64, f64)> = path
            .iter()
            .enumerate()
            .filter(|(i, _)| i % step == 0 || *i == path.len() - 1)
            .map(|(_, &(t, x))| (t, x * psi.psi(t)))
            .collect();
        pts.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum::<f64>()
    };
    let value = trap(1);
    let coarse = trap(2);
    let scale: f64 = path.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 * psi.psi(w[0].0)).abs().max((w[1].1 * psi.psi(w[1].0)).abs())).sum();
    Ok(Pairing { value, coarse, flagged: (value - coarse).abs() > rel_tol * scale.max(f64::MIN_POSITIVE) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub inequality: &'static str,
    pub a: f64,
    pub b: f64,
    pub beta: f64,
    pub delta: f64,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityReport {
    pub trials: usize,
    pub checks: usize,
    pub violations: Vec<Witness>,
}

impl InequalityReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// All four inequalities at one point. Each side is compared with an
/// allowance of a few ulps of the terms involved.
pub fn check_inequalities(a: f64, b: f64, beta: f64, delta: f64) -> Vec<Witness> {
    let p = 1.0 + beta;
    let mut out = Vec::new();
    let ulp = 8.0 * f64::EPSILON * (a + b).powf(p);
    let mut check = |name: &'static str, lhs: f64, rhs: f64| {
        if !(lhs <= rhs + ulp) {
            out.push(Witness { inequality: name, a, b, beta, delta, lhs, rhs });
        }
    };
    let mixed = a.powf(delta) * b.powf(p - delta);
    let (cross, _, _) = cross_terms(a, b, p);
    check("cross term nonnegative", 0.0, cross);
    check("cross term upper bound", cross, p * mixed);
    if b >= a {
        check("cross term lower bound", beta * b.powf(beta) * a, cross);
    }
    // |a-b| forms, with g = a and f = b in the codifference convention
    let (_, minus, signed) = cross_terms(b, a, p);
    check("difference term bound", minus.abs(), (3.0 + beta) * mixed);
    check("signed difference term bound", signed.abs(), p * mixed);
    out
}

pub const MIN_TRIALS: usize = 10_000;

/// Random `(a, b, beta, delta)` draws: `a, b` log-uniform over twelve
/// decades with occasional exact zeros and ties, `beta` uniform on `(0, 1)`,
/// `delta` uniform on `[beta, 1]`.
pub fn inequality_suite(n_trials: usize, stream: RngStream) -> Result<InequalityReport> {
    if n_trials < MIN_TRIALS {
        return Err(invalid(format!("the inequality suite needs at least {MIN_TRIALS} trials")));
    }
    let mut rng = stream.rng();
    let mut violations = Vec::new();
    let draw = |rng: &mut rand_chacha::ChaCha8Rng| {
        let u: f64 = rng.random();
        if u < 0.02 {
            0.0
        } else {
            10f64.powf(rng.random_range(-6.0..6.0))
        }
    };
    for _ in 0..n_trials {
        let a = draw(&mut rng);
        let b = if rng.random::<f64>() < 0.02 { a } else { draw(&mut rng) };
        let beta: f64 = rng.random_range(1e-6..1.0);
        let delta = if rng.random::<f64>() < 0.05 { beta } else { rng.random_range(beta..=1.0) };
        violations.extend(check_inequalities(a, b, beta, delta));
    }
    Ok(InequalityReport { trials: n_trials, checks: 5 * n_trials, violations })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_samples() {
        let t = ecf(&[0.0; 200], &[0.0, 0.5, 3.0]).unwrap();
        assert_eq!(ecf_distance_to(&t, |_| Complex64::new(1.0, 0.0)), 0.0);
        assert_eq!(ecf_distance(&t, &t).unwrap(), 0.0);
        assert!(ecf(&[], &[1.0]).is_err());
        assert!(ecf(&[1.0; 99], &[1.0]).is_err());
    }

    #[test]
    fn gaussian_samples_sit_in_the_clt_band() {
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = RngStream::new(17, 0).rng();
        let x: Vec<f64> = (0..100_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let z: Vec<f64> = (0..=20).map(|k| 0.2 * k as f64).collect();
        let t = ecf(&x, &z).unwrap();
        assert_eq!(t.values[0], Complex64::new(1.0, 0.0));
        assert!(ecf_distance_to(&t, |z| Complex64::new((-0.5 * z * z).exp(), 0.0)) < 4.0 * t.band());
    }

    #[test]
    fn pairing_basics() {
        let path: Vec<(f64, f64)> = (0..=100).map(|k| (k as f64 / 100.0, (k as f64 / 100.0).powi(2))).collect();
        let zero = space_time_pairing(&path, &TimeProfile::Constant { level: 0.0 }, 1e-3).unwrap();
        assert_eq!(zero.value, 0.0);
        let one = space_time_pairing(&path, &TimeProfile::Constant { level: 1.0 }, 1e-3).unwrap();
        assert!((one.value - 1.0 / 3.0).abs() < 1e-4 && !one.flagged);
        let doubled: Vec<(f64, f64)> = path.iter().map(|&(t, x)| (t, 2.0 * x)).collect();
        let two = space_time_pairing(&doubled, &TimeProfile::Constant { level: 1.0 }, 1e-3).unwrap();
        assert_eq!(two.value, 2.0 * one.value);
        assert!(space_time_pairing(&path[..50], &TimeProfile::Constant { level: 1.0 }, 1e-3).is_err());
    }

    #[test]
    fn narrowing_bump_recovers_the_point_value() {
        let path: Vec<(f64, f64)> = (0..=4000).map(|k| {
            let t = k as f64 / 4000.0;
            (t, (3.0 * t).sin())
        }).collect();
        let mut prev = f64::INFINITY;
        for w in [0.1, 0.03, 0.01] {
            let v = space_time_pairing(&path, &TimeProfile::Bump { center: 0.4, width: w }, 1e-3).unwrap();
            let err = (v.value - 1.2f64.sin()).abs();
            assert!(err < prev);
            prev = err;
        }
        assert!(prev < 1e-3);
    }

    #[test]
    fn arithmetic_examples() {
        assert!(check_inequalities(0.0, 2.0, 0.5, 0.7).is_empty());
        let (cross, _, _) = cross_terms(1.0, 1.0, 1.5);
        assert!((cross - 0.828_427_124_746_190).abs() < 1e-12 && cross <= 1.5);
        assert!(check_inequalities(1.0, 1.0, 0.5, 1.0).is_empty());
    }

    #[test]
    fn suite_is_clean() {
        let r = inequality_suite(20_000, RngStream::new(5, 0)).unwrap();
        assert!(r.passed(), "{:?}", &r.violations[..r.violations.len().min(3)]);
        assert!(inequality_suite(10, RngStream::new(5, 0)).is_err());
    }
}
