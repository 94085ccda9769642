//! The critical offspring law with generating function
//! `s + (1 - s)^(1+beta) / (1 + beta)`.
//!
//! For `beta = 1` this is binary branching. For `beta < 1` the law has
//! `p_1 = 0`, mean one and a tail `P(X > k) ~ C k^-(1+beta)`, so it lies in the
//! domain of attraction of a `(1 + beta)`-stable law.
//!
//! Two exact identities drive everything here:
//!
//! * `p_2 = beta / 2`, `p_{k+1} = p_k (k - 1 - beta) / (k + 1)` for `k >= 2`;
//! * `P(X > k) = |binom(beta, k)| / (1 + beta)` for `k >= 1`, with
//!   `|binom(beta, k+1)| = |binom(beta, k)| (k - beta) / (k + 1)`.
//!
//! The second one makes the tail available in closed form, so the sampler is
//! exact: a table covers `k <= cutoff`, and beyond it the survival function is
//! inverted directly.

use rand::Rng;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::numerics::special::{gamma, ln_gamma};

/// Largest offspring count the sampler will produce.
pub const MAX_OFFSPRING: u64 = 1_000_000_000_000_000;

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(invalid(format!("branching exponent beta must lie in (0, 1], got {beta}")));
    }
    Ok(())
}

/// `p_k`, evaluated from the binomial recurrence in log space with the sign of
/// `(-1)^k binom(1 + beta, k)` tracked separately.
pub fn offspring_pmf(beta: f64, k: u64) -> Result<f64> {
    check_beta(beta)?;
    Ok(match k {
        0 => 1.0 / (1.0 + beta),
        1 => 0.0,
        _ if k <= 1 << 20 => {
            // binom(a, k) = prod_{j<k} (a - j) / (j + 1), a = 1 + beta
            let a = 1.0 + beta;
            let mut log_abs = 0.0;
            let mut negative = k % 2 == 1; // the (-1)^k factor
            for j in 0..k {
                let factor = (a - j as f64) / (j as f64 + 1.0);
                if factor == 0.0 {
                    return Ok(0.0);
                }
                if factor < 0.0 {
                    negative = !negative;
                }
                log_abs += factor.abs().ln();
            }
            let value = (log_abs - a.ln()).exp();
            if negative {
                -value
            } else {
                value
            }
        }
        _ => {
            if beta == 1.0 {
                0.0
            } else {
                // Gamma(k-1-beta) / ((1+beta) Gamma(-1-beta) Gamma(k+1))
                ln_gamma_ratio(k as f64, -1.0 - beta, 1.0).exp() / ((1.0 + beta) * gamma(-1.0 - beta))
            }
        }
    })
}

/// Offspring generating function `s + (1 - s)^(1+beta) / (1 + beta)`.
pub fn offspring_gf(beta: f64, s: f64) -> Result<f64> {
    check_beta(beta)?;
    if !(0.0..1.0).contains(&s) {
        return Err(invalid(format!("generating-function argument must lie in [0, 1), got {s}")));
    }
    Ok(s + (1.0 - s).powf(1.0 + beta) / (1.0 + beta))
}

/// Exact survival function `P(X > k)`.
pub fn offspring_survival(beta: f64, k: u64) -> Result<f64> {
    check_beta(beta)?;
    Ok(survival_unchecked(beta, k as f64))
}

fn survival_unchecked(beta: f64, k: f64) -> f64 {
    if k < 1.0 {
        return beta / (1.0 + beta);
    }
    if beta == 1.0 {
        return if k < 2.0 { 0.5 } else { 0.0 };
    }
    // |binom(beta, k)| = beta Gamma(k - beta) / (Gamma(1 - beta) Gamma(k + 1))
    beta * ln_gamma_ratio(k, -beta, 1.0).exp() / (gamma(1.0 - beta) * (1.0 + beta))
}

/// `1 - sum_{k <= K} k p_k`, from the closed form
/// `K P(X > K) + sum_{j >= K} P(X > j)`, where the last sum telescopes to
/// `|binom(beta - 1, K - 1)| / (1 + beta)`.
pub fn partial_mean_gap(beta: f64, k: u64) -> Result<f64> {
    check_beta(beta)?;
    if k == 0 {
        return Ok(1.0);
    }
    if beta == 1.0 {
        return Ok(if k < 2 { 1.0 } else { 0.0 });
    }
    let kf = k as f64;
    // |binom(beta - 1, n)| = Gamma(n + 1 - beta) / (Gamma(1 - beta) Gamma(n + 1))
    let tail = ln_gamma_ratio(kf - 1.0, 1.0 - beta, 1.0).exp() / gamma(1.0 - beta) / (1.0 + beta);
    Ok(kf * survival_unchecked(beta, kf) + tail)
}

/// `ln Gamma(z + a) - ln Gamma(z + b)` without the cancellation of two large
/// log-gamma values.
pub fn ln_gamma_ratio(z: f64, a: f64, b: f64) -> f64 {
    if z < 1000.0 {
        return ln_gamma(z + a) - ln_gamma(z + b);
    }
    // ln Gamma(z + x) ~ (z + x - 1/2) ln z - z + ln(2 pi)/2
    //                   + sum_n (-1)^(n+1) B_{n+1}(x) / (n (n+1) z^n)
    let bern = |n: usize, x: f64| -> f64 {
        match n {
            2 => x * x - x + 1.0 / 6.0,
            3 => x * x * x - 1.5 * x * x + 0.5 * x,
            4 => x.powi(4) - 2.0 * x.powi(3) + x * x - 1.0 / 30.0,
            5 => x.powi(5) - 2.5 * x.powi(4) + 5.0 / 3.0 * x.powi(3) - x / 6.0,
            6 => x.powi(6) - 3.0 * x.powi(5) + 2.5 * x.powi(4) - 0.5 * x * x + 1.0 / 42.0,
            _ => unreachable!(),
        }
    };
    let mut acc = (a - b) * z.ln();
    let mut zp = 1.0;
    for n in 1..=5usize {
        zp *= z;
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        acc += sign * (bern(n + 1, a) - bern(n + 1, b)) / ((n * (n + 1)) as f64 * zp);
    }
    acc
}

/// Probabilities `p_0..p_cutoff` plus the exact remaining mass, with an
/// inversion sampler that is exact beyond the cutoff.
#[derive(Debug, Clone, Serialize)]
pub struct OffspringTable {
    beta: f64,
    cutoff: usize,
    probs: Vec<f64>,
    /// `survival[k] = P(X > k)` for `k <= cutoff`.
    #[serde(skip)]
    survival: Vec<f64>,
    tail_mass: f64,
}

impl OffspringTable {
    /// Builds the table up to `cutoff`. The exact tail sampler is always
    /// enabled, so `tail_eps` only bounds the mass the caller accepts to live
    /// outside the table; it is validated, never used to truncate.
    pub fn build(beta: f64, cutoff: usize, tail_eps: f64) -> Result<Self> {
        check_beta(beta)?;
        if cutoff < 2 {
            return Err(invalid("offspring table cutoff must be at least 2"));
        }
        if !(tail_eps > 0.0) {
            return Err(invalid("tail tolerance must be positive"));
        }
        let mut probs = Vec::with_capacity(cutoff + 1);
        probs.push(1.0 / (1.0 + beta));
        probs.push(0.0);
        let mut p = 0.5 * beta;
        probs.push(p);
        for k in 2..cutoff {
            p *= (k as f64 - 1.0 - beta) / (k as f64 + 1.0);
            probs.push(p);
        }
        let mut survival = Vec::with_capacity(cutoff + 1);
        let s0 = beta / (1.0 + beta);
        survival.push(s0);
        survival.push(s0);
        let mut c = beta; // |binom(beta, k)|
        for k in 1..cutoff {
            c *= (k as f64 - beta) / (k as f64 + 1.0);
            survival.push(c / (1.0 + beta));
        }
        let tail_mass = survival[cutoff];
        Ok(Self { beta, cutoff, probs, survival, tail_mass })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// `P(X > k)` for any `k`.
    pub fn survival(&self, k: u64) -> f64 {
        if (k as usize) <= self.cutoff {
            self.survival[k as usize]
        } else {
            survival_unchecked(self.beta, k as f64)
        }
    }

    /// Draws one offspring count.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<u64> {
        // v in (0, 1]; X = min { k : P(X > k) < v }
        let u: f64 = rng.random();
        self.invert(1.0 - u)
    }

    /// Inverse of the survival function: the smallest `k` with
    /// `P(X > k) < v`, for `v` in `(0, 1]`.
    pub fn invert(&self, v: f64) -> Result<u64> {
        if self.tail_mass < v {
            // first index with survival < v; survival is nonincreasing
            let idx = self.survival.partition_point(|&s| s >= v);
            return Ok(idx as u64);
        }
        let beta = self.beta;
        let mut lo = self.cutoff as u64; // survival(lo) >= v
        let mut hi = lo.saturating_mul(2).max(lo + 1);
        while survival_unchecked(beta, hi as f64) >= v {
            lo = hi;
            if hi >= MAX_OFFSPRING {
                return Err(Error::CapabilityLimit(format!(
                    "offspring count beyond {MAX_OFFSPRING} (survival level {v:e})"
                )));
            }
            hi = hi.saturating_mul(2).min(MAX_OFFSPRING);
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if survival_unchecked(beta, mid as f64) >= v {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(hi)
    }
}

/// Binary branching and the heavy-tailed law share this entry point.
pub fn build_offspring_sampler(beta: f64, cutoff: usize, tail_eps: f64) -> Result<OffspringTable> {
    OffspringTable::build(beta, cutoff, tail_eps)
}

pub fn sample_offspring<R: Rng + ?Sized>(table: &OffspringTable, rng: &mut R) -> Result<u64> {
    table.sample(rng)
}
