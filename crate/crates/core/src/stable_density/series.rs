//! Power series of the radial profile `p_1(rho)` of the isotropic stable
//! density.
//!
//! Small `rho` (convergent for `alpha > 1`, asymptotic for `alpha < 1`):
//!
//! ```text
//! p_1(rho) = 2^(1-d) / (alpha pi^(d/2))
//!            * sum_m (-1)^m Gamma((2m+d)/alpha) / (m! Gamma(m+d/2)) (rho/2)^(2m)
//! ```
//!
//! Large `rho` (convergent for `alpha < 1`, asymptotic for `alpha > 1`):
//!
//! ```text
//! p_1(rho) = pi^-(d/2+1) sum_{k>=1} (-1)^(k+1)/k! 2^(k alpha)
//!            Gamma(k alpha/2 + 1) Gamma((k alpha + d)/2) sin(k alpha pi/2) rho^-(k alpha + d)
//! ```
//!
//! Each term is stored as `sign * exp(log_mag + power * ln rho)` so that
//! neither the Gamma factors nor the powers overflow.

use std::f64::consts::PI;

use crate::numerics::special::ln_gamma;

const MAX_TERMS: usize = 400;

#[derive(Debug, Clone)]
pub(crate) struct Series {
    pub(crate) log_mag: Vec<f64>,
    pub(crate) sign: Vec<f64>,
    pub(crate) power: Vec<f64>,
    /// Convergent series are summed to convergence even when early terms
    /// grow; asymptotic ones stop at their smallest term.
    pub(crate) convergent: bool,
}

impl Series {
    pub(crate) fn small_rho(alpha: f64, d: f64) -> Self {
        let pref = (1.0 - d) * 2f64.ln() - alpha.ln() - 0.5 * d * PI.ln();
        let mut log_mag = Vec::with_capacity(MAX_TERMS);
        let mut sign = Vec::with_capacity(MAX_TERMS);
        let mut power = Vec::with_capacity(MAX_TERMS);
        for m in 0..MAX_TERMS {
            let mf = m as f64;
            log_mag.push(
                pref + ln_gamma((2.0 * mf + d) / alpha)
                    - ln_gamma(mf + 1.0)
                    - ln_gamma(mf + 0.5 * d)
                    - 2.0 * mf * 2f64.ln(),
            );
            sign.push(if m % 2 == 0 { 1.0 } else { -1.0 });
            power.push(2.0 * mf);
        }
        Self { log_mag, sign, power, convergent: alpha >= 1.0 }
    }

    pub(crate) fn large_rho(alpha: f64, d: f64) -> Self {
        let pref = -(0.5 * d + 1.0) * PI.ln();
        let mut log_mag = Vec::with_capacity(MAX_TERMS);
        let mut sign = Vec::with_capacity(MAX_TERMS);
        let mut power = Vec::with_capacity(MAX_TERMS);
        for k in 1..=MAX_TERMS {
            let kf = k as f64;
            let s = (0.5 * kf * alpha * PI).sin();
            // exact zeros (alpha rational) would otherwise appear as ~1e-16 noise
            let s = if s.abs() < 1e-12 { 0.0 } else { s };
            let alt = if k % 2 == 1 { 1.0 } else { -1.0 };
            log_mag.push(
                pref - ln_gamma(kf + 1.0)
                    + kf * alpha * 2f64.ln()
                    + ln_gamma(0.5 * kf * alpha + 1.0)
                    + ln_gamma(0.5 * (kf * alpha + d))
                    + s.abs().ln(),
            );
            sign.push(alt * s.signum() * if s == 0.0 { 0.0 } else { 1.0 });
            power.push(-(kf * alpha + d));
        }
        Self { log_mag, sign, power, convergent: alpha <= 1.0 }
    }

    /// Sum at `ln_rho`, or `None` when the partial sums cannot be trusted to
    /// about 1e-13 relative accuracy (truncation or cancellation).
    pub(crate) fn eval(&self, ln_rho: f64) -> Option<f64> {
        self.eval_terms(ln_rho, |_| 1.0, |_| 0.0)
    }

    /// Generic accumulation `sum sign * exp(log_mag + (power + shift) ln rho) * scale`
    /// with per-term scale and power shift; used for term-wise integrals.
    pub(crate) fn eval_terms(
        &self,
        ln_rho: f64,
        scale: impl Fn(usize) -> f64,
        shift: impl Fn(usize) -> f64,
    ) -> Option<f64> {
        let mut sum = 0.0;
        let mut abs_sum = 0.0;
        let mut prev = f64::INFINITY;
        let mut seen = 0;
        for j in 0..self.log_mag.len() {
            if self.sign[j] == 0.0 {
                continue;
            }
            let mag = (self.log_mag[j] + (self.power[j] + shift(j)) * ln_rho).exp() * scale(j).abs();
            if !mag.is_finite() {
                return None;
            }
            if !self.convergent && seen > 0 && mag > prev {
                // asymptotic series: smallest term reached
                return accept(sum, abs_sum, prev);
            }
            let t = self.sign[j] * scale(j).signum() * mag;
            sum += t;
            abs_sum += mag;
            seen += 1;
            if mag <= 1e-17 * sum.abs() && seen >= 2 {
                return accept(sum, abs_sum, mag);
            }
            prev = mag;
        }
        None
    }
}

fn accept(sum: f64, abs_sum: f64, last: f64) -> Option<f64> {
    let s = sum.abs();
    if s > 0.0 && last <= 1e-13 * s && abs_sum <= 100.0 * s {
        Some(sum)
    } else {
        None
    }
}
