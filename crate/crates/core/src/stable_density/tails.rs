//! Tail integrals `I_q(y) = int_y^inf s^q p_1(s) ds` of the radial profile.
//!
//! One table serves three purposes: `q = d - alpha - 1` gives the
//! time-integrated kernel, `q = 0` the one-dimensional survival function and
//! `q = d - 1` the radial survival function.
//!
//! The table holds `ln I_q` on a uniform grid in `ln y` and is filled by
//! cumulative Gauss–Legendre integration from the top down. Outside the grid
//! the series of `p_1` are integrated term by term.

use super::series::Series;
use crate::numerics::quadrature::GaussLegendre;
use crate::numerics::UniformTable;

pub(crate) const LN_Y_MIN: f64 = -14.0;
const H: f64 = 0.005;

#[derive(Debug, Clone)]
pub struct TailIntegral {
    q: f64,
    table: UniformTable,
    /// `I_q` at the bottom node, kept exactly (the table holds logs).
    i_min: f64,
    y_min: f64,
    y_max: f64,
    small: Series,
    large: Series,
}

impl TailIntegral {
    pub(crate) fn build(
        q: f64,
        ln_y_max: f64,
        p1: impl Fn(f64) -> f64,
        small: &Series,
        large: &Series,
        top: Option<f64>,
    ) -> Self {
        let n = ((ln_y_max - LN_Y_MIN) / H).ceil() as usize;
        let ln_y_max = LN_Y_MIN + n as f64 * H;
        let y_max = ln_y_max.exp();
        let top = top.unwrap_or_else(|| large_tail(large, q, ln_y_max).unwrap_or(0.0));
        let rule = GaussLegendre::new(8);
        let mut vals = vec![0.0; n + 1];
        let mut acc = top;
        vals[n] = acc;
        for i in (0..n).rev() {
            let a = LN_Y_MIN + i as f64 * H;
            acc += rule.integrate(a, a + H, |l| {
                let s = l.exp();
                s.powf(q + 1.0) * p1(s)
            });
            vals[i] = acc;
        }
        let i_min = vals[0];
        // The topmost values can underflow for light tails; floor the logs.
        let logs = vals.iter().map(|&v| if v > 0.0 { v.ln() } else { -745.0 }).collect();
        Self {
            q,
            table: UniformTable::new(LN_Y_MIN, H, logs),
            i_min,
            y_min: LN_Y_MIN.exp(),
            y_max,
            small: small.clone(),
            large: large.clone(),
        }
    }

    pub fn power(&self) -> f64 {
        self.q
    }

    pub fn eval(&self, y: f64) -> f64 {
        if y >= self.y_max {
            if self.large.sign.iter().all(|&s| s == 0.0) {
                // light (Gaussian) tail: extrapolate the log linearly in y^2
                let l = self.table.values[self.table.values.len() - 1];
                return (l - 0.25 * (y * y - self.y_max * self.y_max)).exp();
            }
            return large_tail(&self.large, self.q, y.ln()).unwrap_or(0.0);
        }
        if y <= self.y_min {
            return self.i_min + self.small_piece(y);
        }
        self.table.eval(y.ln()).exp()
    }

    /// `int_y^{y_min} s^q p_1(s) ds` from the small-argument series.
    fn small_piece(&self, y: f64) -> f64 {
        let ly = y.ln();
        let lm = self.y_min.ln();
        let mut total = 0.0;
        for j in 0..self.small.log_mag.len().min(60) {
            let e = self.q + 1.0 + self.small.power[j];
            let c = self.small.sign[j] * self.small.log_mag[j].exp();
            let t = if e.abs() < 1e-12 {
                c * (lm - ly)
            } else {
                c * ((e * lm).exp() - (e * ly).exp()) / e
            };
            total += t;
            if t.abs() <= 1e-17 * total.abs() {
                break;
            }
        }
        total
    }

    /// Value of the integral over the whole half-line, when it converges at 0
    /// (`q > -1`).
    pub fn at_zero(&self) -> Option<f64> {
        if self.q <= -1.0 {
            return None;
        }
        let e0 = self.q + 1.0;
        let lm = self.y_min.ln();
        let mut total = self.i_min;
        for j in 0..self.small.log_mag.len().min(60) {
            let e = e0 + self.small.power[j];
            let t = self.small.sign[j] * (self.small.log_mag[j] + e * lm).exp() / e;
            total += t;
            if t.abs() <= 1e-17 * total.abs() {
                break;
            }
        }
        Some(total)
    }
}

/// `int_Y^inf s^q p_1(s) ds` from the large-argument series.
fn large_tail(large: &Series, q: f64, ln_y: f64) -> Option<f64> {
    if large.sign.iter().all(|&s| s == 0.0) {
        return Some(0.0);
    }
    // s^q * s^-(k alpha + d) integrates to Y^(q + 1 + power) / -(q + 1 + power)
    large.eval_terms(ln_y, |j| 1.0 / -(q + 1.0 + large.power[j]), |_| q + 1.0)
}
