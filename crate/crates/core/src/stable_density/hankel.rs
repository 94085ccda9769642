//! Radial Fourier inversion in R^d with a real dimension parameter:
//!
//! ```text
//! q(rho) = (2 pi)^(-d/2) rho^(1-d/2) int_0^inf f(k) k^(d/2) J_{d/2-1}(k rho) dk
//! ```
//!
//! is the density at distance `rho` of a radial law with characteristic
//! function `f(|z|)`. The oscillatory integral is split at the approximate
//! Bessel zeros and the alternating panel sums are accelerated with Wynn's
//! epsilon algorithm.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numerics::accel::wynn_epsilon;
use crate::numerics::quadrature::adaptive;
use crate::numerics::special::{bessel_j, gamma};

pub fn radial_inverse<F: Fn(f64) -> f64>(
    d: f64,
    rho: f64,
    f: F,
    k_max: f64,
    rel_tol: f64,
) -> Result<(f64, f64)> {
    let nu = 0.5 * d - 1.0;
    if rho == 0.0 {
        let r = adaptive(|k| f(k) * k.powf(d - 1.0), 0.0, k_max, 1e-300, 0.01 * rel_tol, 4000);
        let c = (2.0 * PI).powf(-0.5 * d) / (2f64.powf(nu) * gamma(0.5 * d));
        if !r.converged {
            return Err(Error::NonConvergence { what: "radial inversion at the origin".into(), error_estimate: r.error * c });
        }
        return Ok((c * r.value, c * r.error));
    }
    let pref = (2.0 * PI).powf(-0.5 * d) * rho.powf(1.0 - 0.5 * d);
    let g = |k: f64| f(k) * k.powf(0.5 * d) * bessel_j(nu, k * rho);

    let mut partial = Vec::new();
    let mut panels: Vec<f64> = Vec::new();
    let mut sum = 0.0;
    let mut err = 0.0;
    let mut abs_sum = 0.0;
    let mut scale: f64 = 0.0;
    let mut a = 0.0;
    let mut last_wynn: Option<f64> = None;
    let mut agree = 0;
    let mut n = 1usize;
    loop {
        let zero = (n as f64 + 0.5 * nu - 0.25) * PI / rho;
        let b = zero.min(k_max);
        let r = adaptive(&g, a, b, 1e-16 * scale.max(1e-300), 1e-14, 200);
        sum += r.value;
        err += r.error;
        abs_sum += r.value.abs();
        scale = scale.max(r.value.abs());
        panels.push(r.value);
        partial.push(sum);
        if b >= k_max {
            break;
        }
        // Once panel magnitudes decay, extrapolate the alternating sums.
        let m = panels.len();
        if m >= 8 && panels[m - 1].abs() < panels[m - 2].abs() && panels[m - 2].abs() < panels[m - 3].abs() {
            let window = &partial[m.saturating_sub(16)..];
            let (w, _) = wynn_epsilon(window);
            if let Some(prev) = last_wynn {
                if (w - prev).abs() <= 1e-3 * rel_tol * w.abs() {
                    agree += 1;
                    if agree >= 3 {
                        let e = err + (w - prev).abs() + 1e-16 * abs_sum;
                        return finish(pref, w, e, rel_tol);
                    }
                } else {
                    agree = 0;
                }
            }
            last_wynn = Some(w);
        }
        a = b;
        n += 1;
    }
    finish(pref, sum, err + 1e-16 * abs_sum, rel_tol)
}

fn finish(pref: f64, value: f64, err: f64, rel_tol: f64) -> Result<(f64, f64)> {
    if err > rel_tol * value.abs() && err > 1e-300 {
        return Err(Error::NonConvergence {
            what: "radial Fourier inversion".into(),
            error_estimate: pref * err,
        });
    }
    Ok((pref * value, pref * err))
}
