//! Thin wrappers over `puruspe` special functions, with the domain extensions
//! this crate needs (negative Bessel order, large arguments).

use std::f64::consts::PI;

pub fn gamma(x: f64) -> f64 {
    puruspe::gamma(x)
}

/// ln |Gamma(x)|. Below the overflow point of Gamma the log of the direct
/// value is more accurate than the library's log-gamma; above it a Stirling
/// series is exact to rounding.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 170.0 {
        return gamma(x).abs().ln();
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv
        * (1.0 / 12.0
            - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0 - inv2 / 1188.0))));
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * PI).ln() + series
}

pub fn erfc(x: f64) -> f64 {
    puruspe::erfc(x)
}

/// Upper incomplete gamma function Γ(a, x), x > 0. Negative non-integer `a`
/// is reached through Γ(a, x) = (Γ(a+1, x) - x^a e^-x) / a.
pub fn upper_gamma(a: f64, x: f64) -> f64 {
    if a > 0.0 {
        return puruspe::gammq(a, x) * gamma(a);
    }
    (upper_gamma(a + 1.0, x) - (a * x.ln() - x).exp()) / a
}

/// Surface area of the unit sphere in R^d, with d allowed to be real.
pub fn sphere_area(d: f64) -> f64 {
    2.0 * PI.powf(0.5 * d) / gamma(0.5 * d)
}

/// Bessel function of the first kind J_nu(x) for real nu > -1 and x >= 0.
pub fn bessel_j(nu: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if nu == 0.0 { 1.0 } else { 0.0 };
    }
    if (nu + 0.5).abs() < 1e-15 {
        return (2.0 / (PI * x)).sqrt() * x.cos();
    }
    if (nu - 0.5).abs() < 1e-15 {
        return (2.0 / (PI * x)).sqrt() * x.sin();
    }
    if x > 100.0 + 10.0 * nu * nu {
        return hankel_asymptotic_j(nu, x);
    }
    if nu >= 0.0 {
        puruspe::Jnu_Ynu(nu, x).0
    } else {
        // J_{-mu} = cos(mu pi) J_mu - sin(mu pi) Y_mu
        let mu = -nu;
        let (j, y) = puruspe::Jnu_Ynu(mu, x);
        (mu * PI).cos() * j - (mu * PI).sin() * y
    }
}

fn hankel_asymptotic_j(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let omega = x - 0.5 * nu * PI - 0.25 * PI;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    for k in 1..12 {
        let kf = k as f64;
        term *= (mu - (2.0 * kf - 1.0).powi(2)) / (kf * 8.0 * x);
        if k % 2 == 1 {
            q += if (k / 2) % 2 == 0 { term } else { -term };
        } else {
            p += if (k / 2) % 2 == 0 { term } else { -term };
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    (2.0 / (PI * x)).sqrt() * (p * omega.cos() - q * omega.sin())
}
