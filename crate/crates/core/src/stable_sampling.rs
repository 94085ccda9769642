//! Exact samplers for the stable laws used by the particle system and the
//! limit process.
//!
//! * one-sided (positive) stable variates with Laplace transform
//!   `exp(-lambda^a)`, `0 < a < 1` (Kanter's representation);
//! * totally skewed stable variates with characteristic function
//!   `exp{-s^a |z|^a (1 - i sgn(z) tan(pi a / 2))}`, `1 < a <= 2`
//!   (Chambers–Mallows–Stuck in the Weron form);
//! * isotropic `alpha`-stable increments in R^d with characteristic function
//!   `exp(-t |z|^alpha)`, built by subordinating a Gaussian vector to a
//!   one-sided `alpha/2`-stable variate.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Totally right-skewed stable law with index in (1, 2] and zero shift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkewedStableSpec {
    index: f64,
    scale: f64,
}

impl SkewedStableSpec {
    pub fn new(index: f64, scale: f64) -> Result<Self> {
        if !(index > 1.0 && index <= 2.0) {
            return Err(invalid(format!("stable index must lie in (1, 2], got {index}")));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(invalid(format!("stable scale must be positive, got {scale}")));
        }
        Ok(Self { index, scale })
    }

    pub fn index(&self) -> f64 {
        self.index
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Skewness parameter; always +1.
    pub fn skewness(&self) -> f64 {
        1.0
    }

    /// Log of the target characteristic function at `z`.
    pub fn log_charfn(&self, z: f64) -> Complex64 {
        skewed_log_charfn(self.index, self.scale.powf(self.index), z)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        sample_skewed_stable(self, rng)
    }
}

/// `-c |z|^a (1 - i sgn(z) tan(pi a / 2))`, the log characteristic function of
/// a totally skewed stable law whose scale raised to the index is `c`.
pub fn skewed_log_charfn(index: f64, c: f64, z: f64) -> Complex64 {
    if z == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let t = skew_tan(index);
    let m = c * z.abs().powf(index);
    Complex64::new(-m, m * z.signum() * t)
}

/// `tan(pi a / 2)`, returned as exactly zero at `a = 2`.
pub fn skew_tan(index: f64) -> f64 {
    if index == 2.0 {
        0.0
    } else {
        (FRAC_PI_2 * index).tan()
    }
}

/// Positive stable variate with Laplace transform `exp(-lambda^a)`.
pub fn sample_one_sided_stable<R: Rng + ?Sized>(a: f64, rng: &mut R) -> Result<f64> {
    if !(a > 0.0 && a < 1.0) {
        return Err(invalid(format!("one-sided stable index must lie in (0, 1), got {a}")));
    }
    Ok(one_sided_unchecked(a, rng))
}

#[inline]
pub(crate) fn one_sided_unchecked<R: Rng + ?Sized>(a: f64, rng: &mut R) -> f64 {
    loop {
        let u = PI * open01(rng);
        let w: f64 = Exp1.sample(rng);
        let s1 = (a * u).sin() / u.sin().powf(1.0 / a);
        let s2 = (((1.0 - a) * u).sin() / w).powf((1.0 - a) / a);
        let x = s1 * s2;
        // Underflow for extreme (u, w) pairs is the only way to hit zero.
        if x > 0.0 && x.is_finite() {
            return x;
        }
    }
}

#[inline]
fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Totally skewed stable variate for `spec`.
pub fn sample_skewed_stable<R: Rng + ?Sized>(spec: &SkewedStableSpec, rng: &mut R) -> f64 {
    spec.scale * standard_skewed_unchecked(spec.index, rng)
}

/// Unit-scale totally skewed variate, `1 < a <= 2`.
#[inline]
pub(crate) fn standard_skewed_unchecked<R: Rng + ?Sized>(a: f64, rng: &mut R) -> f64 {
    let t = skew_tan(a);
    let b = t.atan() / a;
    let s = (1.0 + t * t).powf(0.5 / a);
    loop {
        let v = PI * (open01(rng) - 0.5);
        let w: f64 = Exp1.sample(rng);
        let x = s * (a * (v + b)).sin() / v.cos().powf(1.0 / a)
            * ((v - a * (v + b)).cos() / w).powf((1.0 - a) / a);
        if x.is_finite() {
            return x;
        }
    }
}

/// Increment of the standard isotropic alpha-stable Lévy process over a
/// duration `t` in dimension `dim`.
pub fn sample_isotropic_increment<R: Rng + ?Sized>(
    alpha: f64,
    t: f64,
    dim: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let law = IsotropicStable::new(alpha, dim)?;
    if !(t > 0.0) {
        return Err(invalid(format!("increment duration must be positive, got {t}")));
    }
    let mut out = vec![0.0; dim];
    law.fill_increment(t, &mut out, rng);
    Ok(out)
}

/// Isotropic alpha-stable motion in R^d, characteristic function
/// `exp(-t |z|^alpha)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsotropicStable {
    alpha: f64,
    dim: usize,
}

impl IsotropicStable {
    pub fn new(alpha: f64, dim: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(invalid(format!("stable motion index must lie in (0, 2], got {alpha}")));
        }
        if dim == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        Ok(Self { alpha, dim })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Writes an increment over duration `t > 0` into `out` (length `dim`).
    #[inline]
    pub fn fill_increment<R: Rng + ?Sized>(&self, t: f64, out: &mut [f64], rng: &mut R) {
        debug_assert_eq!(out.len(), self.dim);
        let variance = if self.alpha == 2.0 {
            2.0 * t
        } else {
            2.0 * one_sided_unchecked(0.5 * self.alpha, rng) * t.powf(2.0 / self.alpha)
        };
        let sd = variance.sqrt();
        for x in out.iter_mut() {
            let n: f64 = StandardNormal.sample(rng);
            *x = sd * n;
        }
    }

    /// Adds an increment over duration `t` to `position` in place.
    #[inline]
    pub fn advance<R: Rng + ?Sized>(&self, t: f64, position: &mut [f64], rng: &mut R) {
        let variance = if self.alpha == 2.0 {
            2.0 * t
        } else {
            2.0 * one_sided_unchecked(0.5 * self.alpha, rng) * t.powf(2.0 / self.alpha)
        };
        let sd = variance.sqrt();
        for x in position.iter_mut() {
            let n: f64 = StandardNormal.sample(rng);
            *x += sd * n;
        }
    }
}
