//! Model parameters and the registered test functions.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::numerics::special::erfc;

/// `(d, alpha, beta, V)`; the initial intensity is Lebesgue measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub d: usize,
    pub alpha: f64,
    pub beta: f64,
    /// Branching rate.
    pub v: f64,
}

impl ModelParams {
    pub fn new(d: usize, alpha: f64, beta: f64, v: f64) -> Result<Self> {
        let p = Self { d, alpha, beta, v };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(invalid("dimension d must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha <= 2.0) {
            return Err(invalid(format!("alpha must lie in (0, 2], got {}", self.alpha)));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(invalid(format!("beta must lie in (0, 1], got {}", self.beta)));
        }
        if !(self.v >= 0.0 && self.v.is_finite()) {
            return Err(invalid(format!("branching rate V must be nonnegative, got {}", self.v)));
        }
        Ok(())
    }

    pub fn dim(&self) -> f64 {
        self.d as f64
    }

    /// `alpha/beta < d < alpha(1+beta)/beta`.
    pub fn is_intermediate(&self) -> bool {
        intermediate(self.dim(), self.alpha, self.beta)
    }

    pub fn require_intermediate(&self) -> Result<()> {
        if self.is_intermediate() {
            Ok(())
        } else {
            Err(invalid(format!(
                "intermediate-dimension condition alpha/beta < d < alpha(1+beta)/beta violated: {} < {} < {} is false",
                self.alpha / self.beta,
                self.d,
                self.alpha * (1.0 + self.beta) / self.beta
            )))
        }
    }

    /// Exponent of the norming `F_T`, equal to the self-similarity index `H`.
    pub fn norming_exponent(&self) -> f64 {
        norming_exponent(self.dim(), self.alpha, self.beta)
    }

    pub fn self_similarity_index(&self) -> f64 {
        self.norming_exponent()
    }

    pub fn norming(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(invalid(format!("scaling parameter T must be positive, got {t}")));
        }
        Ok(t.powf(self.norming_exponent()))
    }

    /// `K_1 = -V/(1+beta) cos(pi (1+beta)/2)`.
    pub fn k1(&self) -> f64 {
        -self.v / (1.0 + self.beta) * (0.5 * PI * (1.0 + self.beta)).cos()
    }

    /// `K = K_1^(1/(1+beta))`.
    pub fn k(&self) -> f64 {
        self.k1().powf(1.0 / (1.0 + self.beta))
    }
}

pub fn intermediate(d: f64, alpha: f64, beta: f64) -> bool {
    alpha / beta < d && d < alpha * (1.0 + beta) / beta
}

pub fn norming_exponent(d: f64, alpha: f64, beta: f64) -> f64 {
    (2.0 + beta - d / alpha * beta) / (1.0 + beta)
}

/// Gaussian bump `A exp(-|x - c|^2 / (2 w^2))`, the only registered shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    center: Vec<f64>,
    width: f64,
    amplitude: f64,
}

impl TestFunction {
    pub fn gaussian(center: Vec<f64>, width: f64, amplitude: f64) -> Result<Self> {
        if center.is_empty() {
            return Err(invalid("test function needs a center in R^d, d >= 1"));
        }
        if !(width > 0.0 && width.is_finite()) {
            return Err(invalid(format!("test function width must be positive, got {width}")));
        }
        if !(amplitude >= 0.0 && amplitude.is_finite()) {
            return Err(invalid(format!("test function amplitude must be nonnegative, got {amplitude}")));
        }
        Ok(Self { center, width, amplitude })
    }

    /// Looks a shape up by name; only `"gaussian"` is registered.
    pub fn from_shape(shape: &str, center: Vec<f64>, width: f64, amplitude: f64) -> Result<Self> {
        match shape {
            "gaussian" => Self::gaussian(center, width, amplitude),
            other => Err(invalid(format!("unregistered test-function shape {other:?} (registered: gaussian)"))),
        }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::gaussian(self.center.clone(), self.width, self.amplitude * factor)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().zip(&self.center).map(|(a, b)| (a - b) * (a - b)).sum();
        self.amplitude * (-0.5 * r2 / (self.width * self.width)).exp()
    }

    /// Lebesgue integral `A (2 pi w^2)^(d/2)`.
    pub fn integral(&self) -> f64 {
        self.amplitude * (2.0 * PI * self.width * self.width).powf(0.5 * self.dim() as f64)
    }

    /// Radius outside which `phi < rel * max phi`.
    pub fn support_radius(&self, rel: f64) -> f64 {
        self.width * (-2.0 * rel.ln()).sqrt()
    }
}

/// Time profile `psi` on [0, 1] with `chi(u) = int_u^1 psi(s) ds`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeProfile {
    Constant { level: f64 },
    /// Normal density with the given center and width.
    Bump { center: f64, width: f64 },
}

impl TimeProfile {
    pub fn validate(&self) -> Result<()> {
        match *self {
            TimeProfile::Constant { level } if !(0.0..=1.0).contains(&level) => {
                Err(invalid(format!("constant time profile must lie in [0, 1], got {level}")))
            }
            TimeProfile::Bump { width, .. } if !(width > 0.0) => {
                Err(invalid(format!("time bump width must be positive, got {width}")))
            }
            _ => Ok(()),
        }
    }

    pub fn psi(&self, t: f64) -> f64 {
        match *self {
            TimeProfile::Constant { level } => level,
            TimeProfile::Bump { center, width } => {
                (-0.5 * ((t - center) / width).powi(2)).exp() / (width * (2.0 * PI).sqrt())
            }
        }
    }

    pub fn chi(&self, u: f64) -> f64 {
        if u >= 1.0 {
            return 0.0;
        }
        match *self {
            TimeProfile::Constant { level } => level * (1.0 - u),
            TimeProfile::Bump { center, width } => {
                let s = width * std::f64::consts::SQRT_2;
                0.5 * (erfc((u - center) / s) - erfc((1.0 - center) / s))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::quadrature::adaptive;

    #[test]
    fn norming_values() {
        let p = ModelParams::new(5, 2.0, 0.5, 1.0).unwrap();
        assert!((p.norming(100.0).unwrap() - 46.415_888_336_127_79).abs() < 1e-9);
        assert!((p.self_similarity_index() - 5.0 / 6.0).abs() < 1e-15);
        let q = ModelParams::new(3, 2.0, 1.0, 1.0).unwrap();
        assert!((q.norming_exponent() - 0.75).abs() < 1e-15);
        assert_eq!(q.norming(1.0).unwrap(), 1.0);
    }

    #[test]
    fn constants_at_beta_one() {
        let p = ModelParams::new(3, 2.0, 1.0, 3.0).unwrap();
        assert!((p.k() - 1.5f64.sqrt()).abs() < 1e-15);
        assert!((p.k().powf(2.0) - p.k1()).abs() < 1e-15);
    }

    #[test]
    fn intermediate_window() {
        assert!(ModelParams::new(5, 2.0, 0.5, 1.0).unwrap().is_intermediate());
        assert!(ModelParams::new(3, 1.2, 0.45, 1.0).unwrap().is_intermediate());
        assert!(!ModelParams::new(1, 2.0, 0.5, 1.0).unwrap().is_intermediate());
        assert!(ModelParams::new(1, 1.5, 0.5, 1.0).unwrap().require_intermediate().is_err());
    }

    #[test]
    fn test_function_integral_matches_quadrature() {
        let phi = TestFunction::gaussian(vec![0.3], 0.8, 2.0).unwrap();
        let r = adaptive(|x| phi.eval(&[x]), -20.0, 20.0, 1e-14, 1e-14, 500);
        assert!((r.value - phi.integral()).abs() < 1e-8);
        assert!(TestFunction::from_shape("box", vec![0.0], 1.0, 1.0).is_err());
    }

    #[test]
    fn chi_is_tail_integral_of_psi() {
        for prof in [TimeProfile::Constant { level: 0.7 }, TimeProfile::Bump { center: 0.6, width: 0.1 }] {
            for u in [0.0, 0.3, 0.65, 0.99] {
                let r = adaptive(|s| prof.psi(s), u, 1.0, 1e-14, 1e-14, 200);
                assert!((r.value - prof.chi(u)).abs() < 1e-10, "{prof:?} u={u}");
            }
        }
    }
}
