//! The symmetric alpha-stable transition density `p_t(x)` in R^d (with `d`
//! allowed to be real), its time integral and the semigroup action on
//! Gaussian test functions.
//!
//! Everything reduces to the radial profile `p_1(rho)` via
//! `p_t(x) = t^(-d/alpha) p_1(|x| t^(-1/alpha))`. For `alpha` in {1, 2} the
//! profile is closed-form; otherwise it comes from the small- or
//! large-argument series where they are trustworthy and from a table of
//! Fourier–Bessel inversions in the band between them.

mod hankel;
mod series;
mod tails;

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{invalid, Error, Result};
use crate::model::TestFunction;
use crate::numerics::special::{gamma, sphere_area, upper_gamma};
use crate::numerics::UniformTable;

pub use hankel::radial_inverse;
use series::Series;
pub use tails::TailIntegral;

const TABLE_STEP: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Gaussian,
    Cauchy,
    FourierInversion,
}

#[derive(Debug)]
pub struct DensityEvaluator {
    alpha: f64,
    d: f64,
    method: Method,
    small: Series,
    large: Series,
    /// Series are used for rho <= rho_small and rho >= rho_large.
    rho_small: f64,
    rho_large: f64,
    mid: Option<UniformTable>,
    kernel_tail: OnceLock<TailIntegral>,
    line_tail: OnceLock<TailIntegral>,
    radial_tail: OnceLock<TailIntegral>,
}

type CacheKey = (u64, u64);

fn cache() -> &'static Mutex<HashMap<CacheKey, Arc<DensityEvaluator>>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, Arc<DensityEvaluator>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

impl DensityEvaluator {
    pub fn new(alpha: f64, d: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(invalid(format!("stable index alpha must lie in (0, 2], got {alpha}")));
        }
        if !(d > 0.0 && d <= 8.0) {
            return Err(invalid(format!("dimension must lie in (0, 8], got {d}")));
        }
        let method = if alpha == 2.0 {
            Method::Gaussian
        } else if alpha == 1.0 {
            Method::Cauchy
        } else {
            Method::FourierInversion
        };
        let small = Series::small_rho(alpha, d);
        let large = Series::large_rho(alpha, d);
        let mut ev = Self {
            alpha,
            d,
            method,
            small,
            large,
            rho_small: 0.0,
            rho_large: f64::INFINITY,
            mid: None,
            kernel_tail: OnceLock::new(),
            line_tail: OnceLock::new(),
            radial_tail: OnceLock::new(),
        };
        if method == Method::FourierInversion {
            ev.build_mid_table()?;
        }
        Ok(ev)
    }

    /// Shared evaluator for `(alpha, d)`; built once per process.
    pub fn shared(alpha: f64, d: f64) -> Result<Arc<Self>> {
        let key = (alpha.to_bits(), d.to_bits());
        if let Some(ev) = cache().lock().expect("density cache poisoned").get(&key) {
            return Ok(ev.clone());
        }
        // Build outside the lock; a concurrent duplicate build is harmless.
        let ev = Arc::new(Self::new(alpha, d)?);
        let mut guard = cache().lock().expect("density cache poisoned");
        Ok(guard.entry(key).or_insert(ev).clone())
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dim(&self) -> f64 {
        self.d
    }

    pub fn method(&self) -> Method {
        self.method
    }

    /// Radii below and above which the series are used.
    pub fn series_band(&self) -> (f64, f64) {
        (self.rho_small, self.rho_large)
    }

    fn build_mid_table(&mut self) -> Result<()> {
        // Scan outwards from the extremes while the series stay accurate.
        let step = 0.05;
        let mut l = -20.0;
        while l < 20.0 && self.small.eval(l + step).is_some() {
            l += step;
        }
        let l_small = l;
        let mut l = 20.0;
        while l > -20.0 && self.large.eval(l - step).is_some() {
            l -= step;
        }
        let l_large = l;
        self.rho_small = l_small.exp();
        self.rho_large = l_large.exp();
        if l_small >= l_large {
            return Ok(());
        }
        let lo = l_small - 0.1;
        let hi = l_large + 0.1;
        let n = ((hi - lo) / TABLE_STEP).ceil() as usize + 1;
        let mut values = Vec::with_capacity(n);
        for i in 0..n {
            let rho = (lo + i as f64 * TABLE_STEP).exp();
            // Deep in the band's upper end cancellation caps the attainable
            // accuracy; accept a looser target there rather than fail.
            let v = self.p1_fourier(rho, 1e-11).or_else(|_| self.p1_fourier(rho, 1e-8))?.0;
            values.push(v.ln());
        }
        self.mid = Some(UniformTable::new(lo, TABLE_STEP, values));
        Ok(())
    }

    /// Radial profile `p_1(rho)`.
    pub fn p1(&self, rho: f64) -> f64 {
        let d = self.d;
        match self.method {
            Method::Gaussian => (4.0 * PI).powf(-0.5 * d) * (-0.25 * rho * rho).exp(),
            Method::Cauchy => {
                gamma(0.5 * (d + 1.0)) / PI.powf(0.5 * (d + 1.0)) * (1.0 + rho * rho).powf(-0.5 * (d + 1.0))
            }
            Method::FourierInversion => {
                if rho == 0.0 {
                    return self.p1_origin();
                }
                let l = rho.ln();
                if rho <= self.rho_small {
                    if let Some(v) = self.small.eval(l) {
                        return v;
                    }
                }
                if rho >= self.rho_large {
                    if let Some(v) = self.large.eval(l) {
                        return v;
                    }
                }
                if let Some(t) = &self.mid {
                    if l >= t.x_min() && l <= t.x_max() {
                        return t.eval(l).exp();
                    }
                }
                // Not expected: fall back to direct inversion.
                self.p1_fourier(rho, 1e-10).map(|r| r.0).unwrap_or(f64::NAN)
            }
        }
    }

    /// `p_1(0) = 2^(1-d) Gamma(d/alpha) / (alpha pi^(d/2) Gamma(d/2))`.
    pub fn p1_origin(&self) -> f64 {
        let (a, d) = (self.alpha, self.d);
        2f64.powf(1.0 - d) * gamma(d / a) / (a * PI.powf(0.5 * d) * gamma(0.5 * d))
    }

    /// `p_1(rho)` by direct Fourier–Bessel inversion of `exp(-|z|^alpha)`,
    /// with its error estimate. Independent of the series and tables.
    pub fn p1_fourier(&self, rho: f64, rel_tol: f64) -> Result<(f64, f64)> {
        let a = self.alpha;
        let k_max = 42f64.powf(1.0 / a);
        radial_inverse(self.d, rho, |k| (-k.powf(a)).exp(), k_max, rel_tol)
    }

    /// `p_t` at radius `rho`.
    pub fn density_radial(&self, t: f64, rho: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(invalid(format!("density time must be positive, got {t}")));
        }
        let s = t.powf(-1.0 / self.alpha);
        Ok(s.powf(self.d) * self.p1(rho * s))
    }

    /// `p_t(x)` for a point `x` in R^d.
    pub fn density(&self, t: f64, x: &[f64]) -> Result<f64> {
        self.density_radial(t, norm(x))
    }

    fn build_tail(&self, q: f64) -> TailIntegral {
        let (ln_y_max, top) = match self.method {
            Method::Gaussian => {
                let y: f64 = 38.0;
                // int_Y^inf s^q (4 pi)^(-d/2) e^(-s^2/4) ds = (4 pi)^(-d/2) 2^q Gamma((q+1)/2, Y^2/4)
                let top = (4.0 * PI).powf(-0.5 * self.d) * 2f64.powf(q) * upper_gamma(0.5 * (q + 1.0), 0.25 * y * y);
                (y.ln(), Some(top))
            }
            _ => (11.5, None),
        };
        TailIntegral::build(q, ln_y_max, |s| self.p1(s), &self.small, &self.large, top)
    }

    /// `int_y^inf s^(d - alpha - 1) p_1(s) ds`, the profile of the
    /// time-integrated kernel.
    pub fn kernel_tail(&self) -> &TailIntegral {
        self.kernel_tail.get_or_init(|| self.build_tail(self.d - self.alpha - 1.0))
    }

    /// `int_y^inf p_1(s) ds` (the one-dimensional survival function when d = 1).
    pub fn line_tail(&self) -> &TailIntegral {
        self.line_tail.get_or_init(|| self.build_tail(0.0))
    }

    /// `int_y^inf s^(d-1) p_1(s) ds`.
    pub fn radial_tail(&self) -> &TailIntegral {
        self.radial_tail.get_or_init(|| self.build_tail(self.d - 1.0))
    }

    /// `P(|X_1| > y)` for the time-one law in R^d.
    pub fn radial_survival(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 1.0;
        }
        (sphere_area(self.d) * self.radial_tail().eval(y)).min(1.0)
    }

    /// One-dimensional survival `P(X_1 > y)`; only meaningful for d = 1.
    pub fn line_survival(&self, y: f64) -> Result<f64> {
        if self.d != 1.0 {
            return Err(invalid("line survival function needs d = 1"));
        }
        Ok(if y >= 0.0 {
            self.line_tail().eval(y)
        } else {
            1.0 - self.line_tail().eval(-y)
        })
    }

    /// One-dimensional CDF `P(X_1 <= y)`; for d = 1.
    pub fn line_cdf(&self, y: f64) -> Result<f64> {
        if self.d != 1.0 {
            return Err(invalid("line distribution function needs d = 1"));
        }
        Ok(if y <= 0.0 { self.line_tail().eval(-y) } else { 1.0 - self.line_tail().eval(y) })
    }

    /// `W(y) = alpha y^(alpha-d) int_y^inf s^(d-alpha-1) p_1(s) ds`, so that
    /// `int_0^tau p_u(x) du = tau^(1 - d/alpha) W(|x| tau^(-1/alpha))`.
    pub fn kernel_profile(&self, y: f64) -> Result<f64> {
        let (a, d) = (self.alpha, self.d);
        if y == 0.0 {
            if d < a {
                return Ok(a * self.p1_origin() / (a - d));
            }
            return Err(Error::Divergent(format!(
                "time-integrated kernel at the origin diverges for d = {d} >= alpha = {a}"
            )));
        }
        Ok(a * y.powf(a - d) * self.kernel_tail().eval(y))
    }

    /// `int_0^tau p_u(rho) du`.
    pub fn integrated_density(&self, tau: f64, rho: f64) -> Result<f64> {
        if tau <= 0.0 {
            return Ok(0.0);
        }
        let (a, d) = (self.alpha, self.d);
        Ok(tau.powf(1.0 - d / a) * self.kernel_profile(rho * tau.powf(-1.0 / a))?)
    }

    /// `int_r^t p_{u-r}(x) du` at `|x| = rho`.
    pub fn time_integrated_kernel(&self, r: f64, t: f64, rho: f64) -> Result<f64> {
        if r > t {
            return Err(invalid(format!("kernel needs r <= t, got r = {r}, t = {t}")));
        }
        self.integrated_density(t - r, rho)
    }

    /// Green's-function constant `int_0^inf s^(d-alpha-1) p_1(s) ds`
    /// `= Gamma((d-alpha)/2) / (alpha 2^alpha pi^(d/2) Gamma(alpha/2))`, for d > alpha.
    pub fn green_constant(&self) -> Option<f64> {
        let (a, d) = (self.alpha, self.d);
        (d > a).then(|| gamma(0.5 * (d - a)) / (a * 2f64.powf(a) * PI.powf(0.5 * d) * gamma(0.5 * a)))
    }

    /// `(T_t phi)(x)` for a Gaussian bump `phi`, by radial inversion of
    /// `exp(-t |k|^alpha - w^2 |k|^2 / 2)`.
    pub fn semigroup_apply(&self, t: f64, phi: &TestFunction, x: &[f64]) -> Result<f64> {
        if t < 0.0 {
            return Err(invalid(format!("semigroup time must be nonnegative, got {t}")));
        }
        if (phi.dim() as f64) != self.d {
            return Err(invalid("test function dimension does not match the density"));
        }
        if t == 0.0 {
            return Ok(phi.eval(x));
        }
        let w = phi.width();
        let rho = norm_diff(x, phi.center());
        let a = self.alpha;
        let k_max = (84.0 / (w * w)).sqrt().min((42.0 / t).powf(1.0 / a));
        let (q, _) = radial_inverse(self.d, rho, |k| (-t * k.powf(a) - 0.5 * w * w * k * k).exp(), k_max, 1e-9)?;
        Ok(phi.integral() * q)
    }
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn norm_diff(x: &[f64], c: &[f64]) -> f64 {
    x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_peaks() {
        let g = DensityEvaluator::new(2.0, 1.0).unwrap();
        assert!((g.density(1.0, &[0.0]).unwrap() - 0.282_094_791_773_878_1).abs() < 1e-15);
        let c = DensityEvaluator::new(1.0, 3.0).unwrap();
        assert!((c.density(1.0, &[0.0, 0.0, 0.0]).unwrap() - 1.0 / (PI * PI)).abs() < 1e-15);
        assert!((c.p1_origin() - 1.0 / (PI * PI)).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(DensityEvaluator::new(2.5, 1.0).is_err());
        let g = DensityEvaluator::new(2.0, 1.0).unwrap();
        assert!(g.density(0.0, &[1.0]).is_err());
        assert!(g.time_integrated_kernel(1.0, 0.5, 1.0).is_err());
        let g3 = DensityEvaluator::new(2.0, 3.0).unwrap();
        assert!(matches!(g3.integrated_density(1.0, 0.0), Err(Error::Divergent(_))));
    }

    #[test]
    fn general_alpha_matches_direct_inversion() {
        for (a, d) in [(0.5, 1.0), (0.8, 2.0), (1.2, 3.0), (1.5, 1.0), (1.9, 5.0)] {
            let ev = DensityEvaluator::new(a, d).unwrap();
            for rho in [0.0, 1e-4, 0.03, 0.4, 1.7, 3.3, 9.0] {
                let fast = ev.p1(rho);
                let (slow, _) = ev.p1_fourier(rho, 1e-11).unwrap_or_else(|e| panic!("alpha={a} d={d} rho={rho}: {e}"));
                assert!((fast / slow - 1.0).abs() < 1e-7, "alpha={a} d={d} rho={rho}: {fast} vs {slow}");
            }
        }
    }

    #[test]
    fn kernel_at_alpha_two_matches_incomplete_gamma() {
        // int_0^tau p_u(rho) du = rho^(2-d) Gamma(d/2 - 1, rho^2 / (4 tau)) / (4 pi^(d/2))
        for d in [1.0, 3.0, 5.0] {
            let ev = DensityEvaluator::new(2.0, d).unwrap();
            for (tau, rho) in [(1.0, 0.5), (0.3, 1.0), (2.0, 3.0), (1.0, 1e-3)] {
                let got = ev.integrated_density(tau, rho).unwrap();
                let want = rho.powf(2.0 - d) * upper_gamma(0.5 * d - 1.0, rho * rho / (4.0 * tau)) / (4.0 * PI.powf(0.5 * d));
                assert!((got / want - 1.0).abs() < 1e-9, "d={d} tau={tau} rho={rho}: {got} vs {want}");
            }
        }
        let ev = DensityEvaluator::new(2.0, 1.0).unwrap();
        let v = ev.time_integrated_kernel(0.0, 1.0, 0.0).unwrap();
        assert!((v - 1.0 / PI.sqrt()).abs() < 1e-12);
        assert_eq!(ev.time_integrated_kernel(0.7, 0.7, 0.3).unwrap(), 0.0);
    }

    #[test]
    fn kernel_at_alpha_one_matches_closed_form() {
        // Cauchy, d = 3: int_0^tau c u (u^2 + rho^2)^-2 du = c/2 (rho^-2 - (tau^2 + rho^2)^-1), c = 1/pi^2
        let ev = DensityEvaluator::new(1.0, 3.0).unwrap();
        for (tau, rho) in [(1.0, 0.5), (0.1, 2.0), (10.0, 1e-3)] {
            let got = ev.integrated_density(tau, rho).unwrap();
            let want = 0.5 / (PI * PI) * (1.0 / (rho * rho) - 1.0 / (tau * tau + rho * rho));
            assert!((got / want - 1.0).abs() < 1e-9, "tau={tau} rho={rho}: {got} vs {want}");
        }
    }

    #[test]
    fn green_constant_two_routes() {
        for (a, d) in [(2.0, 5.0), (1.2, 3.0), (0.5, 1.0), (1.5, 2.0), (1.0, 3.0)] {
            let ev = DensityEvaluator::new(a, d).unwrap();
            let numeric = ev.kernel_tail().at_zero().unwrap();
            let analytic = ev.green_constant().unwrap();
            assert!((numeric / analytic - 1.0).abs() < 1e-8, "alpha={a} d={d}: {numeric} vs {analytic}");
        }
    }

    #[test]
    fn mellin_moments_and_normalisation() {
        // E|X|^s = 2^s Gamma((s+d)/2) Gamma(1 - s/alpha) / (Gamma(d/2) Gamma(1 - s/2))
        for (a, d) in [(0.5, 1.0), (1.2, 3.0), (1.5, 2.0), (2.0, 2.0)] {
            let ev = DensityEvaluator::new(a, d).unwrap();
            let total = sphere_area(d) * ev.radial_tail().at_zero().unwrap();
            assert!((total - 1.0).abs() < 1e-9, "alpha={a} d={d}: mass {total}");
            let s = 0.3 * a;
            let tail = ev.build_tail(d - 1.0 + s);
            let got = sphere_area(d) * tail.at_zero().unwrap();
            let want = 2f64.powf(s) * gamma(0.5 * (s + d)) * gamma(1.0 - s / a) / (gamma(0.5 * d) * gamma(1.0 - 0.5 * s));
            assert!((got / want - 1.0).abs() < 1e-8, "alpha={a} d={d}: {got} vs {want}");
        }
    }

    #[test]
    fn line_distribution_function() {
        let ev = DensityEvaluator::new(1.0, 1.0).unwrap();
        for y in [-3.0, -0.2, 0.0, 0.5, 40.0] {
            let want = 0.5 + f64::atan(y) / PI;
            assert!((ev.line_cdf(y).unwrap() - want).abs() < 1e-10, "y={y}");
        }
        let g = DensityEvaluator::new(2.0, 1.0).unwrap();
        let want = 0.5 * crate::numerics::special::erfc(1.0 / 2.0);
        assert!((g.line_survival(1.0).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn semigroup_gaussian_closed_form() {
        let phi = TestFunction::gaussian(vec![0.5, -0.2], 0.7, 1.3).unwrap();
        let ev = DensityEvaluator::new(2.0, 2.0).unwrap();
        for (t, x) in [(0.4, [0.1, 0.2]), (2.0, [3.0, -1.0])] {
            let got = ev.semigroup_apply(t, &phi, &x).unwrap();
            let var = 2.0 * t + 0.49;
            let r2 = (x[0] - 0.5f64).powi(2) + (x[1] + 0.2f64).powi(2);
            let want = phi.integral() / (2.0 * PI * var) * (-r2 / (2.0 * var)).exp();
            assert!((got / want - 1.0).abs() < 1e-6, "t={t}: {got} vs {want}");
        }
        assert_eq!(ev.semigroup_apply(0.0, &phi, &[0.5, -0.2]).unwrap(), phi.eval(&[0.5, -0.2]));
    }
}
