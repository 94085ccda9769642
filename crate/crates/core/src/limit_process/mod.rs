//! The sub-fractional stable limit process `xi`: constants, the exact
//! characteristic function and path sampling from a discretized noise field.

mod grid;

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::ModelParams;
use crate::numerics::quadrature::GaussLegendre;
use crate::numerics::special::sphere_area;
use crate::stable_density::DensityEvaluator;

pub use grid::{build_kernel_grid, sample_xi, sample_xi_paths, KernelGrid, KernelResolution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitConstants {
    pub k: f64,
    pub k1: f64,
    /// Self-similarity index.
    pub h: f64,
    pub intermediate: bool,
}

/// Always computed; `intermediate` reports whether the constants describe an
/// actual limit.
pub fn limit_constants(params: &ModelParams) -> LimitConstants {
    LimitConstants {
        k: params.k(),
        k1: params.k1(),
        h: params.self_similarity_index(),
        intermediate: params.is_intermediate(),
    }
}

/// `g_t(r, rho) = 1_{r <= t} int_r^t p_{u-r}(rho) du` as a function of
/// `tau = t - r`.
#[derive(Debug, Clone)]
pub struct Kernel {
    ev: Arc<DensityEvaluator>,
}

impl Kernel {
    pub fn new(alpha: f64, d: f64) -> Result<Self> {
        Ok(Self { ev: DensityEvaluator::shared(alpha, d)? })
    }

    pub fn evaluator(&self) -> &DensityEvaluator {
        &self.ev
    }

    #[inline]
    pub fn eval(&self, tau: f64, rho: f64) -> f64 {
        if tau <= 0.0 {
            return 0.0;
        }
        self.ev.integrated_density(tau, rho).unwrap_or(f64::INFINITY)
    }

    /// Decay exponent of `rho^d g^(1+beta)` as `rho -> 0`, in the variable
    /// `ln rho`.
    pub fn small_exponent(&self, beta: f64) -> f64 {
        let (a, d) = (self.ev.alpha(), self.ev.dim());
        if d > a {
            d + (a - d) * (1.0 + beta)
        } else {
            d
        }
    }
}

/// `int_0^inf rho^d f(rho) d(ln rho)`, i.e. `int f rho^(d-1) d rho`, for an
/// integrand living on the scales `[s_lo, s_hi]`; below the grid the
/// integrand is continued as the power `rho^kappa`.
pub(crate) fn radial_integral(
    rule: &GaussLegendre,
    s_lo: f64,
    s_hi: f64,
    panel: f64,
    kappa_small: f64,
    depth: (f64, f64),
    mut f: impl FnMut(f64) -> (f64, f64),
) -> (f64, f64) {
    let lo = s_lo.ln() - depth.0;
    let hi = s_hi.ln() + depth.1;
    let n = ((hi - lo) / panel).ceil().max(1.0) as usize;
    let h = (hi - lo) / n as f64;
    let (mut a, mut b) = (0.0, 0.0);
    for p in 0..n {
        for (l, w) in rule.mapped(lo + p as f64 * h, lo + (p + 1) as f64 * h) {
            let (x, y) = f(l.exp());
            a += w * x;
            b += w * y;
        }
    }
    if kappa_small > 0.0 {
        let (x, y) = f(lo.exp());
        a += x / kappa_small;
        b += y / kappa_small;
    }
    (a, b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharfnQuadrature {
    /// Gauss–Legendre nodes in `r` per interval between requested times.
    pub r_nodes: usize,
    /// Panel width in `ln rho`.
    pub rho_panel: f64,
    /// Acceptance threshold on the relative change under refinement.
    pub rel_tol: f64,
}

impl Default for CharfnQuadrature {
    fn default() -> Self {
        Self { r_nodes: 24, rho_panel: 0.5, rel_tol: 1e-6 }
    }
}

/// `(int int |S|^(1+beta), int int |S|^(1+beta) sgn S)` over `dr dx`, with
/// `S(r, x) = sum_j z_j g_{t_j}(r, x)`.
fn charfn_parts(kernel: &Kernel, beta: f64, times: &[f64], zs: &[f64], r_nodes: usize, panel: f64) -> (f64, f64) {
    let alpha = kernel.ev.alpha();
    let d = kernel.ev.dim();
    let p = 1.0 + beta;
    let r_rule = GaussLegendre::new(r_nodes);
    let rho_rule = GaussLegendre::new(8);
    let kappa = kernel.small_exponent(beta);
    // r is graded towards the right end of each interval, where the kernel of
    // the time ending there vanishes like a power of (t - r).
    let grade = 3.0;
    let (mut ia, mut is) = (0.0, 0.0);
    let mut left = 0.0;
    for (j, &right) in times.iter().enumerate() {
        if right <= left {
            left = right;
            continue;
        }
        let len = right - left;
        for (u, wu) in r_rule.mapped(0.0, 1.0) {
            let tau0 = len * u.powf(grade);
            let r = right - tau0;
            let jac = len * grade * u.powf(grade - 1.0) * wu;
            let taus: Vec<f64> = times[j..].iter().map(|&t| t - r).collect();
            let s_lo = taus[0].powf(1.0 / alpha);
            let s_hi = taus[taus.len() - 1].powf(1.0 / alpha);
            let (a, b) = radial_integral(&rho_rule, s_lo, s_hi, panel, kappa, (12.0, 14.0), |rho| {
                let s: f64 = taus.iter().zip(&zs[j..]).map(|(&tau, &z)| z * kernel.eval(tau, rho)).sum();
                let m = rho.powf(d) * s.abs().powf(p);
                (m, m * s.signum())
            });
            ia += jac * a;
            is += jac * b;
        }
        left = right;
    }
    let area = sphere_area(d);
    (area * ia, area * is)
}

/// Log of `E exp{i sum_j z_j xi_{t_j}}`.
pub fn log_charfn(params: &ModelParams, times: &[f64], zs: &[f64], quad: &CharfnQuadrature) -> Result<Complex64> {
    log_charfn_with_error(params, times, zs, quad).map(|(v, _)| v)
}

pub fn log_charfn_with_error(
    params: &ModelParams,
    times: &[f64],
    zs: &[f64],
    quad: &CharfnQuadrature,
) -> Result<(Complex64, f64)> {
    params.validate()?;
    if times.len() != zs.len() || times.is_empty() {
        return Err(invalid("need matching, non-empty lists of times and arguments"));
    }
    if times[0] < 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("times must satisfy 0 <= t_1 < ... < t_k"));
    }
    if zs.iter().all(|&z| z == 0.0) {
        return Ok((Complex64::new(0.0, 0.0), 0.0));
    }
    let kernel = Kernel::new(params.alpha, params.dim())?;
    let tan = crate::stable_sampling::skew_tan(1.0 + params.beta);
    let assemble = |(a, s): (f64, f64)| Complex64::new(-a, tan * s);
    let coarse = assemble(charfn_parts(&kernel, params.beta, times, zs, quad.r_nodes, quad.rho_panel));
    let fine = assemble(charfn_parts(&kernel, params.beta, times, zs, 2 * quad.r_nodes, 0.5 * quad.rho_panel));
    let err = (fine - coarse).norm();
    if !(err <= quad.rel_tol * fine.norm()) {
        return Err(Error::NonConvergence { what: "characteristic-function quadrature".into(), error_estimate: err });
    }
    Ok((fine, err))
}

/// `int_{|x| < R} (int_0^t p_u(x) du)^(1+beta) dx`, with `d` allowed to be
/// any positive real.
pub fn integrability_value(alpha: f64, beta: f64, d: f64, outer_radius: f64, t: f64) -> Result<f64> {
    if !(outer_radius > 0.0) {
        return Err(invalid("outer radius must be positive"));
    }
    if !(t > 0.0) {
        return Err(invalid("time must be positive"));
    }
    let kernel = Kernel::new(alpha, d)?;
    let kappa = kernel.small_exponent(beta);
    if kappa <= 0.0 {
        return Err(Error::Divergent(format!(
            "(int_0^t p_u du)^(1+beta) is not integrable at the origin for d = {d} >= alpha (1+beta)/beta"
        )));
    }
    let rule = GaussLegendre::new(8);
    let s = t.powf(1.0 / alpha);
    let top = outer_radius.ln();
    // integrate ln rho over (-inf, ln R]: grid from well below the scale
    let lo = (s.ln().min(top)) - 14.0;
    let n = ((top - lo) / 0.25).ceil() as usize;
    let h = (top - lo) / n as f64;
    let f = |l: f64| {
        let rho = l.exp();
        rho.powf(d) * kernel.eval(t, rho).powf(1.0 + beta)
    };
    let mut total = f(lo) / kappa;
    for k in 0..n {
        total += rule.integrate(lo + k as f64 * h, lo + (k + 1) as f64 * h, f);
    }
    Ok(sphere_area(d) * total)
}

/// Number the stable sampler needs: `tan(pi (1 + beta) / 2)`.
pub fn skew_factor(beta: f64) -> f64 {
    (FRAC_PI_2 * (1.0 + beta)).tan()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants() {
        let c = limit_constants(&ModelParams::new(3, 2.0, 1.0, 4.0).unwrap());
        assert!((c.k - 2f64.sqrt()).abs() < 1e-15);
        let c = limit_constants(&ModelParams::new(5, 2.0, 0.5, 1.0).unwrap());
        assert!((c.h - 5.0 / 6.0).abs() < 1e-15);
        assert!((c.k.powf(1.5) - c.k1).abs() < 1e-14);
        assert!(c.k > 0.0 && c.intermediate);
    }

    #[test]
    fn zero_arguments_give_zero() {
        let p = ModelParams::new(3, 1.2, 0.45, 1.0).unwrap();
        let v = log_charfn(&p, &[0.5, 1.0], &[0.0, 0.0], &CharfnQuadrature::default()).unwrap();
        assert_eq!(v, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn marginal_is_strictly_stable_and_right_skewed() {
        let p = ModelParams::new(3, 1.2, 0.45, 1.0).unwrap();
        let q = CharfnQuadrature::default();
        let a = log_charfn(&p, &[1.0], &[0.7], &q).unwrap();
        let b = log_charfn(&p, &[1.0], &[1.4], &q).unwrap();
        assert!(((b / a).norm() - 2f64.powf(1.45)).abs() < 1e-6);
        // -c (1 - i tan(pi (1+beta)/2)) with tan < 0
        assert!(a.im < 0.0);
        assert!((a.im / a.re + skew_factor(0.45)).abs() < 1e-9);
    }

    #[test]
    fn single_time_matches_integrability_value() {
        // For k = 1 the modulus is z^(1+beta) int_0^t int (int_0^tau p_u du)^(1+beta) dx dtau.
        let p = ModelParams::new(3, 1.2, 0.45, 1.0).unwrap();
        let v = log_charfn(&p, &[1.0], &[1.0], &CharfnQuadrature::default()).unwrap();
        // the tau-integrand scales as tau^(H(1+beta) - 1) times its value at 1
        let i1 = integrability_value(1.2, 0.45, 3.0, 1e6, 1.0).unwrap();
        let h1 = p.self_similarity_index() * 1.45;
        assert!((-v.re / (i1 / h1) - 1.0).abs() < 1e-6, "{} vs {}", -v.re, i1 / h1);
    }
}
