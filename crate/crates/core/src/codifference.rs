//! Codifference of the increments `xi_v - xi_u` and `xi_{T+t} - xi_{T+s}`
//! and the dependence exponent.
//!
//! With `R` the kernel of the early increment and `U` that of the late one,
//! only `r <= v` contributes, and there `U = f`, `R = g_1` (`r <= u`) or
//! `R = g_2` (`u < r <= v`):
//!
//! ```text
//! f   = z int_{s+T}^{t+T} p_{r'-r}(x) dr'
//! g_1 =   int_u^v         p_{r'-r}(x) dr'
//! g_2 =   int_r^v         p_{r'-r}(x) dr'
//! D+  = |1 - i tan(pi(1+beta)/2)| int int (f+g)^(1+beta) - f^(1+beta) - g^(1+beta)
//! D-  = | -int int (|g-f|^(1+beta) - f^(1+beta) - g^(1+beta))
//!         + i tan(pi(1+beta)/2) int int (|g-f|^(1+beta) sgn(g-f) - g^(1+beta) + f^(1+beta)) |
//! ```
//!
//! `f` is of order `T^(-d/alpha)` against `g = O(1)`, so the cross terms are
//! evaluated in relative form through `expm1`/`log1p`, which stays accurate
//! at every ratio without a switch-over threshold. `f` itself is computed by
//! direct quadrature in time rather than as a difference of two nearly equal
//! time-integrated kernels.

use std::f64::consts::SQRT_2;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::ModelParams;
use crate::numerics::fit::linear_fit;
use crate::numerics::quadrature::GaussLegendre;
use crate::numerics::special::sphere_area;
use crate::stable_density::DensityEvaluator;
use crate::stable_sampling::skew_tan;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodiffQuery {
    pub u: f64,
    pub v: f64,
    pub s: f64,
    pub t: f64,
    pub z1: f64,
    pub z2: f64,
}

impl CodiffQuery {
    pub fn new(u: f64, v: f64, s: f64, t: f64, z1: f64, z2: f64) -> Result<Self> {
        let q = Self { u, v, s, t, z1, z2 };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.u && self.u < self.v && self.v < self.s && self.s < self.t) {
            return Err(invalid(format!(
                "codifference query needs 0 <= u < v < s < t, got ({}, {}, {}, {})",
                self.u, self.v, self.s, self.t
            )));
        }
        if !(self.z1.is_finite() && self.z2.is_finite()) {
            return Err(invalid("codifference arguments must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `kappa = d / alpha`.
    One,
    /// `kappa = (d / alpha)(1 + beta - d/(d + alpha))`.
    Two,
}

impl Regime {
    pub fn number(&self) -> u8 {
        match self {
            Regime::One => 1,
            Regime::Two => 2,
        }
    }
}

pub fn kappa_formula(d: f64, alpha: f64, beta: f64) -> (f64, Regime) {
    let r = d / alpha;
    if alpha == 2.0 || beta > d / (d + alpha) {
        (r, Regime::One)
    } else {
        // the bracket vanishes exactly at the boundary
        (r * (1.0 + (beta - d / (d + alpha))), Regime::Two)
    }
}

pub fn kappa_theory(params: &ModelParams) -> Result<(f64, Regime)> {
    params.validate()?;
    params.require_intermediate()?;
    Ok(kappa_formula(params.dim(), params.alpha, params.beta))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlaneRegion {
    First,
    Second,
    SeparatingCurve,
}

/// Dependence exponent from the degree of transience `gamma = d/alpha - 1`
/// (for `alpha < 2`).
pub fn gamma_plane_classify(gamma: f64, beta: f64) -> Result<(f64, PlaneRegion)> {
    if !(gamma > 0.0) || !(beta > 0.0 && beta < 1.0) {
        return Err(invalid(format!("need gamma > 0 and 0 < beta < 1, got ({gamma}, {beta})")));
    }
    let g1 = gamma + 1.0;
    let curve = g1 / (gamma + 2.0);
    let golden = 0.5 * (5f64.sqrt() - 1.0);
    let upper = (1.0f64).min(1.0 / gamma);
    if beta == curve && gamma > golden && gamma < SQRT_2 {
        return Ok((g1, PlaneRegion::SeparatingCurve));
    }
    if gamma < SQRT_2 && beta > (1.0 / g1).max(curve) && beta < upper {
        return Ok((g1, PlaneRegion::First));
    }
    if gamma > golden && beta > 1.0 / g1 && beta < (1.0 / gamma).min(curve) {
        return Ok((g1 * (1.0 + beta - curve), PlaneRegion::Second));
    }
    let mut why = Vec::new();
    if beta <= 1.0 / g1 {
        why.push(format!("beta = {beta} <= 1/(gamma+1) = {}", 1.0 / g1));
    }
    if beta >= 1.0 / gamma {
        why.push(format!("beta = {beta} >= 1/gamma = {}", 1.0 / gamma));
    }
    if beta > curve && gamma >= SQRT_2 {
        why.push(format!("gamma = {gamma} >= sqrt(2) above the separating curve"));
    }
    if beta <= curve && gamma <= golden {
        why.push(format!("gamma = {gamma} <= (sqrt(5)-1)/2 below the separating curve"));
    }
    if beta == curve && !(gamma > golden && gamma < SQRT_2) {
        why.push("on the separating curve outside (sqrt(5)-1)/2 < gamma < sqrt(2)".to_string());
    }
    Err(invalid(format!("({gamma}, {beta}) lies in neither region: {}", why.join("; "))))
}

/// Relative cross terms for `0 <= y <= 1` (ratio of the smaller field to the
/// larger), all accurate as `y -> 0`:
/// `(1+y)^p - 1 - y^p`, `(1-y)^p - 1 - y^p` and `(1-y)^p - 1 + y^p`.
#[inline]
fn rel_terms(y: f64, p: f64) -> (f64, f64, f64) {
    let yp = y.powf(p);
    let up = (p * y.ln_1p()).exp_m1();
    let down = if y >= 1.0 { -1.0 } else { (p * (-y).ln_1p()).exp_m1() };
    (up - yp, down - yp, down + yp)
}

/// `(A, B, C)` for fields `f, g >= 0`:
/// `A = (f+g)^p - f^p - g^p`, `B = |g-f|^p - f^p - g^p`,
/// `C = |g-f|^p sgn(g-f) - g^p + f^p`.
#[inline]
pub fn cross_terms(f: f64, g: f64, p: f64) -> (f64, f64, f64) {
    let (big, small, g_big) = if g >= f { (g, f, true) } else { (f, g, false) };
    if big == 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let (a, b, c) = rel_terms(small / big, p);
    let scale = big.powf(p);
    (scale * a, scale * b, if g_big { scale * c } else { -scale * c })
}

/// Time-integrated fields of the codifference integrand.
#[derive(Debug, Clone)]
pub struct KernelFields {
    ev: Arc<DensityEvaluator>,
    rule: GaussLegendre,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fields {
    pub f: f64,
    /// `g_1` on `r <= u`, `g_2` on `u < r <= v`.
    pub g: f64,
}

impl KernelFields {
    pub fn new(params: &ModelParams) -> Result<Self> {
        Ok(Self { ev: DensityEvaluator::shared(params.alpha, params.dim())?, rule: GaussLegendre::new(16) })
    }

    fn p(&self, tau: f64, rho: f64) -> f64 {
        let a = self.ev.alpha();
        let s = tau.powf(-1.0 / a);
        s.powf(self.ev.dim()) * self.ev.p1(rho * s)
    }

    /// `int_a^b p_tau(rho) d tau` by Gauss–Legendre in `ln tau`; accurate when
    /// the integrand has no interior structure on `[a, b]`.
    fn direct(&self, a: f64, b: f64, rho: f64) -> f64 {
        self.rule.integrate(a.ln(), b.ln(), |l| {
            let tau = l.exp();
            tau * self.p(tau, rho)
        })
    }

    /// `int_0^tau p_w(rho) dw`.
    fn g_full(&self, tau: f64, rho: f64) -> f64 {
        if tau <= 0.0 {
            return 0.0;
        }
        self.ev.integrated_density(tau, rho).unwrap_or(f64::INFINITY)
    }

    /// `int_a^b p_w(rho) dw`, `0 <= a < b`, avoiding the cancellation of two
    /// large kernels at small radii.
    pub fn window(&self, a: f64, b: f64, rho: f64) -> f64 {
        let alpha = self.ev.alpha();
        if a <= 0.0 {
            return self.g_full(b, rho);
        }
        if rho <= a.powf(1.0 / alpha) {
            // the integrand is smooth in ln w on [a, b] at this radius
            let n = ((b / a).ln() / 2.0).ceil().max(1.0) as usize;
            let ratio = (b / a).powf(1.0 / n as f64);
            let mut lo = a;
            let mut total = 0.0;
            for _ in 0..n {
                let hi = lo * ratio;
                total += self.direct(lo, hi.min(b), rho);
                lo = hi;
            }
            total
        } else {
            (self.g_full(b, rho) - self.g_full(a, rho)).max(0.0)
        }
    }

    /// `(f, g)` at time `r` and radius `rho`.
    pub fn at(&self, big_t: f64, q: &CodiffQuery, r: f64, rho: f64) -> Result<Fields> {
        if r > q.v || r < 0.0 {
            return Err(invalid(format!("fields are evaluated for 0 <= r <= v = {}, got r = {r}", q.v)));
        }
        let f = q.z2.abs() * self.window(q.s + big_t - r, q.t + big_t - r, rho);
        let g = if r <= q.u { self.window(q.u - r, q.v - r, rho) } else { self.g_full(q.v - r, rho) };
        Ok(Fields { f, g: q.z1.abs() * g })
    }
}

/// `(f, g_1, g_2)` as separate values (`g_1` is only defined for `r <= u`,
/// `g_2` for `u < r <= v`; the other is reported as zero).
pub fn kernel_fields(params: &ModelParams, big_t: f64, q: &CodiffQuery, r: f64, rho: f64) -> Result<(f64, f64, f64)> {
    q.validate()?;
    let k = KernelFields::new(params)?;
    let fl = k.at(big_t, q, r, rho)?;
    Ok(if r <= q.u { (fl.f, fl.g, 0.0) } else { (fl.f, 0.0, fl.g) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodiffQuadrature {
    pub r_nodes: usize,
    pub rho_panel: f64,
    pub rel_tol: f64,
}

impl Default for CodiffQuadrature {
    fn default() -> Self {
        Self { r_nodes: 16, rho_panel: 0.5, rel_tol: 1e-3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodiffValue {
    pub d_plus: f64,
    pub d_minus: f64,
    pub err_plus: f64,
    pub err_minus: f64,
    /// Most negative cross term `A` met at a node, relative to its scale
    /// (analytically `A >= 0`).
    pub worst_negative: f64,
}

struct Integrals {
    a: f64,
    b: f64,
    c: f64,
    worst: f64,
}

fn integrals(k: &KernelFields, beta: f64, big_t: f64, q: &CodiffQuery, r_nodes: usize, panel: f64) -> Integrals {
    let alpha = k.ev.alpha();
    let d = k.ev.dim();
    let p = 1.0 + beta;
    let r_rule = GaussLegendre::new(r_nodes);
    let rho_rule = GaussLegendre::new(8);
    let (mut sa, mut sb, mut sc) = (0.0, 0.0, 0.0);
    let mut worst: f64 = 0.0;
    // small-radius decay of rho^d f g^beta in ln rho
    let kappa = d + beta * (alpha - d).min(0.0);
    let big = (q.t + big_t).powf(1.0 / alpha);
    let mut window = |lo: f64, hi: f64, graded: bool| {
        let len = hi - lo;
        for (x, wx) in r_rule.mapped(0.0, 1.0) {
            // graded towards r = v, where g_2 vanishes
            let (r, jac) = if graded { (hi - len * x * x, 2.0 * len * x * wx) } else { (lo + len * x, len * wx) };
            let small = if r < q.u { q.u - r } else { (q.v - r).max(1e-300) };
            let s_lo = small.powf(1.0 / alpha).min(1.0);
            let l0 = s_lo.ln() - 12.0;
            let l1 = big.ln() + 14.0;
            let n = ((l1 - l0) / panel).ceil() as usize;
            let h = (l1 - l0) / n as f64;
            let mut eval = |l: f64| {
                let rho = l.exp();
                let fl = k.at(big_t, q, r, rho).expect("r within [0, v]");
                let (a, b, c) = cross_terms(fl.f, fl.g, p);
                let scale = fl.f.max(fl.g).powf(p);
                if scale > 0.0 {
                    worst = worst.min(a / scale);
                }
                let w = rho.powf(d);
                (w * a, w * b, w * c)
            };
            let (mut ia, mut ib, mut ic) = (0.0, 0.0, 0.0);
            for m in 0..n {
                for (l, wl) in rho_rule.mapped(l0 + m as f64 * h, l0 + (m + 1) as f64 * h) {
                    let (a, b, c) = eval(l);
                    ia += wl * a;
                    ib += wl * b;
                    ic += wl * c;
                }
            }
            let (a, b, c) = eval(l0);
            ia += a / kappa;
            ib += b / kappa;
            ic += c / kappa;
            sa += jac * ia;
            sb += jac * ib;
            sc += jac * ic;
        }
    };
    if q.u > 0.0 {
        window(0.0, q.u, false);
    }
    window(q.u, q.v, true);
    let area = sphere_area(d);
    Integrals { a: area * sa, b: area * sb, c: area * sc, worst }
}

fn assemble(i: &Integrals, beta: f64) -> (f64, f64) {
    let tan = skew_tan(1.0 + beta);
    let plus = (1.0 + tan * tan).sqrt() * i.a;
    let minus = (i.b * i.b + tan * tan * i.c * i.c).sqrt();
    (plus, minus)
}

/// `D+` (if `z1 z2 > 0`, computed with `|z1|, |z2|`) and `D-` at one `T`.
pub fn codifference(params: &ModelParams, big_t: f64, q: &CodiffQuery, quad: &CodiffQuadrature) -> Result<CodiffValue> {
    params.validate()?;
    q.validate()?;
    if !(big_t > 0.0) {
        return Err(invalid("T must be positive"));
    }
    if q.z1 == 0.0 || q.z2 == 0.0 {
        return Ok(CodiffValue { d_plus: 0.0, d_minus: 0.0, err_plus: 0.0, err_minus: 0.0, worst_negative: 0.0 });
    }
    let k = KernelFields::new(params)?;
    let coarse = integrals(&k, params.beta, big_t, q, quad.r_nodes, quad.rho_panel);
    let fine = integrals(&k, params.beta, big_t, q, 2 * quad.r_nodes, 0.5 * quad.rho_panel);
    let (p0, m0) = assemble(&coarse, params.beta);
    let (p1, m1) = assemble(&fine, params.beta);
    let value = CodiffValue {
        d_plus: p1,
        d_minus: m1,
        err_plus: (p1 - p0).abs(),
        err_minus: (m1 - m0).abs(),
        worst_negative: coarse.worst.min(fine.worst),
    };
    if value.worst_negative < -1e-12 {
        return Err(Error::NonConvergence {
            what: "cross term (f+g)^(1+beta) - f^(1+beta) - g^(1+beta) came out negative".into(),
            error_estimate: -value.worst_negative,
        });
    }
    if value.err_plus > quad.rel_tol * value.d_plus || value.err_minus > quad.rel_tol * value.d_minus {
        return Err(Error::NonConvergence {
            what: format!("codifference quadrature at T = {big_t}"),
            error_estimate: (value.err_plus / value.d_plus).max(value.err_minus / value.d_minus),
        });
    }
    Ok(value)
}

pub fn d_plus(params: &ModelParams, big_t: f64, q: &CodiffQuery, quad: &CodiffQuadrature) -> Result<f64> {
    codifference(params, big_t, q, quad).map(|v| v.d_plus)
}

pub fn d_minus(params: &ModelParams, big_t: f64, q: &CodiffQuery, quad: &CodiffQuadrature) -> Result<f64> {
    codifference(params, big_t, q, quad).map(|v| v.d_minus)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub stderr: f64,
    pub points: usize,
    pub excluded: usize,
}

/// Least-squares slope of `ln D` against `ln T`; nonpositive values are
/// excluded and counted.
pub fn estimate_exponent(t_grid: &[f64], values: &[f64]) -> Result<ExponentFit> {
    if t_grid.len() != values.len() {
        return Err(invalid("T grid and values differ in length"));
    }
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for (&t, &d) in t_grid.iter().zip(values) {
        if d > 0.0 && t > 0.0 {
            x.push(t.ln());
            y.push(d.ln());
        }
    }
    let excluded = t_grid.len() - x.len();
    if x.len() < 5 {
        return Err(invalid(format!("need at least 5 positive points, have {}", x.len())));
    }
    let span = (x.iter().cloned().fold(f64::MIN, f64::max) - x.iter().cloned().fold(f64::MAX, f64::min)) / 10f64.ln();
    if span < 2.0 - 1e-9 {
        return Err(invalid(format!("T grid spans {span:.2} decades, need at least 2")));
    }
    let fit = linear_fit(&x, &y);
    Ok(ExponentFit { slope: fit.slope, stderr: fit.slope_stderr, points: x.len(), excluded })
}

/// Envelope check with the constant fitted at the smallest `T`: returns the
/// worst ratio `D(T) / (C T^-e)` (upper) or `(C T^-e) / D(T)` (lower) over
/// the grid.
pub fn envelope_ratio(t_grid: &[f64], values: &[f64], exponent: f64, upper: bool) -> f64 {
    let c = values[0] * t_grid[0].powf(exponent);
    t_grid
        .iter()
        .zip(values)
        .map(|(&t, &d)| {
            let env = c * t.powf(-exponent);
            if upper {
                d / env
            } else {
                env / d
            }
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeCheck {
    pub kind: String,
    pub exponent: f64,
    pub worst_ratio: f64,
    pub slack: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodiffReport {
    pub params: ModelParams,
    pub query: CodiffQuery,
    pub t_grid: Vec<f64>,
    pub d_plus: Vec<f64>,
    pub d_minus: Vec<f64>,
    pub err_plus: Vec<f64>,
    pub err_minus: Vec<f64>,
    pub fit_plus: ExponentFit,
    pub fit_minus: ExponentFit,
    pub kappa_theory: f64,
    pub regime: Regime,
    pub envelopes: Vec<EnvelopeCheck>,
}

/// Multiplicative slack allowed on envelopes fitted at a single point.
pub const ENVELOPE_SLACK: f64 = 2.0;

/// Log-spaced grid of `n` points on `[a, b]`.
pub fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a * (b / a).powf(i as f64 / (n - 1) as f64)).collect()
}

pub fn codiff_sweep(
    params: &ModelParams,
    q: &CodiffQuery,
    t_grid: &[f64],
    quad: &CodiffQuadrature,
) -> Result<CodiffReport> {
    let (kappa, regime) = kappa_theory(params)?;
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("T grid must be strictly increasing"));
    }
    let vals: Vec<CodiffValue> =
        t_grid.par_iter().map(|&t| codifference(params, t, q, quad)).collect::<Result<_>>()?;
    let d_plus: Vec<f64> = vals.iter().map(|v| v.d_plus).collect();
    let d_minus: Vec<f64> = vals.iter().map(|v| v.d_minus).collect();
    let r = params.dim() / params.alpha;
    let mut envelopes = Vec::new();
    let mut push = |kind: &str, values: &[f64], e: f64, upper: bool| {
        let worst = envelope_ratio(t_grid, values, e, upper);
        envelopes.push(EnvelopeCheck {
            kind: kind.to_string(),
            exponent: e,
            worst_ratio: worst,
            slack: ENVELOPE_SLACK,
            holds: worst <= ENVELOPE_SLACK,
        });
    };
    match regime {
        Regime::One => {
            push("upper_plus", &d_plus, r, true);
            push("upper_minus", &d_minus, r, true);
            if q.z1 * q.z2 > 0.0 {
                push("lower_plus", &d_plus, r, false);
            }
        }
        Regime::Two => {
            let delta = kappa / r;
            push("upper_plus", &d_plus, r * (delta - 0.05), true);
            push("upper_minus", &d_minus, r * (delta - 0.05), true);
            if q.z1 * q.z2 > 0.0 {
                push("lower_plus", &d_plus, r * (delta + 0.05), false);
            }
        }
    }
    Ok(CodiffReport {
        params: *params,
        query: *q,
        t_grid: t_grid.to_vec(),
        err_plus: vals.iter().map(|v| v.err_plus).collect(),
        err_minus: vals.iter().map(|v| v.err_minus).collect(),
        fit_plus: estimate_exponent(t_grid, &d_plus)?,
        fit_minus: estimate_exponent(t_grid, &d_minus)?,
        d_plus,
        d_minus,
        kappa_theory: kappa,
        regime,
        envelopes,
    })
}
