//! The twelve acceptance criteria as runnable checks. Every tolerance used to
//! decide pass/fail is a constant in this file.

use std::f64::consts::{FRAC_PI_2, PI};
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::branching_law::{offspring_gf, offspring_pmf, OffspringTable};
use crate::codifference::{
    codiff_sweep, gamma_plane_classify, kappa_formula, log_grid, CodiffQuadrature, CodiffQuery, PlaneRegion, Regime,
};
use crate::error::{Error, Result};
use crate::harness::{ecf, ecf_distance_to, inequality_suite, space_time_pairing};
use crate::limit_process::{
    build_kernel_grid, integrability_value, limit_constants, log_charfn, sample_xi_paths, CharfnQuadrature,
    KernelResolution,
};
use crate::model::{ModelParams, TestFunction, TimeProfile};
use crate::numerics::fit::linear_fit;
use crate::numerics::quadrature::{linspace, GaussLegendre};
use crate::numerics::special::{gamma, sphere_area};
use crate::particle_system::{
    box_half_width_for, laplace_functional, rescaled_fluctuation, solve_vt, Centering, SimConfig, Simulator,
    VtGrids,
};
use crate::rng::RngStream;
use crate::stable_density::DensityEvaluator;
use crate::stable_sampling::{sample_one_sided_stable, IsotropicStable, SkewedStableSpec};

#[derive(Debug, Clone, Serialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
    pub requirement: String,
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub metrics: Vec<Metric>,
    pub notes: Vec<String>,
    pub error: Option<String>,
    pub non_convergence: bool,
    pub seconds: f64,
}

impl Outcome {
    pub fn line(&self) -> String {
        let status = if self.passed { "PASS" } else { "FAIL" };
        let detail = if let Some(e) = &self.error {
            format!("error: {e}")
        } else {
            let failed: Vec<String> = self
                .metrics
                .iter()
                .filter(|m| !m.ok)
                .map(|m| format!("{} = {:.6e} (need {})", m.name, m.value, m.requirement))
                .collect();
            if failed.is_empty() {
                format!("{} checks hold", self.metrics.len())
            } else {
                failed.join("; ")
            }
        };
        format!("criterion {:>2} [{status}] {} — {detail} ({:.1} s)", self.id, self.name, self.seconds)
    }
}

#[derive(Default)]
struct Checks {
    metrics: Vec<Metric>,
    notes: Vec<String>,
}

impl Checks {
    fn below(&mut self, name: impl Into<String>, value: f64, limit: f64) {
        self.metrics.push(Metric { name: name.into(), value, requirement: format!("< {limit:e}"), ok: value < limit });
    }

    fn above(&mut self, name: impl Into<String>, value: f64, limit: f64) {
        self.metrics.push(Metric { name: name.into(), value, requirement: format!("> {limit:e}"), ok: value > limit });
    }

    fn holds(&mut self, name: impl Into<String>, ok: bool) {
        self.metrics.push(Metric { name: name.into(), value: ok as u8 as f64, requirement: "true".into(), ok });
    }

    fn info(&mut self, name: impl Into<String>, value: f64) {
        self.metrics.push(Metric { name: name.into(), value, requirement: "reported".into(), ok: true });
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }
}

pub const NAMES: [&str; 12] = [
    "branching law",
    "stable samplers vs characteristic functions",
    "stable densities",
    "integrability of the limit kernel",
    "Laplace functional: Monte Carlo vs integral equation",
    "limit process sampling and self-similarity",
    "sub-fractional Brownian covariance at beta = 1",
    "codifference decay, regime 1",
    "codifference decay, regime 2",
    "dependence-exponent formula",
    "functional-limit trend",
    "elementary inequalities",
];

/// Runs criterion `id` (1..=12).
pub fn run(id: u8) -> Outcome {
    let start = Instant::now();
    let mut c = Checks::default();
    let res = match id {
        1 => branching(&mut c),
        2 => samplers(&mut c),
        3 => densities(&mut c),
        4 => integrability(&mut c),
        5 => laplace_bridge(&mut c),
        6 => limit_suite(&mut c),
        7 => sub_fbm(&mut c),
        8 => codiff_regime(&mut c, ModelParams::new(5, 2.0, 0.5, 1.0), REGIME1_SLOPE_TOL),
        9 => codiff_regime(&mut c, ModelParams::new(3, 1.2, 0.45, 1.0), REGIME2_SLOPE_TOL),
        10 => kappa_properties(&mut c),
        11 => trend(&mut c, &TrendConfig::default()),
        12 => inequalities(&mut c),
        _ => Err(crate::error::invalid(format!("no acceptance criterion {id}"))),
    };
    let (error, non_convergence) = match &res {
        Ok(()) => (None, false),
        Err(e) => (Some(e.to_string()), matches!(e, Error::NonConvergence { .. })),
    };
    Outcome {
        id,
        name: NAMES.get(id.wrapping_sub(1) as usize).copied().unwrap_or("unknown"),
        passed: error.is_none() && c.metrics.iter().all(|m| m.ok),
        metrics: c.metrics,
        notes: c.notes,
        error,
        non_convergence,
        seconds: start.elapsed().as_secs_f64(),
    }
}

// ---------------------------------------------------------------- 1

const MASS_TOL: f64 = 1e-12;
const GF_TOL: f64 = 1e-8;
const TAIL_SLOPE_TOL: f64 = 0.10;

fn branching(c: &mut Checks) -> Result<()> {
    let k0 = 1_000_000;
    for beta in [0.3, 0.5, 0.8, 1.0] {
        let t = OffspringTable::build(beta, k0, 1e-3)?;
        // compensated, smallest terms first
        let (mut sum, mut comp) = (t.tail_mass(), 0.0);
        for &p in t.probs().iter().rev() {
            let s = sum + p;
            comp += if sum.abs() >= p.abs() { (sum - s) + p } else { (p - s) + sum };
            sum = s;
        }
        c.below(format!("beta {beta}: |sum p_k + tail - 1|"), (sum + comp - 1.0).abs(), MASS_TOL);
        c.holds(format!("beta {beta}: p_1 = 0"), t.probs()[1] == 0.0 && offspring_pmf(beta, 1)? == 0.0);
        let mut worst: f64 = 0.0;
        for i in 1..=9 {
            let s = i as f64 / 10.0;
            let (mut acc, mut sk) = (0.0, 1.0);
            for &p in t.probs() {
                acc += p * sk;
                sk *= s;
            }
            worst = worst.max((acc - offspring_gf(beta, s)?).abs());
        }
        c.below(format!("beta {beta}: generating function error"), worst, GF_TOL);
    }
    for (i, beta) in [0.3, 0.5, 0.8].into_iter().enumerate() {
        let t = OffspringTable::build(beta, 100_000, 1e-3)?;
        let n = 10_000_000usize;
        let stream = RngStream::new(0xB1, i as u64);
        let mut draws: Vec<u64> = (0..10u64)
            .into_par_iter()
            .map(|j| {
                let mut rng = stream.child(j).rng();
                (0..n / 10).map(|_| t.sample(&mut rng)).collect::<Result<Vec<u64>>>()
            })
            .collect::<Result<Vec<_>>>()?
            .concat();
        draws.sort_unstable();
        // survival slope from k = 10 up to where 50 draws remain above k
        let above = |k: f64| n - draws.partition_point(|&x| (x as f64) <= k);
        let step = 10f64.powf(0.125);
        let mut ks = vec![10.0];
        while above(ks[ks.len() - 1] * step) >= 50 {
            ks.push(ks[ks.len() - 1] * step);
        }
        let x: Vec<f64> = ks.iter().map(|k| k.ln()).collect();
        let y: Vec<f64> = ks.iter().map(|&k| (above(k) as f64 / n as f64).ln()).collect();
        let slope = linear_fit(&x, &y).slope;
        c.info(format!("beta {beta}: tail fit upper k"), ks[ks.len() - 1]);
        c.below(format!("beta {beta}: |tail slope / -(1+beta) - 1|"), (slope / -(1.0 + beta) - 1.0).abs(), TAIL_SLOPE_TOL);
    }
    Ok(())
}

// ---------------------------------------------------------------- 2

const ECF_BAND: f64 = 4.0;

fn samplers(c: &mut Checks) -> Result<()> {
    let n = 100_000usize;
    let band = ECF_BAND / (n as f64).sqrt();
    let zs: Vec<f64> = linspace(-3.0, 3.0, 25);
    let draw = |stream: RngStream, f: &(dyn Fn(&mut rand_chacha::ChaCha8Rng) -> f64 + Sync)| -> Vec<f64> {
        (0..10u64)
            .into_par_iter()
            .flat_map_iter(|j| {
                let mut rng = stream.child(j).rng();
                (0..n / 10).map(move |_| f(&mut rng)).collect::<Vec<_>>()
            })
            .collect()
    };
    // positive stable with Laplace transform exp(-lambda^a):
    // E exp(izX) = exp(-|z|^a exp(-i sgn(z) pi a / 2))
    for (i, a) in [0.3, 0.5, 0.8].into_iter().enumerate() {
        let x = draw(RngStream::new(0xC2, i as u64), &|r| sample_one_sided_stable(a, r).unwrap_or(f64::NAN));
        let t = ecf(&x, &zs)?;
        let dist = ecf_distance_to(&t, |z| {
            (-(z.abs().powf(a)) * Complex64::from_polar(1.0, -z.signum() * FRAC_PI_2 * a)).exp()
        });
        c.below(format!("one-sided index {a}: ECF distance"), dist, band);
    }
    // totally right-skewed noise: exp{-s^p |z|^p (1 - i sgn(z) tan(pi p / 2))}
    for (i, (beta, scale)) in [(0.3, 1.0), (0.5, 0.7), (0.8, 2.0), (1.0, 1.0)].into_iter().enumerate() {
        let p = 1.0 + beta;
        let spec = SkewedStableSpec::new(p, scale)?;
        let x = draw(RngStream::new(0xC3, i as u64), &|r| spec.sample(r));
        let tan = if p == 2.0 { 0.0 } else { (FRAC_PI_2 * p).tan() };
        let zz: Vec<f64> = zs.iter().map(|z| z / scale).collect();
        let t = ecf(&x, &zz)?;
        let dist = ecf_distance_to(&t, |z| {
            (-(scale * z.abs()).powf(p) * Complex64::new(1.0, -z.signum() * tan)).exp()
        });
        c.below(format!("skewed index {p}: ECF distance"), dist, band);
        if p < 2.0 {
            // right skew: the negative tail is light, the positive one heavy
            let (neg, pos) = (x.iter().filter(|&&v| v < -5.0 * scale).count(), x.iter().filter(|&&v| v > 5.0 * scale).count());
            c.holds(format!("skewed index {p}: right tail heavier ({pos} vs {neg})"), pos > 10 * neg.max(1));
        }
    }
    // isotropic motion: every projection has E exp(i s <u, X_t>) = exp(-t |s|^alpha)
    for (i, (alpha, d, t)) in [(0.5, 1, 1.0), (1.2, 3, 0.5), (1.5, 2, 2.0), (2.0, 3, 1.0)].into_iter().enumerate() {
        let motion = IsotropicStable::new(alpha, d)?;
        let u: Vec<f64> = (0..d).map(|k| k as f64 + 1.0).collect();
        let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        let x = draw(RngStream::new(0xC4, i as u64), &|r| {
            let mut out = [0.0; 6];
            motion.fill_increment(t, &mut out[..d], r);
            out[..d].iter().zip(&u).map(|(a, b)| a * b).sum::<f64>() / norm
        });
        let ecf_t = ecf(&x, &zs)?;
        let dist = ecf_distance_to(&ecf_t, |s| Complex64::new((-t * s.abs().powf(alpha)).exp(), 0.0));
        c.below(format!("isotropic alpha {alpha}, d {d}: ECF distance"), dist, band);
    }
    Ok(())
}

// ---------------------------------------------------------------- 3

const GAUSS_INVERSION_TOL: f64 = 1e-6;
const NORMALISATION_TOL: f64 = 1e-4;

/// `lim rho^(d+alpha) p_1(rho)` for `alpha < 2`.
fn tail_constant(alpha: f64, d: f64) -> f64 {
    alpha * 2f64.powf(alpha - 1.0) * PI.powf(-0.5 * d - 1.0) * gamma(0.5 * (d + alpha)) * gamma(0.5 * alpha)
        * (FRAC_PI_2 * alpha).sin()
}

fn densities(c: &mut Checks) -> Result<()> {
    for d in [1.0, 2.0, 3.0] {
        let ev = DensityEvaluator::new(2.0, d)?;
        let mut worst: f64 = 0.0;
        for rho in linspace(0.0, 6.0, 50) {
            let closed = (4.0 * PI).powf(-0.5 * d) * (-0.25 * rho * rho).exp();
            let (inv, _) = ev.p1_fourier(rho, 1e-10)?;
            worst = worst.max((inv / closed - 1.0).abs());
        }
        c.below(format!("alpha 2, d {d}: Gaussian vs Fourier inversion"), worst, GAUSS_INVERSION_TOL);
    }
    let rule = GaussLegendre::new(10);
    for alpha in [0.8, 1.0, 1.5, 2.0] {
        for d in [1.0, 2.0, 3.0] {
            let ev = DensityEvaluator::new(alpha, d)?;
            // scaling identity p_t(x) = t^(-d/alpha) p_1(t^(-1/alpha) x)
            let mut exact = true;
            for (t, x) in [(0.3f64, 0.7), (2.5, 4.0), (17.0, 0.01)] {
                let s = t.powf(-1.0 / alpha);
                let mut pt = vec![0.0; d as usize];
                pt[0] = x;
                exact &= ev.density(t, &pt)? == s.powf(d) * ev.p1(x * s);
            }
            c.holds(format!("alpha {alpha}, d {d}: scaling identity"), exact);
            // normalisation: int rho^d p_1 d ln rho plus both ends in closed form
            let (lo, hi) = (-30.0, 12.0);
            let n = ((hi - lo) / 0.25) as usize;
            let mut mass: f64 = (0..n)
                .map(|k| {
                    rule.integrate(lo + 0.25 * k as f64, lo + 0.25 * (k + 1) as f64, |l| {
                        let r = l.exp();
                        r.powf(d) * ev.p1(r)
                    })
                })
                .sum();
            mass += ev.p1_origin() * (lo * d).exp() / d;
            if alpha < 2.0 {
                mass += tail_constant(alpha, d) * (-alpha * hi).exp() / alpha;
            }
            mass *= sphere_area(d);
            c.below(format!("alpha {alpha}, d {d}: |mass - 1|"), (mass - 1.0).abs(), NORMALISATION_TOL);
            if alpha < 2.0 {
                // c1 / (1 + rho^(d+alpha)) <= p_1 <= c2 / (1 + rho^(d+alpha))
                let a = tail_constant(alpha, d);
                let ratios: Vec<f64> = std::iter::once(0.0)
                    .chain((0..=240).map(|k| 10f64.powf(-3.0 + 9.0 * k as f64 / 240.0)))
                    .map(|r| ev.p1(r) * (1.0 + r.powf(d + alpha)))
                    .collect();
                let c1 = ratios.iter().cloned().fold(a, f64::min);
                let c2 = ratios.iter().cloned().fold(a, f64::max);
                c.above(format!("alpha {alpha}, d {d}: fitted c1"), c1, 0.0);
                c.holds(format!("alpha {alpha}, d {d}: fitted c2 finite"), c2.is_finite() && c2 > 0.0);
                // the bound extends past the grid: the ratio settles at its limit
                c.below(
                    format!("alpha {alpha}, d {d}: ratio at 1e6 vs tail constant"),
                    (ratios[ratios.len() - 1] / a - 1.0).abs(),
                    1e-3,
                );
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- 4

const CAUCHY_TOL: f64 = 1e-9;
const ROUNDOFF_FLOOR: f64 = 1e-11;

fn integrability(c: &mut Checks) -> Result<()> {
    for (d, alpha, beta) in [(5.0, 2.0, 0.5), (3.0, 1.2, 0.45)] {
        let s = 1.0f64;
        let vals: Vec<f64> =
            (0..=24).map(|k| integrability_value(alpha, beta, d, s * 2f64.powi(k), 1.0)).collect::<Result<_>>()?;
        let inc: Vec<f64> = vals.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        let last = vals[vals.len() - 1];
        // increments fall geometrically until they reach the round-off floor of
        // the quadrature, and stay below it for every later doubling
        let floor = ROUNDOFF_FLOOR * last;
        let k_star = inc.iter().position(|&x| x < floor).unwrap_or(inc.len());
        c.holds(
            format!("({d}, {alpha}, {beta}): increments decrease until the round-off floor"),
            inc[..k_star].windows(2).all(|w| w[1] < w[0]),
        );
        c.info(format!("({d}, {alpha}, {beta}): doublings to reach the floor"), k_star as f64);
        let tail = inc[k_star.min(inc.len() - 8)..].iter().cloned().fold(0.0, f64::max);
        c.below(format!("({d}, {alpha}, {beta}): worst later increment / value"), tail / last, CAUCHY_TOL);
        c.info(format!("({d}, {alpha}, {beta}): value"), last);
    }
    for (alpha, beta) in [(2.0, 0.5), (1.2, 0.45)] {
        let crit = alpha * (1.0 + beta) / beta;
        let gaps = [1.0, 0.5, 0.1, 0.01, 0.001];
        let vals: Vec<f64> = gaps
            .iter()
            .map(|g| integrability_value(alpha, beta, crit - g, 1e6, 1.0))
            .collect::<Result<_>>()?;
        c.holds(format!("alpha {alpha}, beta {beta}: growth as d rises to {crit:.4}"), vals.windows(2).all(|w| w[1] > w[0]));
        // divergence like 1/(d_crit - d): no stabilisation
        c.above(format!("alpha {alpha}, beta {beta}: last ratio"), vals[4] / vals[3], 5.0);
        let diverges = matches!(integrability_value(alpha, beta, crit, 1e6, 1.0), Err(Error::Divergent(_)));
        c.holds(format!("alpha {alpha}, beta {beta}: divergent at the critical dimension"), diverges);
    }
    Ok(())
}

// ---------------------------------------------------------------- 5

const BRIDGE_SIGMAS: f64 = 3.0;
const INVARIANT_TOL: f64 = 1e-12;

fn laplace_bridge(c: &mut Checks) -> Result<()> {
    let params = ModelParams::new(1, 1.5, 0.5, 1.0)?;
    let phi = TestFunction::gaussian(vec![0.0], 1.0, 1.0)?;
    let psi = TimeProfile::Constant { level: 1.0 };
    let t_scale = 4.0;
    let trunc = box_half_width_for(&params, &phi, t_scale, 0.1)?;
    let l = trunc.half_width;
    c.info("box half-width L", l);
    c.info("truncation bound", trunc.bound);
    let grids = VtGrids { half_width: 60f64.max(1.3 * l), nx: 2400, nt: 80, ..Default::default() };
    let vt = solve_vt(&params, &phi, &psi, t_scale, &grids)?;
    c.below("v_T: worst violation of 0 <= v <= 1 and the iterate bracket", vt.invariant_violation, INVARIANT_TOL);
    let lv = laplace_functional(&vt, Some(l))?;
    let target = lv.box_value().expect("box requested");
    c.info("integral-equation value (box)", target);
    c.info("integral-equation value (whole line)", lv.value);
    c.below("exponent vs mass balance (relative)", ((lv.exponent - lv.exponent_balance) / lv.exponent).abs(), 5e-3);

    let cfg = SimConfig {
        params,
        phi,
        t_scale,
        horizon: 1.0,
        dt: 0.02,
        box_half_width: l,
        cap: 200_000,
        centering: Centering::Box,
        offspring_cutoff: 100_000,
    };
    let sim = Simulator::new(cfg)?;
    let n = 10_000;
    let records = sim.run_ensemble(n, RngStream::new(0xB5, 0))?;
    let flagged = records.iter().filter(|r| r.flagged).count();
    let mut coarse = 0;
    let samples: Vec<f64> = records
        .iter()
        .map(|r| {
            let path = rescaled_fluctuation(r, &params, t_scale)?;
            let p = space_time_pairing(&path, &psi, 1e-2)?;
            coarse += p.flagged as usize;
            Ok((-p.value).exp())
        })
        .collect::<Result<_>>()?;
    let mean = samples.iter().sum::<f64>() / n as f64;
    let sd = (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt();
    let se = sd / (n as f64).sqrt();
    c.info("Monte Carlo value", mean);
    c.info("Monte Carlo standard error", se);
    c.info("flagged replicates", flagged as f64);
    c.info("pairings flagged by grid halving", coarse as f64);
    c.below("|MC - integral equation| / SE", (mean - target).abs() / se, BRIDGE_SIGMAS);
    c.note(format!(
        "box restriction changes the value by {:.3e} (MC SE {:.3e})",
        lv.value - target,
        se
    ));
    Ok(())
}

// ---------------------------------------------------------------- 6

const LIMIT_ECF_TOL: f64 = 0.03;
const SELF_SIMILAR_QUAD_TOL: f64 = 1e-6;

fn limit_suite(c: &mut Checks) -> Result<()> {
    let params = ModelParams::new(5, 2.0, 0.5, 1.0)?;
    let quad = CharfnQuadrature::default();
    let consts = limit_constants(&params);
    c.below(
        "|K^(1+beta) / K_1 - 1|",
        (consts.k.powf(1.0 + params.beta) / consts.k1 - 1.0).abs(),
        4.0 * f64::EPSILON,
    );
    c.below("|H - 5/6|", (consts.h - 5.0 / 6.0).abs(), 4.0 * f64::EPSILON);
    let h = consts.h;
    let times = [0.5, 1.0, 2.0];
    let grid = build_kernel_grid(&params, &times, &KernelResolution::default())?;
    let n = 10_000;
    let paths = sample_xi_paths(&grid, n, RngStream::new(0xB6, 0));
    // z-grid reaching |charfn| ~ 0.2 for xi_1
    let c1 = -log_charfn(&params, &[1.0], &[1.0], &quad)?.re;
    let zmax = (1.6 / c1).powf(1.0 / (1.0 + params.beta));
    let zs = linspace(-zmax, zmax, 17);
    let ecf_of = |f: &dyn Fn(&Vec<f64>) -> f64| ecf(&paths.iter().map(f).collect::<Vec<_>>(), &zs);
    let charfn = |ts: &[f64], ws: &[f64]| -> Result<Vec<Complex64>> {
        zs.iter()
            .map(|&z| {
                let zw: Vec<f64> = ws.iter().map(|w| z * w).collect();
                log_charfn(&params, ts, &zw, &quad).map(|l| l.exp())
            })
            .collect()
    };
    let dist = |t: &crate::harness::EcfTable, cf: &[Complex64]| {
        t.values.iter().zip(cf).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    };
    let marg = ecf_of(&|p| p[1])?;
    c.below("xi_1: ECF distance to quadrature", dist(&marg, &charfn(&[1.0], &[1.0])?), LIMIT_ECF_TOL);
    let w = [1.0, -0.5, 0.8];
    let joint = ecf_of(&|p| p.iter().zip(&w).map(|(a, b)| a * b).sum())?;
    c.below("xi_0.5 - 0.5 xi_1 + 0.8 xi_2: ECF distance", dist(&joint, &charfn(&times, &w)?), LIMIT_ECF_TOL);
    for (k, a) in [(0usize, 0.5f64), (2, 2.0)] {
        let t = ecf_of(&|p| p[k])?;
        let scaled = charfn(&[1.0], &[a.powf(h)])?;
        c.below(format!("xi_{a} vs a^H xi_1: ECF distance"), dist(&t, &scaled), LIMIT_ECF_TOL);
        let direct = log_charfn(&params, &[a], &[1.3], &quad)?;
        let via_h = log_charfn(&params, &[1.0], &[1.3 * a.powf(h)], &quad)?;
        c.below(format!("a = {a}: quadrature self-similarity"), (direct / via_h - 1.0).norm(), SELF_SIMILAR_QUAD_TOL);
    }
    Ok(())
}

// ---------------------------------------------------------------- 7

const SUB_FBM_TOL: f64 = 0.01;

fn sub_fbm(c: &mut Checks) -> Result<()> {
    let params = ModelParams::new(3, 2.0, 1.0, 1.0)?;
    let quad = CharfnQuadrature::default();
    let h = 1.5;
    let shape = |s: f64, t: f64| s.powf(h) + t.powf(h) - 0.5 * ((s + t).powf(h) + (s - t).abs().powf(h));
    // for a centred Gaussian, -log E exp(i(z1 X + z2 Y)) = Var(z1 X + z2 Y) / 2
    let cov = |s: f64, t: f64| -> Result<f64> {
        let l = |z1: f64, z2: f64| log_charfn(&params, &[s, t], &[z1, z2], &quad).map(|v| -v.re);
        let im = log_charfn(&params, &[s, t], &[1.0, 1.0], &quad)?.im;
        if im != 0.0 {
            return Err(crate::error::invalid("beta = 1 characteristic function is not real"));
        }
        Ok(l(1.0, 1.0)? - l(1.0, 0.0)? - l(0.0, 1.0)?)
    };
    let c_fit = cov(0.5, 1.0)? / shape(0.5, 1.0);
    c.info("fitted constant", c_fit);
    let ts = [0.25, 0.5, 1.0, 1.5, 2.0];
    let mut worst: f64 = 0.0;
    for i in 0..ts.len() {
        for j in i + 1..ts.len() {
            let (s, t) = (ts[i], ts[j]);
            worst = worst.max((cov(s, t)? / (c_fit * shape(s, t)) - 1.0).abs());
        }
    }
    c.below("worst relative covariance error over 10 pairs", worst, SUB_FBM_TOL);
    Ok(())
}

// ---------------------------------------------------------------- 8, 9

const REGIME1_SLOPE_TOL: f64 = 0.10;
const REGIME2_SLOPE_TOL: f64 = 0.15;

fn codiff_regime(c: &mut Checks, params: Result<ModelParams>, tol: f64) -> Result<()> {
    let params = params?;
    let q = CodiffQuery::new(0.0, 1.0, 2.0, 3.0, 1.0, 1.0)?;
    let report = codiff_sweep(&params, &q, &log_grid(1e2, 1e4, 7), &CodiffQuadrature::default())?;
    c.info("kappa", report.kappa_theory);
    c.info("regime", report.regime.number() as f64);
    c.info("fitted slope of D+", report.fit_plus.slope);
    c.info("fitted slope of D-", report.fit_minus.slope);
    c.below("|slope(D+) / -kappa - 1|", (report.fit_plus.slope / -report.kappa_theory - 1.0).abs(), tol);
    for e in &report.envelopes {
        c.below(format!("envelope {} (exponent {:.4}), worst ratio", e.kind, e.exponent), e.worst_ratio, e.slack);
    }
    Ok(())
}

// ---------------------------------------------------------------- 10

const BETA_ZERO_TOL: f64 = 1e-5;

fn kappa_properties(c: &mut Checks) -> Result<()> {
    let mut boundary_exact = true;
    let mut zero_limit: f64 = 0.0;
    let mut implication_violations = 0usize;
    let mut plane_violations = 0usize;
    let mut points = 0usize;
    let golden = 0.5 * (5f64.sqrt() - 1.0);
    let n = 10;
    for ia in 0..n {
        let alpha = 0.1 + 1.8 * (ia as f64 + 0.5) / n as f64;
        for ig in 0..n {
            let gamma_t = 0.05 + 2.5 * (ig as f64 + 0.5) / n as f64;
            let d = alpha * (gamma_t + 1.0);
            let b_star = d / (d + alpha);
            let (k_at, _) = kappa_formula(d, alpha, b_star);
            let (k_above, _) = kappa_formula(d, alpha, b_star + 1e-15);
            boundary_exact &= k_at == d / alpha && k_above == d / alpha;
            let (k0, _) = kappa_formula(d, alpha, 1e-9);
            zero_limit = zero_limit.max((k0 - b_star).abs());
            for ib in 0..n {
                let beta = (ib as f64 + 0.5) / n as f64;
                points += 1;
                let inside = crate::model::intermediate(d, alpha, beta);
                let (kappa, regime) = kappa_formula(d, alpha, beta);
                if inside {
                    if beta > std::f64::consts::FRAC_1_SQRT_2 && regime != Regime::One {
                        implication_violations += 1;
                    }
                    if beta < golden && regime != Regime::Two {
                        implication_violations += 1;
                    }
                    match gamma_plane_classify(gamma_t, beta) {
                        Ok((k, region)) => {
                            let same_region = match region {
                                PlaneRegion::First => regime == Regime::One,
                                PlaneRegion::Second => regime == Regime::Two,
                                PlaneRegion::SeparatingCurve => true,
                            };
                            if !same_region || (k - kappa).abs() > 1e-12 * kappa {
                                plane_violations += 1;
                            }
                        }
                        Err(_) => plane_violations += 1,
                    }
                } else if gamma_plane_classify(gamma_t, beta).is_ok() {
                    plane_violations += 1;
                }
            }
        }
    }
    // the separating curve itself
    for k in 0..50 {
        let gamma_t = golden + (2f64.sqrt() - golden) * (k as f64 + 0.5) / 50.0;
        let beta = (gamma_t + 1.0) / (gamma_t + 2.0);
        points += 1;
        match gamma_plane_classify(gamma_t, beta) {
            Ok((kp, PlaneRegion::SeparatingCurve)) if kp == gamma_t + 1.0 => {
                let (kf, _) = kappa_formula(gamma_t + 1.0, 1.0, beta);
                if (kf - kp).abs() > 1e-12 * kp {
                    plane_violations += 1;
                }
            }
            _ => plane_violations += 1,
        }
    }
    c.holds("continuity at beta = d/(d+alpha) is exact", boundary_exact);
    c.below("worst |kappa(beta -> 0) - d/(d+alpha)|", zero_limit, BETA_ZERO_TOL);
    c.info("grid points", points as f64);
    c.below("implication violations", implication_violations as f64, 0.5);
    c.below("(gamma, beta)-plane violations", plane_violations as f64, 0.5);
    Ok(())
}

// ---------------------------------------------------------------- 11

#[derive(Debug, Clone, Serialize)]
pub struct TrendConfig {
    pub t_values: Vec<f64>,
    pub replicates: usize,
    /// Box half-width as a multiple of `T^(1/alpha)`.
    pub box_factor: f64,
    pub knots: usize,
    pub cap: usize,
    pub seed: u64,
}

impl Default for TrendConfig {
    fn default() -> Self {
        Self { t_values: vec![5.0, 15.0, 45.0], replicates: 4000, box_factor: 4.0, knots: 100, cap: 2_000_000, seed: 0xB11 }
    }
}

pub fn trend_distances(cfg: &TrendConfig, c: &mut dyn FnMut(&str, f64)) -> Result<Vec<f64>> {
    let params = ModelParams::new(1, 0.5, 0.6, 1.0)?;
    let phi = TestFunction::gaussian(vec![0.0], 1.0, 1.0)?;
    let quad = CharfnQuadrature::default();
    let scale = params.k() * phi.integral();
    // z-grid on which the limit of <X_T(1), phi> has |charfn| down to ~0.2
    let c1 = -log_charfn(&params, &[1.0], &[scale], &quad)?.re;
    let zmax = (1.6 / c1).powf(1.0 / (1.0 + params.beta));
    let zs = linspace(-zmax, zmax, 17);
    let limit: Vec<Complex64> = zs
        .iter()
        .map(|&z| log_charfn(&params, &[1.0], &[z * scale], &quad).map(|l| l.exp()))
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    for (i, &t) in cfg.t_values.iter().enumerate() {
        let l = cfg.box_factor * t.powf(1.0 / params.alpha);
        let sim = Simulator::new(SimConfig {
            params,
            phi: phi.clone(),
            t_scale: t,
            horizon: 1.0,
            dt: t / cfg.knots as f64,
            box_half_width: l,
            cap: cfg.cap,
            centering: Centering::Box,
            offspring_cutoff: 100_000,
        })?;
        let stream = RngStream::new(cfg.seed, i as u64);
        let f_t = params.norming(t)?;
        let (mut samples, mut flagged, mut next) = (Vec::new(), 0usize, 0u64);
        while samples.len() < cfg.replicates {
            let batch = (cfg.replicates - samples.len()) as u64;
            let recs: Vec<_> = (next..next + batch)
                .into_par_iter()
                .map(|k| sim.run(k, stream.child(k)))
                .collect::<Result<_>>()?;
            next += batch;
            for r in recs {
                if r.flagged {
                    flagged += 1;
                } else {
                    samples.push(r.values[r.values.len() - 1] / f_t);
                }
            }
            if next as usize > 20 * cfg.replicates {
                return Err(Error::CapabilityLimit(format!("T = {t}: too many flagged replicates ({flagged})")));
            }
        }
        let table = ecf(&samples, &zs)?;
        let dist = table.values.iter().zip(&limit).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        c(&format!("T = {t}: box half-width"), l);
        c(&format!("T = {t}: flagged fraction"), flagged as f64 / next as f64);
        c(&format!("T = {t}: ECF distance"), dist);
        out.push(dist);
    }
    Ok(out)
}

fn trend(c: &mut Checks, cfg: &TrendConfig) -> Result<()> {
    let mut infos = Vec::new();
    let d = trend_distances(cfg, &mut |n, v| infos.push((n.to_string(), v)))?;
    for (n, v) in infos {
        c.info(n, v);
    }
    c.info("ECF noise scale 1/sqrt(N)", 1.0 / (cfg.replicates as f64).sqrt());
    c.holds("ECF distance decreases across T", d.windows(2).all(|w| w[1] < w[0]));
    Ok(())
}

// ---------------------------------------------------------------- 12

fn inequalities(c: &mut Checks) -> Result<()> {
    let r = inequality_suite(100_000, RngStream::new(0xB12, 0))?;
    c.info("checks", r.checks as f64);
    c.below("violations", r.violations.len() as f64, 0.5);
    if let Some(w) = r.violations.first() {
        c.note(format!("first violation: {w:?}"));
    }
    Ok(())
}
