use branchstable::acceptance;
use branchstable::codifference::{
    codiff_sweep, gamma_plane_classify, kappa_formula, log_grid, CodiffQuadrature, CodiffQuery,
};
use branchstable::harness::{ecf, space_time_pairing};
use branchstable::limit_process::{
    build_kernel_grid, limit_constants, log_charfn, sample_xi_paths, CharfnQuadrature, KernelResolution,
};
use branchstable::model::{intermediate, norming_exponent};
use branchstable::particle_system::{
    box_half_width_for, laplace_functional, rescaled_fluctuation, solve_vt, Centering, SimConfig, Simulator,
    VtGrids,
};
use branchstable::{Error, ModelParams, RngStream, TestFunction, TimeProfile};
use serde_json::json;

use crate::config::RunConfig;
use crate::report::Report;

pub enum Failure {
    Model(Error),
    Io(std::io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Model(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// A pass/fail check did not pass.
    Failed,
    /// Every failure was a quadrature that did not reach its tolerance.
    NonConvergence,
}

impl Status {
    pub fn label(&self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Failed => "acceptance_failure",
            Status::NonConvergence => "non_convergence",
        }
    }
}

type Outcome = Result<Status, Failure>;

fn params(cfg: &RunConfig) -> Result<ModelParams, Error> {
    let p = ModelParams::new(cfg.d, cfg.alpha, cfg.beta, cfg.v)?;
    if !cfg.allow_boundary {
        p.require_intermediate()?;
    }
    Ok(p)
}

fn phi(cfg: &RunConfig) -> Result<TestFunction, Error> {
    TestFunction::gaussian(vec![0.0; cfg.d], cfg.phi_width, cfg.phi_amplitude)
}

fn psi(cfg: &RunConfig) -> Result<TimeProfile, Error> {
    let p = match cfg.psi.as_str() {
        "bump" => TimeProfile::Bump { center: cfg.psi_center, width: cfg.psi_width },
        _ => TimeProfile::Constant { level: cfg.psi_level },
    };
    p.validate()?;
    Ok(p)
}

fn mean_sd(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    (m, (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
}

pub fn simulate(cfg: &RunConfig, rep: &mut Report) -> Outcome {
    let params = params(cfg)?;
    if !params.is_intermediate() {
        rep.say("warning: parameters outside the intermediate range; F_T is applied formally");
    }
    let t = cfg.t_scale;
    let l = cfg.box_half_width.unwrap_or(cfg.box_factor * t.powf(1.0 / params.alpha));
    let centering = match cfg.centering.as_deref() {
        Some("lebesgue") => Centering::Lebesgue,
        Some(_) => Centering::Box,
        None if params.d == 1 => Centering::Box,
        None => Centering::Lebesgue,
    };
    let sim = Simulator::new(SimConfig {
        params,
        phi: phi(cfg)?,
        t_scale: t,
        horizon: cfg.horizon,
        dt: t * cfg.horizon / cfg.knots as f64,
        box_half_width: l,
        cap: cfg.cap,
        centering,
        offspring_cutoff: cfg.offspring_cutoff,
    })?;
    let records = sim.run_ensemble(cfg.replicates, RngStream::new(cfg.seed, 0))?;
    let mut finals = Vec::new();
    for r in &records {
        let path = rescaled_fluctuation(r, &params, t)?;
        let last = path[path.len() - 1].1;
        if !r.flagged {
            finals.push(last);
        }
        let mut body = json!({
            "replicate": r.replicate,
            "flagged": r.flagged,
            "flag_reason": r.flag_reason,
            "initial_count": r.initial_count,
            "peak_population": r.peak_population,
            "x_final": last,
        });
        if cfg.paths {
            body["path"] = json!(path);
        }
        rep.record("replicate", body)?;
    }
    let flagged = records.len() - finals.len();
    rep.say(format!("T = {t}, box half-width {l:.4}, centering {centering:?}"));
    rep.say(format!("flagged replicates: {flagged} of {} ({:.2}%)", records.len(), 100.0 * flagged as f64 / records.len().max(1) as f64));
    if finals.len() >= 2 {
        let (m, sd) = mean_sd(&finals);
        rep.say(format!("<X_T({}), phi>: mean {m:.5e}, sd {sd:.5e} over {} replicates", cfg.horizon, finals.len()));
    }
    Ok(Status::Ok)
}

pub fn limit(cfg: &RunConfig, rep: &mut Report) -> Outcome {
    let params = params(cfg)?;
    let consts = limit_constants(&params);
    rep.record("constants", consts)?;
    rep.say(format!("K = {:.10}, K_1 = {:.10}, H = {:.10}", consts.k, consts.k1, consts.h));
    let mut times = cfg.times.clone();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let grid = build_kernel_grid(&params, &times, &KernelResolution::default())?;
    let paths = sample_xi_paths(&grid, cfg.samples, RngStream::new(cfg.seed, 0));
    if cfg.paths {
        for (i, p) in paths.iter().enumerate() {
            rep.record("path", json!({ "sample": i, "times": times, "xi": p }))?;
        }
    }
    let quad = CharfnQuadrature::default();
    for (j, &t) in times.iter().enumerate() {
        let c = -log_charfn(&params, &[t], &[1.0], &quad)?.re;
        let zmax = (1.6 / c).powf(1.0 / (1.0 + params.beta));
        let zs: Vec<f64> = (0..cfg.z_points)
            .map(|k| -zmax + 2.0 * zmax * k as f64 / (cfg.z_points - 1) as f64)
            .collect();
        let table = ecf(&paths.iter().map(|p| p[j]).collect::<Vec<_>>(), &zs)?;
        let exact = zs
            .iter()
            .map(|&z| log_charfn(&params, &[t], &[z], &quad).map(|l| l.exp()))
            .collect::<Result<Vec<_>, _>>()?;
        for ((z, e), x) in zs.iter().zip(&table.values).zip(&exact) {
            rep.record(
                "charfn",
                json!({ "t": t, "z": z, "ecf_re": e.re, "ecf_im": e.im, "exact_re": x.re, "exact_im": x.im }),
            )?;
        }
        let dist = table.values.iter().zip(&exact).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        rep.say(format!("xi_{t}: ECF distance {dist:.4e} (1/sqrt(N) = {:.4e})", table.band()));
    }
    Ok(Status::Ok)
}

pub fn codiff(cfg: &RunConfig, rep: &mut Report) -> Outcome {
    let params = params(cfg)?;
    params.require_intermediate()?;
    let [u, v, s, t] = cfg.query;
    let q = CodiffQuery::new(u, v, s, t, cfg.z1, cfg.z2)?;
    let quad = CodiffQuadrature { r_nodes: cfg.r_nodes, rho_panel: cfg.rho_panel, rel_tol: cfg.rel_tol };
    let r = codiff_sweep(&params, &q, &log_grid(cfg.t_min, cfg.t_max, cfg.t_points), &quad)?;
    for i in 0..r.t_grid.len() {
        rep.record(
            "codifference",
            json!({
                "T": r.t_grid[i],
                "d_plus": r.d_plus[i],
                "d_minus": r.d_minus[i],
                "err_plus": r.err_plus[i],
                "err_minus": r.err_minus[i],
            }),
        )?;
    }
    for e in &r.envelopes {
        rep.record("envelope", e)?;
    }
    rep.record("fit", json!({ "plus": r.fit_plus, "minus": r.fit_minus, "kappa": r.kappa_theory, "regime": r.regime.number() }))?;
    rep.say(format!("κ = {} (regime {})", r.kappa_theory, r.regime.number()));
    rep.say(format!(
        "fitted slope of D+: {:.4} ± {:.1e}; of D-: {:.4}",
        r.fit_plus.slope, r.fit_plus.stderr, r.fit_minus.slope
    ));
    let mut ok = true;
    for e in &r.envelopes {
        ok &= e.holds;
        rep.say(format!(
            "envelope {} with exponent {:.4}: worst ratio {:.3} (slack {}) {}",
            e.kind,
            e.exponent,
            e.worst_ratio,
            e.slack,
            if e.holds { "holds" } else { "FAILS" }
        ));
    }
    Ok(if ok { Status::Ok } else { Status::Failed })
}

pub fn bridge(cfg: &RunConfig, rep: &mut Report) -> Outcome {
    let params = params(cfg)?;
    let (phi, psi) = (phi(cfg)?, psi(cfg)?);
    let t = cfg.t_scale;
    let trunc = box_half_width_for(&params, &phi, t, cfg.bridge_eps)?;
    let l = cfg.box_half_width.unwrap_or(trunc.half_width);
    let grids = VtGrids { half_width: 60f64.max(1.3 * l), nx: cfg.vt_nx, nt: cfg.vt_nt, ..Default::default() };
    let vt = solve_vt(&params, &phi, &psi, t, &grids)?;
    let lv = laplace_functional(&vt, Some(l))?;
    let target = lv.box_value().expect("box requested");
    rep.record(
        "integral_equation",
        json!({
            "box_half_width": l,
            "truncation_bound": trunc.bound,
            "value_box": target,
            "value_whole_line": lv.value,
            "exponent": lv.exponent,
            "exponent_mass_balance": lv.exponent_balance,
            "picard_substitutions": vt.iterations,
            "invariant_violation": vt.invariant_violation,
        }),
    )?;
    let sim = Simulator::new(SimConfig {
        params,
        phi,
        t_scale: t,
        horizon: 1.0,
        dt: t / cfg.knots as f64,
        box_half_width: l,
        cap: cfg.cap,
        centering: Centering::Box,
        offspring_cutoff: cfg.offspring_cutoff,
    })?;
    let records = sim.run_ensemble(cfg.replicates, RngStream::new(cfg.seed, 0))?;
    let (mut samples, mut flagged, mut coarse) = (Vec::new(), 0, 0);
    for r in &records {
        let p = space_time_pairing(&rescaled_fluctuation(r, &params, t)?, &psi, 1e-2)?;
        flagged += r.flagged as usize;
        coarse += p.flagged as usize;
        samples.push((-p.value).exp());
    }
    if samples.len() < 2 {
        return Err(Error::InvalidParameter("the bridge needs at least two replicates".into()).into());
    }
    let (m, sd) = mean_sd(&samples);
    let se = sd / (samples.len() as f64).sqrt();
    let z = (m - target).abs() / se;
    let pass = z < cfg.bridge_sigmas && vt.invariant_violation < 1e-12;
    rep.record(
        "monte_carlo",
        json!({ "value": m, "standard_error": se, "replicates": samples.len(), "flagged": flagged,
                "pairings_flagged": coarse, "z_score": z, "pass": pass }),
    )?;
    rep.say(format!("integral equation (box): {target:.6}; whole line: {:.6}", lv.value));
    rep.say(format!("Monte Carlo: {m:.6} ± {se:.6} ({} replicates, {flagged} flagged)", samples.len()));
    rep.say(format!("|MC - integral equation| = {z:.2} standard errors (limit {})", cfg.bridge_sigmas));
    Ok(if pass { Status::Ok } else { Status::Failed })
}

pub fn verify(cfg: &RunConfig, rep: &mut Report) -> Outcome {
    let (mut failed, mut nonconv) = (false, false);
    for &id in &cfg.criteria {
        let o = acceptance::run(id);
        eprintln!("{}", o.line());
        rep.record("criterion", &o)?;
        rep.say(o.line().replace(&format!(" ({:.1} s)", o.seconds), ""));
        if !o.passed {
            if o.non_convergence {
                nonconv = true;
            } else {
                failed = true;
            }
        }
    }
    Ok(if failed {
        Status::Failed
    } else if nonconv {
        Status::NonConvergence
    } else {
        Status::Ok
    })
}

pub fn regime(cfg: &RunConfig, rep: &mut Report) -> Outcome {
    let ds = cfg.d_grid.clone().unwrap_or_else(|| vec![cfg.d as f64]);
    let alphas = cfg.alpha_grid.clone().unwrap_or_else(|| vec![cfg.alpha]);
    let betas = cfg.beta_grid.clone().unwrap_or_else(|| vec![cfg.beta]);
    let single = ds.len() * alphas.len() * betas.len() == 1;
    for &d in &ds {
        for &alpha in &alphas {
            for &beta in &betas {
                if !(d > 0.0 && alpha > 0.0 && alpha <= 2.0 && beta > 0.0 && beta <= 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "need d > 0, 0 < alpha <= 2, 0 < beta <= 1, got ({d}, {alpha}, {beta})"
                    ))
                    .into());
                }
                let inter = intermediate(d, alpha, beta);
                if !inter && !cfg.allow_boundary {
                    let why = format!(
                        "alpha/beta < d < alpha(1+beta)/beta violated: {} < {d} < {}",
                        alpha / beta,
                        alpha * (1.0 + beta) / beta
                    );
                    if single {
                        return Err(Error::InvalidParameter(why).into());
                    }
                    rep.record("regime", json!({ "d": d, "alpha": alpha, "beta": beta, "intermediate": false, "violated": why }))?;
                    continue;
                }
                let (kappa, reg) = kappa_formula(d, alpha, beta);
                let h = norming_exponent(d, alpha, beta);
                rep.record(
                    "regime",
                    json!({ "d": d, "alpha": alpha, "beta": beta, "intermediate": inter,
                            "kappa": kappa, "regime": reg.number(), "H": h }),
                )?;
                rep.say(format!("d = {d}, alpha = {alpha}, beta = {beta}: κ = {kappa}, regime {}, H = {h}", reg.number()));
            }
        }
    }
    for &gamma in &cfg.gamma_grid {
        for &beta in &betas {
            match gamma_plane_classify(gamma, beta) {
                Ok((kappa, region)) => {
                    rep.record("plane", json!({ "gamma": gamma, "beta": beta, "kappa": kappa, "region": region }))?
                }
                Err(e) => rep.record("plane", json!({ "gamma": gamma, "beta": beta, "outside": e.to_string() }))?,
            }
        }
    }
    Ok(Status::Ok)
}
