//! Event-driven simulation of the branching system and its occupation time.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::population::{next_clock, sample_initial_population, Particle, PopulationState, MAX_DIM};
use crate::branching_law::OffspringTable;
use crate::error::{invalid, Error, Result};
use crate::model::{ModelParams, TestFunction};
use crate::numerics::quadrature::GaussLegendre;
use crate::numerics::special::erfc;
use crate::rng::RngStream;
use crate::stable_density::DensityEvaluator;
use crate::stable_sampling::IsotropicStable;

/// What is subtracted from `<N_s, phi>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Centering {
    /// `lambda(phi)`, the mean of the untruncated system.
    Lebesgue,
    /// The exact mean of the system started from the box only (d = 1). Makes
    /// the truncated record mean-zero, leaving only a fluctuation bias.
    Box,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    pub params: ModelParams,
    pub phi: TestFunction,
    /// Scaling parameter `T`.
    pub t_scale: f64,
    /// Horizon `tau`: the record covers `s in [0, T tau]`.
    pub horizon: f64,
    /// Requested knot spacing in `s`; the used spacing divides `T tau` evenly.
    pub dt: f64,
    pub box_half_width: f64,
    pub cap: usize,
    pub centering: Centering,
    pub offspring_cutoff: usize,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.phi.dim() != self.params.d {
            return Err(invalid(format!(
                "test function lives in R^{} but d = {}",
                self.phi.dim(),
                self.params.d
            )));
        }
        if !(self.t_scale > 0.0 && self.horizon > 0.0) {
            return Err(invalid("T and tau must be positive"));
        }
        if !(self.dt > 0.0 && self.dt <= self.t_scale * self.horizon) {
            return Err(invalid(format!("dt must lie in (0, T tau], got {}", self.dt)));
        }
        if self.centering == Centering::Box && self.params.d != 1 {
            return Err(invalid("box centering is implemented for d = 1 only"));
        }
        if self.params.d > MAX_DIM {
            return Err(invalid(format!("particle simulation supports d <= {MAX_DIM}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupationRecord {
    pub replicate: u64,
    pub master_seed: u64,
    pub stream_id: u64,
    /// Observation times `s_j = j dt` on `[0, T tau]`.
    pub times: Vec<f64>,
    /// Centered cumulative occupation `int_0^{s_j} <N_s - m(s), phi> ds`.
    pub values: Vec<f64>,
    pub dt: f64,
    pub params: ModelParams,
    pub t_scale: f64,
    pub initial_count: usize,
    pub peak_population: usize,
    pub flagged: bool,
    pub flag_reason: Option<String>,
}

/// A prepared simulator: offspring table, motion law, knots and the
/// centering curve are shared by all replicates.
#[derive(Debug, Clone)]
pub struct Simulator {
    config: SimConfig,
    table: OffspringTable,
    motion: IsotropicStable,
    knots: Vec<f64>,
    mean_curve: Vec<f64>,
}

impl Simulator {
    pub fn new(config: SimConfig) -> Result<Self> {
        config.validate()?;
        let p = config.params;
        let total = config.t_scale * config.horizon;
        let n = (total / config.dt).round().max(1.0) as usize;
        let dt = total / n as f64;
        let knots: Vec<f64> = (0..=n).map(|j| j as f64 * dt).collect();
        let mean_curve = match config.centering {
            Centering::Lebesgue => vec![config.phi.integral(); n + 1],
            Centering::Box => {
                let ev = DensityEvaluator::shared(p.alpha, 1.0)?;
                knots
                    .iter()
                    .map(|&s| box_mean(&ev, &config.phi, config.box_half_width, s))
                    .collect::<Result<_>>()?
            }
        };
        Ok(Self {
            table: OffspringTable::build(p.beta, config.offspring_cutoff, 1e-14)?,
            motion: IsotropicStable::new(p.alpha, p.d)?,
            config,
            knots,
            mean_curve,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// `E <N_s, phi>` under the chosen centering, at the knots.
    pub fn mean_curve(&self) -> &[f64] {
        &self.mean_curve
    }

    pub fn run(&self, replicate: u64, stream: RngStream) -> Result<OccupationRecord> {
        let cfg = &self.config;
        let mut rng = stream.rng();
        let mut pop = sample_initial_population(cfg.box_half_width, cfg.params.d, cfg.params.v, cfg.cap, &mut rng)?;
        let n = self.knots.len() - 1;
        let dt = if n > 0 { self.knots[1] } else { 0.0 };
        let mut values = Vec::with_capacity(n + 1);
        values.push(0.0);
        let initial_count = pop.len();
        let mut peak = pop.len();
        let mut prev = self.pairing(&pop) - self.mean_curve[0];
        let mut acc = 0.0;
        let mut flag_reason = None;
        for j in 0..n {
            if let Err(e) = self.advance(&mut pop, self.knots[j + 1], &mut rng) {
                flag_reason = Some(e.to_string());
                break;
            }
            peak = peak.max(pop.len());
            let cur = self.pairing(&pop) - self.mean_curve[j + 1];
            acc += 0.5 * dt * (prev + cur);
            values.push(acc);
            prev = cur;
        }
        Ok(OccupationRecord {
            replicate,
            master_seed: stream.master_seed,
            stream_id: stream.stream_id,
            times: self.knots[..values.len()].to_vec(),
            values,
            dt,
            params: cfg.params,
            t_scale: cfg.t_scale,
            initial_count,
            peak_population: peak,
            flagged: flag_reason.is_some(),
            flag_reason,
        })
    }

    /// Replicates `0..n` on child streams of `stream`, in parallel; the output
    /// order and content do not depend on the thread count.
    pub fn run_ensemble(&self, n: u64, stream: RngStream) -> Result<Vec<OccupationRecord>> {
        (0..n).into_par_iter().map(|i| self.run(i, stream.child(i))).collect()
    }

    fn pairing(&self, pop: &PopulationState) -> f64 {
        let phi = &self.config.phi;
        let d = pop.dim;
        let c = phi.center();
        let inv = 0.5 / (phi.width() * phi.width());
        let mut s = 0.0;
        for p in &pop.particles {
            let mut r2 = 0.0;
            for k in 0..d {
                let z = p.x[k] - c[k];
                r2 += z * z;
            }
            let e = r2 * inv;
            if e < 745.0 {
                s += (-e).exp();
            }
        }
        s * phi.amplitude()
    }

    /// Moves every particle to time `t_end`, resolving branching events in
    /// between. Offspring start at the parent's position with fresh clocks.
    fn advance<R: Rng + ?Sized>(&self, pop: &mut PopulationState, t_end: f64, rng: &mut R) -> Result<()> {
        let v = self.config.params.v;
        let d = pop.dim;
        let mut next: Vec<Particle> = Vec::with_capacity(pop.len());
        // (particle, current time)
        let mut stack: Vec<(Particle, f64)> = Vec::new();
        let t0 = pop.time;
        for p in pop.particles.drain(..) {
            stack.push((p, t0));
            while let Some((mut q, mut t)) = stack.pop() {
                loop {
                    if q.clock > t_end {
                        if t_end > t {
                            self.motion.advance(t_end - t, &mut q.x[..d], rng);
                        }
                        next.push(q);
                        break;
                    }
                    if q.clock > t {
                        self.motion.advance(q.clock - t, &mut q.x[..d], rng);
                    }
                    t = q.clock;
                    let k = self.table.sample(rng)?;
                    if k == 0 {
                        break;
                    }
                    if next.len() + stack.len() + k as usize > pop.cap {
                        return Err(Error::CapabilityLimit(format!(
                            "population cap {} exceeded at time {t:.6}",
                            pop.cap
                        )));
                    }
                    for _ in 1..k {
                        let child = Particle { x: q.x, clock: next_clock(t, v, rng) };
                        stack.push((child, t));
                    }
                    q.clock = next_clock(t, v, rng);
                }
            }
        }
        pop.particles = next;
        pop.time = t_end;
        Ok(())
    }
}

pub fn simulate_occupation(config: &SimConfig, stream: RngStream) -> Result<OccupationRecord> {
    Simulator::new(config.clone())?.run(stream.stream_id, stream)
}

/// `E <N_s, phi>` for a unit Poisson start on `[-L, L]` (d = 1):
/// `int phi(y) P(y + X_s in [-L, L]) dy`.
pub fn box_mean(ev: &DensityEvaluator, phi: &TestFunction, half_width: f64, s: f64) -> Result<f64> {
    if phi.dim() != 1 || ev.dim() != 1.0 {
        return Err(invalid("box mean is implemented for d = 1"));
    }
    let (c, w, a) = (phi.center()[0], phi.width(), phi.amplitude());
    let l = half_width;
    if s == 0.0 {
        let r = w * std::f64::consts::SQRT_2;
        return Ok(phi.integral() * 0.5 * (erfc((-l - c) / r) - erfc((l - c) / r)));
    }
    let scale = s.powf(-1.0 / ev.alpha());
    let rule = GaussLegendre::new(20);
    // The integrand steepens into steps at y = +-L for small s; split there.
    let span = 10.0 * w;
    let mut edges: Vec<f64> = (0..=10).map(|k| c - span + k as f64 * 0.2 * span).collect();
    edges.extend([-l, l].into_iter().filter(|&e| e > c - span && e < c + span));
    edges.sort_by(f64::total_cmp);
    let mut total = 0.0;
    for win in edges.windows(2) {
        total += rule.integrate(win[0], win[1], |y| {
            let z = (y - c) / w;
            let hit = ev.line_cdf((l - y) * scale).unwrap() - ev.line_cdf((-l - y) * scale).unwrap();
            a * (-0.5 * z * z).exp() * hit
        });
    }
    Ok(total)
}

/// `<N^x_s, phi>` at the given (increasing) times for the branching system
/// started from one particle at `x`; `None` when the cap was hit.
pub fn simulate_single_ancestor(
    params: &ModelParams,
    x: &[f64],
    phi: &TestFunction,
    times: &[f64],
    cap: usize,
    stream: RngStream,
) -> Result<Option<Vec<f64>>> {
    let cfg = SimConfig {
        params: *params,
        phi: phi.clone(),
        t_scale: 1.0,
        horizon: 1.0,
        dt: 1.0,
        box_half_width: 1.0,
        cap,
        centering: Centering::Lebesgue,
        offspring_cutoff: 1 << 12,
    };
    if x.len() != params.d {
        return Err(invalid("ancestor position has the wrong dimension"));
    }
    let sim = Simulator::new(cfg)?;
    let mut rng = stream.rng();
    let mut p = Particle { x: [0.0; MAX_DIM], clock: next_clock(0.0, params.v, &mut rng) };
    p.x[..x.len()].copy_from_slice(x);
    let mut pop = PopulationState { dim: params.d, time: 0.0, particles: vec![p], cap };
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        if t < pop.time {
            return Err(invalid("observation times must be increasing"));
        }
        match sim.advance(&mut pop, t, &mut rng) {
            Ok(()) => out.push(sim.pairing(&pop)),
            Err(Error::CapabilityLimit(_)) => return Ok(None),
            Err(e) => return Err(e),
        }
    }
    Ok(Some(out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(v: f64) -> SimConfig {
        SimConfig {
            params: ModelParams::new(1, 1.5, 0.5, v).unwrap(),
            phi: TestFunction::gaussian(vec![0.0], 1.0, 1.0).unwrap(),
            t_scale: 1.0,
            horizon: 1.0,
            dt: 0.1,
            box_half_width: 8.0,
            cap: 100_000,
            centering: Centering::Lebesgue,
            offspring_cutoff: 1 << 12,
        }
    }

    #[test]
    fn record_starts_at_zero_and_is_reproducible() {
        let sim = Simulator::new(config(1.0)).unwrap();
        let a = sim.run(3, RngStream::new(5, 3)).unwrap();
        let b = sim.run(3, RngStream::new(5, 3)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.values[0], 0.0);
        assert_eq!(a.times.len(), 11);
        assert!((a.times[10] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn box_mean_reduces_to_mass_inside() {
        let ev = DensityEvaluator::shared(1.5, 1.0).unwrap();
        let phi = TestFunction::gaussian(vec![0.5], 1.0, 2.0).unwrap();
        // wide box keeps almost all of the mass
        let m = box_mean(&ev, &phi, 1e4, 1.0).unwrap();
        assert!((m / phi.integral() - 1.0).abs() < 1e-4);
        // small times approach the static value
        let m0 = box_mean(&ev, &phi, 2.0, 0.0).unwrap();
        let ms = box_mean(&ev, &phi, 2.0, 1e-8).unwrap();
        assert!((m0 - ms).abs() < 1e-4, "{m0} {ms}");
    }

    #[test]
    fn tiny_cap_flags_instead_of_truncating() {
        let mut cfg = config(5.0);
        cfg.cap = 40;
        cfg.box_half_width = 10.0;
        cfg.horizon = 3.0;
        let sim = Simulator::new(cfg).unwrap();
        let recs = sim.run_ensemble(20, RngStream::new(1, 0)).unwrap();
        assert!(recs.iter().any(|r| r.flagged));
        assert!(recs.iter().filter(|r| r.flagged).all(|r| r.flag_reason.is_some()));
    }
}
