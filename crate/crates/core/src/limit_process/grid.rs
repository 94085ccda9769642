//! Path sampling: the stable integral defining `xi` is discretized on
//! space-time cells `[r_j, r_{j+1}] x {rho_i <= |x| < rho_{i+1}}`. The
//! integrand is radial, so whole shells can be cells. Each cell receives one
//! totally skewed `(1+beta)`-stable draw with scale `vol^(1/(1+beta))`, shared
//! by all requested times, and the kernel is replaced on the cell by its
//! `(1+beta)`-power mean. The marginal law at each requested time is then
//! exactly stable with the scale given by the cell quadrature.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{integrability_value, Kernel};
use crate::error::{invalid, Result};
use crate::model::ModelParams;
use crate::numerics::quadrature::GaussLegendre;
use crate::numerics::special::sphere_area;
use crate::rng::RngStream;
use crate::stable_sampling::{standard_skewed_unchecked, SkewedStableSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelResolution {
    /// Uniform time cells on `[0, max t]` (requested times are added as nodes).
    pub time_cells: usize,
    /// Shell spacing in `ln rho`.
    pub shell_step: f64,
    /// Innermost shell radius relative to `dt^(1/alpha)`.
    pub rho_min_rel: f64,
    /// Admissible fraction of the kernel mass left outside the outer radius.
    pub mass_tol: f64,
}

impl Default for KernelResolution {
    fn default() -> Self {
        Self { time_cells: 40, shell_step: 0.15, rho_min_rel: 0.05, mass_tol: 1e-4 }
    }
}

impl KernelResolution {
    pub fn refined(&self) -> Self {
        Self {
            time_cells: 2 * self.time_cells,
            shell_step: 0.5 * self.shell_step,
            rho_min_rel: self.rho_min_rel,
            mass_tol: self.mass_tol,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelGrid {
    pub params: ModelParams,
    pub times: Vec<f64>,
    pub r_edges: Vec<f64>,
    /// Shell radii, starting at 0.
    pub rho_edges: Vec<f64>,
    /// Cell volumes, index `j * shells + i` for time cell `j` and shell `i`.
    pub volumes: Vec<f64>,
    /// Power-mean kernel values per requested time, same layout.
    pub values: Vec<Vec<f64>>,
    pub outer_radius: f64,
}

impl KernelGrid {
    pub fn shells(&self) -> usize {
        self.rho_edges.len() - 1
    }

    pub fn cells(&self) -> usize {
        self.volumes.len()
    }

    /// Law of the noise on cell `c`.
    pub fn cell_spec(&self, c: usize) -> Result<SkewedStableSpec> {
        SkewedStableSpec::new(1.0 + self.params.beta, self.volumes[c].powf(1.0 / (1.0 + self.params.beta)))
    }

    /// `sum_c g_c^(1+beta) vol_c`, the discretized `int int g_t^(1+beta)` for
    /// each requested time.
    pub fn scale_mass(&self) -> Vec<f64> {
        let p = 1.0 + self.params.beta;
        self.values
            .iter()
            .map(|g| g.iter().zip(&self.volumes).map(|(v, w)| v.powf(p) * w).sum())
            .collect()
    }
}

/// `int_{shell} rho^(d-1) g^(1+beta) d rho` in `ln rho`; the innermost shell
/// (lower radius 0) is continued by the small-radius power law.
fn shell_integral(kernel: &Kernel, beta: f64, tau: f64, lo: f64, hi: f64, rule: &GaussLegendre) -> f64 {
    let d = kernel.evaluator().dim();
    let alpha = kernel.evaluator().alpha();
    let p = 1.0 + beta;
    let f = |l: f64| {
        let rho = l.exp();
        rho.powf(d) * kernel.eval(tau, rho).powf(p)
    };
    let top = hi.ln();
    let bottom = if lo > 0.0 { lo.ln() } else { top.min(tau.powf(1.0 / alpha).ln()) - 12.0 };
    let n = ((top - bottom) / 0.5).ceil().max(1.0) as usize;
    let h = (top - bottom) / n as f64;
    let mut total: f64 = (0..n).map(|k| rule.integrate(bottom + k as f64 * h, bottom + (k + 1) as f64 * h, f)).sum();
    if lo == 0.0 {
        total += f(bottom) / kernel.small_exponent(beta);
    }
    total
}

pub fn build_kernel_grid(params: &ModelParams, times: &[f64], res: &KernelResolution) -> Result<KernelGrid> {
    params.validate()?;
    if times.is_empty() || times[0] < 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("requested times must satisfy 0 <= t_1 < ... < t_k"));
    }
    if res.time_cells == 0 || !(res.shell_step > 0.0) || !(res.rho_min_rel > 0.0) {
        return Err(invalid("kernel resolution needs positive cells, shell step and inner radius"));
    }
    let (alpha, beta, d) = (params.alpha, params.beta, params.dim());
    let kernel = Kernel::new(alpha, d)?;
    let t_max = *times.last().unwrap();
    if t_max == 0.0 {
        return Err(invalid("at least one requested time must be positive"));
    }
    let dt = t_max / res.time_cells as f64;
    let mut r_edges: Vec<f64> = (0..=res.time_cells).map(|j| j as f64 * dt).collect();
    r_edges.extend(times.iter().copied().filter(|&t| t > 0.0));
    r_edges.sort_by(f64::total_cmp);
    r_edges.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * t_max);

    // outer radius from the kernel mass at r = 0, the widest profile
    let total = integrability_value(alpha, beta, d, 1e8 * t_max.powf(1.0 / alpha), t_max)?;
    let mut outer = t_max.powf(1.0 / alpha);
    while (total - integrability_value(alpha, beta, d, outer, t_max)?) > res.mass_tol * total {
        outer *= 1.5;
    }
    let rho_min = res.rho_min_rel * dt.powf(1.0 / alpha);
    let n_shells = ((outer / rho_min).ln() / res.shell_step).ceil().max(1.0) as usize;
    let step = (outer / rho_min).ln() / n_shells as f64;
    let mut rho_edges = vec![0.0];
    rho_edges.extend((0..=n_shells).map(|i| rho_min * (i as f64 * step).exp()));

    let shells = rho_edges.len() - 1;
    let ball = sphere_area(d) / d;
    let mut volumes = Vec::with_capacity((r_edges.len() - 1) * shells);
    for w in r_edges.windows(2) {
        for s in rho_edges.windows(2) {
            volumes.push((w[1] - w[0]) * ball * (s[1].powf(d) - s[0].powf(d)));
        }
    }
    let r_rule = GaussLegendre::new(4);
    let rho_rule = GaussLegendre::new(4);
    let area = sphere_area(d);
    let p = 1.0 + beta;
    let values = times
        .iter()
        .map(|&t| {
            let mut g = vec![0.0; volumes.len()];
            for (j, w) in r_edges.windows(2).enumerate() {
                if w[0] >= t {
                    break;
                }
                // cells ending at t see the kernel vanish there; grade towards it
                let len = w[1] - w[0];
                for (i, s) in rho_edges.windows(2).enumerate() {
                    let mut acc = 0.0;
                    for (u, wu) in r_rule.mapped(0.0, 1.0) {
                        let tau = (t - w[1]) + len * u * u * u;
                        let jac = len * 3.0 * u * u * wu;
                        acc += jac * shell_integral(&kernel, beta, tau, s[0], s[1], &rho_rule);
                    }
                    let c = j * shells + i;
                    g[c] = (area * acc / volumes[c]).powf(1.0 / p);
                }
            }
            g
        })
        .collect();
    Ok(KernelGrid { params: *params, times: times.to_vec(), r_edges, rho_edges, volumes, values, outer_radius: outer })
}

/// One path `(xi_{t_1}, ..., xi_{t_k})` from a single shared noise field.
pub fn sample_xi(grid: &KernelGrid, stream: RngStream) -> Vec<f64> {
    let index = 1.0 + grid.params.beta;
    let mut rng = stream.rng();
    let mut out = vec![0.0; grid.times.len()];
    for c in 0..grid.cells() {
        let m = grid.volumes[c].powf(1.0 / index) * standard_skewed_unchecked(index, &mut rng);
        for (o, g) in out.iter_mut().zip(&grid.values) {
            *o += g[c] * m;
        }
    }
    out
}

/// `n` independent paths on child streams, in parallel.
pub fn sample_xi_paths(grid: &KernelGrid, n: u64, stream: RngStream) -> Vec<Vec<f64>> {
    (0..n).into_par_iter().map(|i| sample_xi(grid, stream.child(i))).collect()
}

#[cfg(test)]
mod tests {
    use super::super::{log_charfn, CharfnQuadrature};
    use super::*;

    #[test]
    fn scale_mass_matches_characteristic_function() {
        let p = ModelParams::new(3, 1.2, 0.45, 1.0).unwrap();
        let g = build_kernel_grid(&p, &[0.0, 0.5, 1.0], &KernelResolution::default()).unwrap();
        let mass = g.scale_mass();
        assert_eq!(mass[0], 0.0);
        for (k, &t) in [0.5, 1.0].iter().enumerate() {
            let l = log_charfn(&p, &[t], &[1.0], &CharfnQuadrature::default()).unwrap();
            assert!((mass[k + 1] / -l.re - 1.0).abs() < 2e-3, "t={t}: {} vs {}", mass[k + 1], -l.re);
        }
        assert!(g.volumes.iter().all(|&v| v > 0.0));
        assert!(g.values.iter().flatten().all(|&v| v >= 0.0 && v.is_finite()));
    }

    #[test]
    fn zero_time_path_is_zero() {
        let p = ModelParams::new(3, 1.2, 0.45, 1.0).unwrap();
        let g = build_kernel_grid(&p, &[0.0, 1.0], &KernelResolution { time_cells: 8, ..Default::default() }).unwrap();
        let x = sample_xi(&g, RngStream::new(3, 0));
        assert_eq!(x[0], 0.0);
        assert!(x[1] != 0.0);
    }
}
