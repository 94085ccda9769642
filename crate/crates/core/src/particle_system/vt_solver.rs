//! The nonlinear Volterra equation for `v_T` behind the Laplace transform of
//! the rescaled occupation time (d = 1).
//!
//! Space: cell-centred grid on `[-L, L]`; the semigroup acts through cell
//! probabilities `P(X_tau in cell)` taken from the stable CDF, so it is
//! positive and mass-conserving up to leakage through the edges.
//! Time: the forcing is interpolated linearly between nodes and the kernel
//! is integrated exactly against the hat functions (product trapezoid).
//! Convolutions run through zero-padded FFTs.
//!
//! The fixed point is obtained by marching in time, solving the implicit
//! part at each node by successive substitution. The first two global
//! Picard iterates are kept: they bracket the solution.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{ModelParams, TestFunction, TimeProfile};
use crate::numerics::quadrature::GaussLegendre;
use crate::stable_density::DensityEvaluator;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VtGrids {
    /// Half-width of the space box.
    pub half_width: f64,
    /// Number of space cells.
    pub nx: usize,
    /// Number of time steps on `[0, T]`.
    pub nt: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for VtGrids {
    fn default() -> Self {
        Self { half_width: 60.0, nx: 2400, nt: 160, tol: 1e-13, max_iter: 200 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VtGrid {
    pub params: ModelParams,
    pub t_scale: f64,
    /// Cell centres.
    pub x: Vec<f64>,
    pub h: f64,
    /// Time nodes on `[0, T]`.
    pub t: Vec<f64>,
    /// `values[k][i] = v_T(x_i, t_k)`.
    pub values: Vec<Vec<f64>>,
    /// First Picard iterate `int_0^t T_{t-u} Psi_T(., T-u) du`, the upper
    /// bound of the solution.
    pub first_iterate: Vec<Vec<f64>>,
    /// Second Picard iterate, a lower bound.
    pub second_iterate: Vec<Vec<f64>>,
    /// Forcing `Psi_T(x_i, T - t_k)`.
    pub forcing: Vec<Vec<f64>>,
    /// Largest number of substitutions needed at one node.
    pub iterations: usize,
    /// Worst violation of `0 <= v <= 1` and of the bracket
    /// `second <= v <= first`.
    pub invariant_violation: f64,
}

impl VtGrid {
    pub fn at_final_time(&self) -> &[f64] {
        self.values.last().expect("non-empty time grid")
    }
}

struct Kernels {
    m: usize,
    nx: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// `B_1`, the weight of the node being solved for.
    b1: Vec<Complex64>,
    /// `A_n`, n = 1..=nt (index n-1).
    a: Vec<Vec<Complex64>>,
    /// `A_n + B_{n+1}`, n = 1..nt (index n-1).
    c: Vec<Vec<Complex64>>,
}

impl Kernels {
    fn build(ev: &DensityEvaluator, h: f64, nx: usize, nt: usize, dt: f64) -> Self {
        let m = (3 * nx).next_power_of_two();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(m);
        let inv = planner.plan_fft_inverse(m);
        let alpha = ev.alpha();
        let cells = |tau: f64| -> Vec<f64> {
            // P(X_tau in [(j - 1/2) h, (j + 1/2) h]) for j = -(nx-1)..=(nx-1)
            let s = tau.powf(-1.0 / alpha);
            let edges: Vec<f64> = (0..=2 * nx - 1)
                .map(|e| ev.line_cdf((e as f64 - nx as f64 + 0.5) * h * s).unwrap())
                .collect();
            edges.windows(2).map(|w| w[1] - w[0]).collect()
        };
        let rule = GaussLegendre::new(12);
        let spectrum = |w: Vec<f64>| -> Vec<Complex64> {
            let mut buf = vec![Complex64::new(0.0, 0.0); m];
            for (j, v) in w.into_iter().enumerate() {
                buf[j] = Complex64::new(v, 0.0);
            }
            fwd.process(&mut buf);
            buf
        };
        // A_n = int_0^dt (1 - s/dt) w_{n dt - s} ds, B_n = int_0^dt (s/dt) w_{n dt - s} ds
        let mut a = Vec::with_capacity(nt);
        let mut b = Vec::with_capacity(nt);
        for n in 1..=nt {
            let mut wa = vec![0.0; 2 * nx - 1];
            let mut wb = vec![0.0; 2 * nx - 1];
            if n == 1 {
                // tau = dt - s = dt u^p resolves the short-time scale tau^(1/alpha)
                let p = alpha.max(1.0);
                for (u, wu) in rule.mapped(0.0, 1.0) {
                    let tau = dt * u.powf(p);
                    let jac = dt * p * u.powf(p - 1.0) * wu;
                    let frac = 1.0 - tau / dt; // s/dt
                    for (j, c) in cells(tau).into_iter().enumerate() {
                        wa[j] += jac * (1.0 - frac) * c;
                        wb[j] += jac * frac * c;
                    }
                }
            } else {
                for (s, ws) in rule.mapped(0.0, dt) {
                    let tau = n as f64 * dt - s;
                    let frac = s / dt;
                    for (j, c) in cells(tau).into_iter().enumerate() {
                        wa[j] += ws * (1.0 - frac) * c;
                        wb[j] += ws * frac * c;
                    }
                }
            }
            a.push(spectrum(wa));
            b.push(spectrum(wb));
        }
        let c = (0..nt.saturating_sub(1))
            .map(|i| a[i].iter().zip(&b[i + 1]).map(|(x, y)| x + y).collect())
            .collect();
        Self { m, nx, fwd, inv, b1: b[0].clone(), a, c }
    }

    fn transform(&self, f: &[f64]) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.m];
        for (j, &v) in f.iter().enumerate() {
            buf[j] = Complex64::new(v, 0.0);
        }
        self.fwd.process(&mut buf);
        buf
    }

    fn back(&self, mut spec: Vec<Complex64>) -> Vec<f64> {
        self.inv.process(&mut spec);
        let norm = 1.0 / self.m as f64;
        (0..self.nx).map(|i| spec[i + self.nx - 1].re * norm).collect()
    }

    /// History part at node k: every contribution except `B_1 F_k`.
    fn history(&self, k: usize, f_hat: &[Vec<Complex64>]) -> Vec<Complex64> {
        let mut acc: Vec<Complex64> = self.a[k - 1].iter().zip(&f_hat[0]).map(|(x, y)| x * y).collect();
        for mi in 1..k {
            let ker = &self.c[k - mi - 1];
            for ((o, x), y) in acc.iter_mut().zip(ker).zip(&f_hat[mi]) {
                *o += x * y;
            }
        }
        acc
    }

    /// Applies the full discrete Volterra operator to a known forcing.
    fn apply(&self, forcing: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let f_hat: Vec<Vec<Complex64>> = forcing.iter().map(|f| self.transform(f)).collect();
        let mut out = vec![vec![0.0; self.nx]];
        for k in 1..forcing.len() {
            let mut acc = self.history(k, &f_hat);
            for ((o, x), y) in acc.iter_mut().zip(&self.b1).zip(&f_hat[k]) {
                *o += x * y;
            }
            out.push(self.back(acc));
        }
        out
    }
}

/// `Psi(1 - v) - V/(1+beta) v^(1+beta)`.
fn nonlinearity(psi: &[f64], v: &[f64], c: f64, beta: f64) -> Vec<f64> {
    psi.iter()
        .zip(v)
        .map(|(&p, &u)| {
            let u = u.max(0.0);
            p * (1.0 - u) - c * u.powf(1.0 + beta)
        })
        .collect()
}

pub fn solve_vt(
    params: &ModelParams,
    phi: &TestFunction,
    chi: &TimeProfile,
    t_scale: f64,
    grids: &VtGrids,
) -> Result<VtGrid> {
    params.validate()?;
    chi.validate()?;
    if params.d != 1 || phi.dim() != 1 {
        return Err(invalid("the v_T solver is implemented for d = 1"));
    }
    if grids.nx < 8 || grids.nt < 2 || !(grids.half_width > 0.0) {
        return Err(invalid("v_T grids need nx >= 8, nt >= 2 and a positive box"));
    }
    let f_t = params.norming(t_scale)?;
    let ev = DensityEvaluator::shared(params.alpha, 1.0)?;
    let nx = grids.nx;
    let h = 2.0 * grids.half_width / nx as f64;
    let x: Vec<f64> = (0..nx).map(|i| -grids.half_width + (i as f64 + 0.5) * h).collect();
    let dt = t_scale / grids.nt as f64;
    let t: Vec<f64> = (0..=grids.nt).map(|k| k as f64 * dt).collect();
    let phi_vals: Vec<f64> = x.iter().map(|&xi| phi.eval(&[xi]) / f_t).collect();
    // Psi_T(x, T - r) = phi_T(x) chi((T - r)/T)
    let forcing: Vec<Vec<f64>> = t
        .iter()
        .map(|&r| {
            let c = chi.chi(1.0 - r / t_scale);
            phi_vals.iter().map(|p| p * c).collect()
        })
        .collect();
    let ker = Kernels::build(&ev, h, nx, grids.nt, dt);
    let c = params.v / (1.0 + params.beta);
    let beta = params.beta;

    let mut values: Vec<Vec<f64>> = vec![vec![0.0; nx]];
    let mut f_hat: Vec<Vec<Complex64>> = vec![ker.transform(&nonlinearity(&forcing[0], &values[0], c, beta))];
    let mut worst_iter = 0;
    for k in 1..=grids.nt {
        let hist = ker.history(k, &f_hat);
        let mut v = values[k - 1].clone();
        let mut converged = false;
        let mut change = f64::INFINITY;
        for it in 1..=grids.max_iter {
            let fk = ker.transform(&nonlinearity(&forcing[k], &v, c, beta));
            let spec: Vec<Complex64> = hist.iter().zip(&ker.b1).zip(&fk).map(|((hh, b), f)| hh + b * f).collect();
            let next = ker.back(spec);
            change = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            v = next;
            if change <= grids.tol {
                worst_iter = worst_iter.max(it);
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NonConvergence {
                what: format!("successive substitution for v_T at time node {k}"),
                error_estimate: change,
            });
        }
        f_hat.push(ker.transform(&nonlinearity(&forcing[k], &v, c, beta)));
        values.push(v);
    }

    let first_iterate = ker.apply(&forcing);
    let second_forcing: Vec<Vec<f64>> =
        forcing.iter().zip(&first_iterate).map(|(p, v)| nonlinearity(p, v, c, beta)).collect();
    let second_iterate = ker.apply(&second_forcing);
    // round-off slack: values are O(sup Psi), tolerances absolute
    let mut violation: f64 = 0.0;
    for k in 0..values.len() {
        for i in 0..nx {
            let v = values[k][i];
            violation = violation
                .max(-v)
                .max(v - 1.0)
                .max(v - first_iterate[k][i])
                .max(second_iterate[k][i] - v);
        }
    }
    Ok(VtGrid {
        params: *params,
        t_scale,
        x,
        h,
        t,
        values,
        first_iterate,
        second_iterate,
        forcing,
        iterations: worst_iter,
        invariant_violation: violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_grids() -> VtGrids {
        VtGrids { half_width: 30.0, nx: 600, nt: 40, tol: 1e-14, max_iter: 100 }
    }

    #[test]
    fn zero_forcing_gives_zero() {
        let p = ModelParams::new(1, 1.5, 0.5, 1.0).unwrap();
        let phi = TestFunction::gaussian(vec![0.0], 1.0, 0.0).unwrap();
        let g = solve_vt(&p, &phi, &TimeProfile::Constant { level: 1.0 }, 2.0, &small_grids()).unwrap();
        assert!(g.values.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn first_iterate_matches_semigroup() {
        // v^(1)(x, T) = (1/F_T) int_0^T chi(u/T) (T_u phi)(x) du
        let p = ModelParams::new(1, 1.5, 0.5, 1.0).unwrap();
        let phi = TestFunction::gaussian(vec![0.0], 1.0, 1.0).unwrap();
        let chi = TimeProfile::Constant { level: 1.0 };
        let t_scale = 2.0;
        let g = solve_vt(&p, &phi, &chi, t_scale, &small_grids()).unwrap();
        let ev = DensityEvaluator::shared(1.5, 1.0).unwrap();
        let f_t = p.norming(t_scale).unwrap();
        let rule = GaussLegendre::new(24);
        for xi in [0.0, 1.3, 4.0] {
            let exact = rule.integrate(0.0, t_scale, |u| {
                chi.chi(u / t_scale) * ev.semigroup_apply(u, &phi, &[xi]).unwrap()
            }) / f_t;
            let i = g.x.iter().position(|&x| (x - xi).abs() < 0.5 * g.h + 1e-12).unwrap();
            // interpolate between cell centres
            let (x0, x1) = if g.x[i] <= xi { (i, i + 1) } else { (i - 1, i) };
            let w = (xi - g.x[x0]) / g.h;
            let approx = (1.0 - w) * g.first_iterate[40][x0] + w * g.first_iterate[40][x1];
            assert!((approx / exact - 1.0).abs() < 5e-3, "x={xi}: {approx} vs {exact}");
        }
        assert!(g.invariant_violation < 1e-12, "{}", g.invariant_violation);
    }
}
