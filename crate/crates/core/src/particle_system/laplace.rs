use serde::{Deserialize, Serialize};

use super::vt_solver::VtGrid;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplaceValue {
    /// `E exp(-<X~_T, Phi>)`.
    pub value: f64,
    /// `int int Psi_T v_T + V/(1+beta) int int v_T^(1+beta)`.
    pub exponent: f64,
    /// The same exponent through mass balance,
    /// `int (v^(1) - v_T)(x, T) dx` with `v^(1)` the first Picard iterate.
    pub exponent_balance: f64,
    /// Exponent of the system started from `[-L, L]` only (box centering).
    pub box_exponent: Option<f64>,
    /// Jensen's inequality gives `value >= 1` for the centered functional.
    pub flagged: bool,
}

impl LaplaceValue {
    pub fn box_value(&self) -> Option<f64> {
        self.box_exponent.map(f64::exp)
    }
}

pub fn laplace_functional(vt: &VtGrid, box_half_width: Option<f64>) -> Result<LaplaceValue> {
    let nt = vt.t.len() - 1;
    if nt < 1 {
        return Err(invalid("v_T grid has no time steps"));
    }
    let c = vt.params.v / (1.0 + vt.params.beta);
    let b1 = 1.0 + vt.params.beta;
    let dt = vt.t[1] - vt.t[0];
    let mut exponent = 0.0;
    for k in 0..=nt {
        let w = if k == 0 || k == nt { 0.5 * dt } else { dt };
        let s: f64 = vt.values[k]
            .iter()
            .zip(&vt.forcing[k])
            .map(|(&v, &p)| p * v + c * v.max(0.0).powf(b1))
            .sum();
        exponent += w * vt.h * s;
    }
    let last = vt.at_final_time();
    let first = &vt.first_iterate[nt];
    let exponent_balance: f64 = vt.h * first.iter().zip(last).map(|(a, b)| a - b).sum::<f64>();
    let box_exponent = box_half_width.map(|l| {
        vt.x.iter()
            .zip(first.iter().zip(last))
            .map(|(&x, (a, b))| {
                let lo = (x - 0.5 * vt.h).max(-l);
                let hi = (x + 0.5 * vt.h).min(l);
                (hi - lo).max(0.0) * (a - b)
            })
            .sum()
    });
    let value = exponent.exp();
    Ok(LaplaceValue { value, exponent, exponent_balance, box_exponent, flagged: value < 1.0 - 1e-9 })
}

#[cfg(test)]
mod tests {
    use super::super::vt_solver::{solve_vt, VtGrids};
    use super::*;
    use crate::model::{ModelParams, TestFunction, TimeProfile};

    #[test]
    fn zero_test_function_gives_one() {
        let p = ModelParams::new(1, 1.5, 0.5, 1.0).unwrap();
        let phi = TestFunction::gaussian(vec![0.0], 1.0, 0.0).unwrap();
        let grids = VtGrids { half_width: 20.0, nx: 200, nt: 10, ..Default::default() };
        let g = solve_vt(&p, &phi, &TimeProfile::Constant { level: 1.0 }, 1.0, &grids).unwrap();
        let l = laplace_functional(&g, Some(5.0)).unwrap();
        assert_eq!(l.value, 1.0);
        assert!(!l.flagged);
    }
}
