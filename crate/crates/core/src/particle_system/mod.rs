//! Monte Carlo engine for the branching particle system and the
//! deterministic Laplace-functional oracle.

mod laplace;
mod population;
mod simulate;
mod truncation;
mod vt_solver;

pub use crate::model::{ModelParams, TestFunction, TimeProfile};
pub use laplace::{laplace_functional, LaplaceValue};
pub use population::{sample_initial_population, Particle, PopulationState, MAX_DIM};
pub use simulate::{
    box_mean, simulate_occupation, simulate_single_ancestor, Centering, OccupationRecord, SimConfig, Simulator,
};
pub use truncation::{box_half_width_for, TruncationReport};
pub use vt_solver::{solve_vt, VtGrid, VtGrids};

use crate::error::{Error, Result};

/// `F_T = T^((2 + beta - d beta / alpha) / (1 + beta))`.
pub fn norming_f(t: f64, params: &ModelParams) -> Result<f64> {
    params.norming(t)
}

/// `<X_T(t), phi>` on the record's grid, `t = s / T`.
pub fn rescaled_fluctuation(record: &OccupationRecord, params: &ModelParams, t: f64) -> Result<Vec<(f64, f64)>> {
    if record.params != *params || record.t_scale != t {
        return Err(Error::Mismatch(format!(
            "record was produced with {:?} at T = {}, not {:?} at T = {}",
            record.params, record.t_scale, params, t
        )));
    }
    let f = params.norming(t)?;
    Ok(record.times.iter().zip(&record.values).map(|(&s, &v)| (s / t, v / f)).collect())
}
