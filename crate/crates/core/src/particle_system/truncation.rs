//! Choice of the initial box.
//!
//! A particle born outside `[-L, L]^d` can only put mass inside the ball
//! `B(c, r_phi)` carrying `phi` after a displacement of at least
//! `y = L - |c|_inf - r_phi`. Since the system is critical, the expected
//! number of such particles inside the ball at any time `s <= T tau` is at
//! most `vol(B) P(|X_{T tau}| > y)`. The box is the smallest one making that
//! bound `<= eps`. It bounds the expected contamination at each fixed time;
//! it is not an exact correction.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::{ModelParams, TestFunction};
use crate::numerics::special::gamma;
use crate::stable_density::DensityEvaluator;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationReport {
    pub half_width: f64,
    pub support_radius: f64,
    pub displacement: f64,
    pub eps: f64,
    /// The bound actually attained, `vol(B) P(|X_{T tau}| > displacement)`.
    pub bound: f64,
    pub expected_initial: f64,
}

pub fn box_half_width_for(params: &ModelParams, phi: &TestFunction, duration: f64, eps: f64) -> Result<TruncationReport> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid(format!("truncation eps must lie in (0, 1), got {eps}")));
    }
    if !(duration > 0.0) {
        return Err(invalid("truncation needs a positive time horizon"));
    }
    let d = params.dim();
    let ev = DensityEvaluator::shared(params.alpha, d)?;
    let r_phi = phi.support_radius(1e-12);
    let vol = std::f64::consts::PI.powf(0.5 * d) / gamma(0.5 * d + 1.0) * r_phi.powf(d);
    let scale = duration.powf(1.0 / params.alpha);
    let bound_at = |y: f64| vol * ev.radial_survival(y / scale);
    let (mut lo, mut hi) = (0.0, scale);
    while bound_at(hi) > eps {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            return Err(invalid("truncation rule does not terminate"));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if bound_at(mid) > eps {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-10 * hi {
            break;
        }
    }
    let c_inf = phi.center().iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let half_width = c_inf + r_phi + hi;
    Ok(TruncationReport {
        half_width,
        support_radius: r_phi,
        displacement: hi,
        eps,
        bound: bound_at(hi),
        expected_initial: (2.0 * half_width).powf(d),
    })
}
