use rand::Rng;
use rand_distr::{Distribution, Exp, Poisson};

use crate::error::{invalid, Result};

/// Largest dimension the particle engine stores inline.
pub const MAX_DIM: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    pub x: [f64; MAX_DIM],
    /// Absolute time of the next branching event.
    pub clock: f64,
}

#[derive(Debug, Clone)]
pub struct PopulationState {
    pub dim: usize,
    pub time: f64,
    pub particles: Vec<Particle>,
    pub cap: usize,
}

impl PopulationState {
    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }
}

/// Exponential branching clock with rate `v`; `v = 0` never rings.
pub(crate) fn next_clock<R: Rng + ?Sized>(now: f64, v: f64, rng: &mut R) -> f64 {
    if v == 0.0 {
        f64::INFINITY
    } else {
        now + Exp::new(v).expect("positive rate").sample(rng)
    }
}

/// Poisson field with unit intensity on the box `[-L, L]^d`.
pub fn sample_initial_population<R: Rng + ?Sized>(
    half_width: f64,
    dim: usize,
    branching_rate: f64,
    cap: usize,
    rng: &mut R,
) -> Result<PopulationState> {
    if !(half_width > 0.0 && half_width.is_finite()) {
        return Err(invalid(format!("box half-width must be positive, got {half_width}")));
    }
    if dim == 0 || dim > MAX_DIM {
        return Err(invalid(format!("particle dimension must lie in 1..={MAX_DIM}, got {dim}")));
    }
    let mean = (2.0 * half_width).powi(dim as i32);
    if mean > 0.5 * cap as f64 {
        return Err(invalid(format!(
            "expected initial population {mean:.0} is too close to the cap {cap}; shrink the box or raise the cap"
        )));
    }
    let count = Poisson::new(mean).expect("positive mean").sample(rng) as usize;
    let mut particles = Vec::with_capacity(count);
    for _ in 0..count {
        let mut x = [0.0; MAX_DIM];
        for xi in x.iter_mut().take(dim) {
            *xi = rng.random_range(-half_width..half_width);
        }
        particles.push(Particle { x, clock: next_clock(0.0, branching_rate, rng) });
    }
    Ok(PopulationState { dim, time: 0.0, particles, cap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn unit_box_has_unit_mean() {
        let n = 10_000;
        let mut total = 0usize;
        for rep in 0..n {
            let mut rng = RngStream::new(11, rep).rng();
            let p = sample_initial_population(0.5, 1, 1.0, 1000, &mut rng).unwrap();
            assert!(p.particles.iter().all(|q| q.x[0].abs() <= 0.5 && q.clock > 0.0));
            total += p.len();
        }
        let mean = total as f64 / n as f64;
        assert!((mean - 1.0).abs() < 3.0 / (n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn rejects_bad_boxes() {
        let mut rng = RngStream::new(1, 1).rng();
        assert!(sample_initial_population(0.0, 1, 1.0, 100, &mut rng).is_err());
        assert!(sample_initial_population(100.0, 2, 1.0, 1000, &mut rng).is_err());
        assert!(sample_initial_population(1.0, 7, 1.0, 1000, &mut rng).is_err());
    }
}
