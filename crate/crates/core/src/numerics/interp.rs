/// Values on a uniform grid `x0 + i h`, interpolated with local cubic
/// (four-point Lagrange) polynomials.
#[derive(Debug, Clone)]
pub struct UniformTable {
    pub x0: f64,
    pub h: f64,
    pub values: Vec<f64>,
}

impl UniformTable {
    pub fn new(x0: f64, h: f64, values: Vec<f64>) -> Self {
        assert!(values.len() >= 4, "cubic table needs at least four nodes");
        Self { x0, h, values }
    }

    pub fn x_min(&self) -> f64 {
        self.x0
    }

    pub fn x_max(&self) -> f64 {
        self.x0 + self.h * (self.values.len() - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        self.x0 + self.h * i as f64
    }

    /// Interpolated value; arguments outside the grid are clamped to the
    /// nearest interior stencil (callers handle out-of-range asymptotics).
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.values.len();
        let s = (x - self.x0) / self.h;
        let i = (s.floor() as isize).clamp(1, n as isize - 3) as usize;
        let t = s - i as f64;
        let (y0, y1, y2, y3) = (
            self.values[i - 1],
            self.values[i],
            self.values[i + 1],
            self.values[i + 2],
        );
        // Lagrange basis on nodes -1, 0, 1, 2.
        let l0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
        let l1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
        let l2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
        let l3 = (t + 1.0) * t * (t - 1.0) / 6.0;
        y0 * l0 + y1 * l1 + y2 * l2 + y3 * l3
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_cubics_exactly() {
        let f = |x: f64| 1.0 - 2.0 * x + 0.5 * x * x * x;
        let t = UniformTable::new(-1.0, 0.25, (0..20).map(|i| f(-1.0 + 0.25 * i as f64)).collect());
        for x in [-0.9, 0.13, 2.2, 3.6] {
            assert!((t.eval(x) - f(x)).abs() < 1e-12);
        }
    }
}
