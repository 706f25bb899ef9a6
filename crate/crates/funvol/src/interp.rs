//! Monotone cubic (Fritsch-Carlson) interpolation on non-uniform grids.
//!
//! Used for sampled densities on log-spaced grids. The limiter guarantees the
//! interpolant preserves local monotonicity, which keeps spurious oscillation
//! out of quadratures near the support boundary.

/// Piecewise cubic Hermite interpolant with shape-preserving slopes.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    /// Build from strictly increasing abscissae. Panics on fewer than two
    /// points or non-increasing `xs`.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        assert_eq!(xs.len(), ys.len());
        assert!(xs.len() >= 2, "need at least two nodes");
        for w in xs.windows(2) {
            assert!(w[1] > w[0], "abscissae must be strictly increasing");
        }
        let slopes = fritsch_carlson_slopes(&xs, &ys);
        MonotoneCubic { xs, ys, slopes }
    }

    pub fn min_x(&self) -> f64 {
        self.xs[0]
    }

    pub fn max_x(&self) -> f64 {
        *self.xs.last().unwrap()
    }

    /// Evaluate at `x`. Outside the node range the boundary value is held
    /// (clamped); callers handle support cut-offs themselves.
    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= *self.xs.last().unwrap() {
            return *self.ys.last().unwrap();
        }
        let i = self.segment_index(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        let (m0, m1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        y0 * (2.0 * t3 - 3.0 * t2 + 1.0)
            + m0 * (t3 - 2.0 * t2 + t)
            + y1 * (-2.0 * t3 + 3.0 * t2)
            + m1 * (t3 - t2)
    }

    /// Derivative of the interpolant at `x` (clamped outside the range).
    pub fn eval_derivative(&self, x: f64) -> f64 {
        if x <= self.xs[0] {
            return self.slopes[0];
        }
        if x >= *self.xs.last().unwrap() {
            return *self.slopes.last().unwrap();
        }
        let i = self.segment_index(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        let (m0, m1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let dt = (6.0 * t * t - 6.0 * t) * y0
            + (3.0 * t * t - 4.0 * t + 1.0) * m0
            + (-6.0 * t * t + 6.0 * t) * y1
            + (3.0 * t * t - 2.0 * t) * m1;
        dt / h
    }

    fn segment_index(&self, x: f64) -> usize {
        match self.xs.partition_point(|v| *v <= x) {
            0 => 0,
            p => (p - 1).min(self.xs.len() - 2),
        }
    }
}

fn fritsch_carlson_slopes(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut deltas = Vec::with_capacity(n - 1);
    for i in 0..n - 1 {
        deltas.push((ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]));
    }
    let mut m = vec![0.0; n];
    for i in 1..n - 1 {
        let (d0, d1) = (deltas[i - 1], deltas[i]);
        if d0 * d1 <= 0.0 {
            m[i] = 0.0;
        } else {
            // Weighted harmonic mean, monotonicity-safe. The weights
            // (h1, h0) cancel the first-order error term on non-uniform
            // grids (plain Fritsch-Butland weights do not when the spacing
            // jumps).
            let h0 = xs[i] - xs[i - 1];
            let h1 = xs[i + 1] - xs[i];
            m[i] = (h0 + h1) / (h1 / d0 + h0 / d1);
        }
    }
    // Second-order one-sided endpoint slopes with the usual shape limiter.
    m[0] = endpoint_slope(xs[1] - xs[0], xs[2] - xs[1], deltas[0], deltas[1]);
    m[n - 1] = endpoint_slope(
        xs[n - 1] - xs[n - 2],
        xs[n - 2] - xs[n - 3],
        deltas[n - 2],
        deltas[n - 3],
    );
    m
}

fn endpoint_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if m * d0 <= 0.0 {
        0.0
    } else if d1 * d0 <= 0.0 && m.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        m
    }
}
