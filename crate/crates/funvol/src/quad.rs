//! One-dimensional adaptive Gauss-Kronrod quadrature and tensor-product
//! midpoint rules.
//!
//! The adaptive rule is a 7-15 point Gauss-Kronrod pair with bisection of the
//! segment carrying the largest error estimate. All nodes are interior, so
//! integrable endpoint singularities (up to the orders occurring in the
//! Hadwiger density classes) are handled by refinement alone.

use std::collections::BinaryHeap;

/// Kronrod-15 abscissae on [0, 1] side of the symmetric rule.
const XGK: [f64; 8] = [
    0.991_455_371_120_813,
    0.949_107_912_342_759,
    0.864_864_423_359_769,
    0.741_531_185_599_394,
    0.586_087_235_467_691,
    0.405_845_151_377_397,
    0.207_784_955_007_898,
    0.0,
];

/// Kronrod-15 weights matching `XGK`.
const WGK: [f64; 8] = [
    0.022_935_322_010_529,
    0.063_092_092_629_979,
    0.104_790_010_322_250,
    0.140_653_259_715_525,
    0.169_004_726_639_267,
    0.190_350_578_064_785,
    0.204_432_940_075_298,
    0.209_482_141_084_728,
];

/// Gauss-7 weights; the Gauss nodes are the odd-indexed entries of `XGK`.
const WG: [f64; 4] = [
    0.129_484_966_168_870,
    0.279_705_391_489_277,
    0.381_830_050_505_119,
    0.417_959_183_673_469,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
    pub converged: bool,
    pub evaluations: usize,
}

fn kronrod_segment<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut result_k = 0.0;
    let mut result_g = 0.0;
    for i in 0..8 {
        let dx = half * XGK[i];
        let fsum = if XGK[i] == 0.0 {
            f(center)
        } else {
            f(center - dx) + f(center + dx)
        };
        result_k += WGK[i] * fsum;
        if i % 2 == 1 {
            result_g += WG[i / 2] * fsum;
        }
    }
    result_k *= half;
    result_g *= half;
    (result_k, (result_k - result_g).abs())
}

#[derive(Debug)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Integrate `f` over `[a, b]` to absolute tolerance `abs_tol`.
///
/// Returns a non-converged result (never panics) when the segment budget is
/// exhausted; callers that treat divergence as data inspect `converged`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> QuadResult {
    integrate_with_budget(f, a, b, abs_tol, 4096)
}

pub fn integrate_with_budget<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    max_segments: usize,
) -> QuadResult {
    if !(b > a) {
        return QuadResult {
            value: 0.0,
            error_estimate: 0.0,
            converged: true,
            evaluations: 0,
        };
    }
    let mut evaluations = 15usize;
    let (v, e) = kronrod_segment(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment {
        a,
        b,
        value: v,
        error: e,
    });
    let mut total_error = e;
    let min_width = (b - a) * 1e-15;

    while total_error > abs_tol && heap.len() < max_segments {
        let worst = heap.pop().expect("heap nonempty");
        if worst.b - worst.a <= min_width {
            // Cannot refine further; put it back and stop.
            heap.push(worst);
            break;
        }
        let mid = 0.5 * (worst.a + worst.b);
        let (v1, e1) = kronrod_segment(&f, worst.a, mid);
        let (v2, e2) = kronrod_segment(&f, mid, worst.b);
        evaluations += 30;
        total_error += e1 + e2 - worst.error;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
    }

    let mut value = 0.0;
    let mut segs: Vec<&Segment> = heap.iter().collect();
    // Deterministic summation order independent of heap internals.
    segs.sort_by(|s, t| s.a.total_cmp(&t.a));
    for s in &segs {
        value += s.value;
    }
    QuadResult {
        value,
        error_estimate: total_error,
        converged: total_error <= abs_tol.max(1e-14 * value.abs() + 1e-300),
        evaluations,
    }
}

/// Axis-aligned box in `R^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len());
        BoxDomain { lo, hi }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn volume(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| (h - l).max(0.0))
            .product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(xi, (l, h))| *xi >= *l && *xi <= *h)
    }

    /// Smallest box containing both operands.
    pub fn hull(&self, other: &BoxDomain) -> BoxDomain {
        BoxDomain {
            lo: self
                .lo
                .iter()
                .zip(&other.lo)
                .map(|(a, b)| a.min(*b))
                .collect(),
            hi: self
                .hi
                .iter()
                .zip(&other.hi)
                .map(|(a, b)| a.max(*b))
                .collect(),
        }
    }

    pub fn intersect(&self, other: &BoxDomain) -> BoxDomain {
        BoxDomain {
            lo: self
                .lo
                .iter()
                .zip(&other.lo)
                .map(|(a, b)| a.max(*b))
                .collect(),
            hi: self
                .hi
                .iter()
                .zip(&other.hi)
                .map(|(a, b)| a.min(*b))
                .collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.lo.iter().zip(&self.hi).any(|(l, h)| h <= l)
    }
}

/// Composite midpoint rule on a tensor grid over `domain`.
///
/// Cells are visited in lexicographic order and summed sequentially, so the
/// result is bit-stable for a fixed grid.
pub fn midpoint_box<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    domain: &BoxDomain,
    points_per_axis: usize,
) -> f64 {
    let n = domain.dim();
    if n == 0 {
        // Zero-dimensional integral: the value at the single point.
        return f(&[]);
    }
    if domain.is_empty() || points_per_axis == 0 {
        return 0.0;
    }
    let steps: Vec<f64> = (0..n)
        .map(|i| (domain.hi[i] - domain.lo[i]) / points_per_axis as f64)
        .collect();
    let cell = steps.iter().product::<f64>();
    if cell == 0.0 {
        return 0.0;
    }
    let mut idx = vec![0usize; n];
    let mut x = vec![0.0; n];
    let mut sum = 0.0;
    loop {
        for i in 0..n {
            x[i] = domain.lo[i] + (idx[i] as f64 + 0.5) * steps[i];
        }
        sum += f(&x);
        // Advance the multi-index.
        let mut axis = n;
        while axis > 0 {
            axis -= 1;
            idx[axis] += 1;
            if idx[axis] < points_per_axis {
                break;
            }
            idx[axis] = 0;
            if axis == 0 {
                return sum * cell;
            }
        }
    }
}

/// Midpoint nodes of a 1-D segment, for callers that need the raw grid.
pub fn midpoint_nodes(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let h = (hi - lo) / count as f64;
    (0..count).map(|i| lo + (i as f64 + 0.5) * h).collect()
}
