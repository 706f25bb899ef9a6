//! Subspaces, polytopes and the small computational geometry kit behind
//! projection functions and subdifferentials.

use crate::error::{Error, Result};
use crate::quad::BoxDomain;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub const FRAME_ORTHO_TOL: f64 = 1e-12;

/// An orthonormal k-frame spanning a k-dimensional subspace of `R^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    frame: DMatrix<f64>,
}

impl Subspace {
    pub fn new(frame: DMatrix<f64>) -> Result<Self> {
        let k = frame.ncols();
        if k > frame.nrows() {
            return Err(Error::Dimension {
                expected: frame.nrows(),
                got: k,
            });
        }
        let gram = frame.transpose() * &frame;
        for i in 0..k {
            for j in 0..k {
                let expect = if i == j { 1.0 } else { 0.0 };
                if (gram[(i, j)] - expect).abs() > FRAME_ORTHO_TOL {
                    return Err(Error::precondition(format!(
                        "frame columns not orthonormal: gram[{i},{j}] = {}",
                        gram[(i, j)]
                    )));
                }
            }
        }
        Ok(Subspace { frame })
    }

    /// Span of a subset of coordinate axes.
    pub fn coordinate(n: usize, axes: &[usize]) -> Self {
        let mut frame = DMatrix::zeros(n, axes.len());
        for (col, &axis) in axes.iter().enumerate() {
            frame[(axis, col)] = 1.0;
        }
        Subspace { frame }
    }

    pub fn full(n: usize) -> Self {
        Subspace {
            frame: DMatrix::identity(n, n),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.frame.nrows()
    }

    pub fn dim(&self) -> usize {
        self.frame.ncols()
    }

    pub fn frame(&self) -> &DMatrix<f64> {
        &self.frame
    }

    /// Coordinates of the orthogonal projection of `x`, expressed in the
    /// frame basis.
    pub fn coords(&self, x: &DVector<f64>) -> DVector<f64> {
        self.frame.transpose() * x
    }

    /// Embed subspace coordinates back into `R^n`.
    pub fn lift(&self, s: &DVector<f64>) -> DVector<f64> {
        &self.frame * s
    }

    /// Distance from `x` to the subspace.
    pub fn off_subspace_distance(&self, x: &DVector<f64>) -> f64 {
        let proj = self.lift(&self.coords(x));
        (x - proj).norm()
    }

    /// Orthonormal basis of the orthogonal complement, built by
    /// Gram-Schmidt over the standard basis (deterministic).
    pub fn orthogonal_complement(&self) -> Subspace {
        let n = self.ambient_dim();
        let k = self.dim();
        let cols: Vec<DVector<f64>> = (0..k).map(|j| self.frame.column(j).into()).collect();
        let mut extra: Vec<DVector<f64>> = Vec::new();
        for axis in 0..n {
            if extra.len() == n - k {
                break;
            }
            let mut v = DVector::zeros(n);
            v[axis] = 1.0;
            // Two Gram-Schmidt sweeps for numerical safety.
            for _ in 0..2 {
                for c in cols.iter().chain(extra.iter()) {
                    let d = c.dot(&v);
                    v -= c * d;
                }
            }
            let norm = v.norm();
            if norm > 1e-8 {
                extra.push(v / norm);
            }
        }
        debug_assert_eq!(extra.len(), n - k);
        let mut frame = DMatrix::zeros(n, n - k);
        for (j, c) in extra.iter().enumerate() {
            frame.set_column(j, c);
        }
        Subspace { frame }
    }
}

/// Convex polytope given by its vertex list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolytopeDescriptor", into = "PolytopeDescriptor")]
pub struct Polytope {
    vertices: Vec<DVector<f64>>,
    affine_dim: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolytopeDescriptor {
    pub vertices: Vec<Vec<f64>>,
}

impl From<Polytope> for PolytopeDescriptor {
    fn from(p: Polytope) -> Self {
        PolytopeDescriptor {
            vertices: p
                .vertices
                .iter()
                .map(|v| v.iter().copied().collect())
                .collect(),
        }
    }
}

impl TryFrom<PolytopeDescriptor> for Polytope {
    type Error = Error;
    fn try_from(d: PolytopeDescriptor) -> Result<Self> {
        if d.vertices.is_empty() {
            return Err(Error::Descriptor("polytope needs at least one vertex".into()));
        }
        let dim = d.vertices[0].len();
        if d.vertices.iter().any(|v| v.len() != dim) {
            return Err(Error::Descriptor(
                "polytope vertices have mixed dimensions".into(),
            ));
        }
        Ok(Polytope::new(
            d.vertices.into_iter().map(DVector::from_vec).collect(),
        ))
    }
}

impl Polytope {
    pub fn new(vertices: Vec<DVector<f64>>) -> Self {
        assert!(!vertices.is_empty(), "polytope needs at least one vertex");
        let affine_dim = affine_rank(&vertices);
        Polytope {
            vertices,
            affine_dim,
        }
    }

    pub fn point(x: DVector<f64>) -> Self {
        Polytope::new(vec![x])
    }

    pub fn origin(n: usize) -> Self {
        Polytope::point(DVector::zeros(n))
    }

    /// Axis-aligned cube `[-half, half]^n` centered at the origin.
    pub fn cube(n: usize, half: f64) -> Self {
        let lo = vec![-half; n];
        let hi = vec![half; n];
        Polytope::from_box(&lo, &hi)
    }

    /// Box with the given corner coordinates.
    pub fn from_box(lo: &[f64], hi: &[f64]) -> Self {
        let n = lo.len();
        let mut vertices = Vec::with_capacity(1 << n);
        for mask in 0..(1usize << n) {
            let v = DVector::from_fn(n, |i, _| if mask >> i & 1 == 1 { hi[i] } else { lo[i] });
            vertices.push(v);
        }
        Polytope::new(vertices)
    }

    pub fn ambient_dim(&self) -> usize {
        self.vertices[0].len()
    }

    pub fn affine_dim(&self) -> usize {
        self.affine_dim
    }

    pub fn vertices(&self) -> &[DVector<f64>] {
        &self.vertices
    }

    /// Support function `h_P(y) = max_v <v, y>`.
    pub fn support(&self, y: &DVector<f64>) -> f64 {
        self.vertices
            .iter()
            .map(|v| v.dot(y))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Indices of vertices attaining the support value within `tol`.
    pub fn support_face(&self, y: &DVector<f64>, tol: f64) -> Vec<usize> {
        let h = self.support(y);
        self.vertices
            .iter()
            .enumerate()
            .filter(|(_, v)| v.dot(y) >= h - tol)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn bounding_box(&self) -> BoxDomain {
        let n = self.ambient_dim();
        let mut lo = vec![f64::INFINITY; n];
        let mut hi = vec![f64::NEG_INFINITY; n];
        for v in &self.vertices {
            for i in 0..n {
                lo[i] = lo[i].min(v[i]);
                hi[i] = hi[i].max(v[i]);
            }
        }
        BoxDomain::new(lo, hi)
    }

    /// Image under orthogonal projection onto a subspace (in subspace
    /// coordinates).
    pub fn project(&self, e: &Subspace) -> Polytope {
        Polytope::new(self.vertices.iter().map(|v| e.coords(v)).collect())
    }

    pub fn translate(&self, t: &DVector<f64>) -> Polytope {
        Polytope::new(self.vertices.iter().map(|v| v + t).collect())
    }

    pub fn scale(&self, a: f64) -> Polytope {
        Polytope::new(self.vertices.iter().map(|v| v * a).collect())
    }

    pub fn rotate(&self, rot: &DMatrix<f64>) -> Polytope {
        Polytope::new(self.vertices.iter().map(|v| rot * v).collect())
    }

    /// Minkowski sum by vertex sums (redundant vertices are harmless for
    /// support-function work).
    pub fn minkowski_sum(&self, other: &Polytope) -> Polytope {
        let mut vertices = Vec::with_capacity(self.vertices.len() * other.vertices.len());
        for a in &self.vertices {
            for b in &other.vertices {
                vertices.push(a + b);
            }
        }
        Polytope::new(vertices)
    }

    /// Membership tester with precomputed structure, for hot loops.
    pub fn membership(&self) -> MembershipTester {
        match self.ambient_dim() {
            1 => {
                let xs: Vec<f64> = self.vertices.iter().map(|v| v[0]).collect();
                MembershipTester::Interval {
                    lo: xs.iter().cloned().fold(f64::INFINITY, f64::min),
                    hi: xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                }
            }
            2 => {
                let pts: Vec<[f64; 2]> = self.vertices.iter().map(|v| [v[0], v[1]]).collect();
                MembershipTester::Polygon {
                    hull: convex_hull_2d(&pts),
                }
            }
            _ => MembershipTester::General {
                vertices: self.vertices.clone(),
            },
        }
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        self.membership().contains(x.as_slice(), tol)
    }

    /// Nearest point of the polytope and its distance.
    pub fn nearest_point(&self, x: &DVector<f64>) -> (DVector<f64>, f64) {
        nearest_point_in_hull(&self.vertices, x)
    }
}

fn affine_rank(vertices: &[DVector<f64>]) -> usize {
    if vertices.len() <= 1 {
        return 0;
    }
    let n = vertices[0].len();
    let base = &vertices[0];
    let mut m = DMatrix::zeros(n, vertices.len() - 1);
    for (j, v) in vertices.iter().skip(1).enumerate() {
        m.set_column(j, &(v - base));
    }
    let scale = m.amax().max(1.0);
    m.rank(1e-10 * scale)
}

/// Precomputed point-membership test.
#[derive(Debug, Clone)]
pub enum MembershipTester {
    Interval { lo: f64, hi: f64 },
    Polygon { hull: Vec<[f64; 2]> },
    General { vertices: Vec<DVector<f64>> },
}

impl MembershipTester {
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        match self {
            MembershipTester::Interval { lo, hi } => x[0] >= lo - tol && x[0] <= hi + tol,
            MembershipTester::Polygon { hull } => point_in_hull_2d(hull, [x[0], x[1]], tol),
            MembershipTester::General { vertices } => {
                let xv = DVector::from_column_slice(x);
                let (_, dist) = nearest_point_in_hull(vertices, &xv);
                dist <= tol
            }
        }
    }
}

/// Andrew's monotone chain; counter-clockwise hull, collinear points
/// dropped. Degenerate inputs give back the (deduplicated) point or
/// segment.
pub fn convex_hull_2d(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup_by(|a, b| a[0] == b[0] && a[1] == b[1]);
    let n = pts.len();
    if n <= 2 {
        return pts;
    }
    let cross = |o: &[f64; 2], a: &[f64; 2], b: &[f64; 2]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * n);
    for p in &pts {
        while hull.len() >= 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(*p);
    }
    let lower_len = hull.len() + 1;
    for p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len
            && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0.0
        {
            hull.pop();
        }
        hull.push(*p);
    }
    hull.pop();
    hull
}

/// Point-in-convex-polygon with tolerance (hull counter-clockwise).
pub fn point_in_hull_2d(hull: &[[f64; 2]], p: [f64; 2], tol: f64) -> bool {
    match hull.len() {
        0 => false,
        1 => (p[0] - hull[0][0]).hypot(p[1] - hull[0][1]) <= tol,
        2 => {
            let (a, b) = (hull[0], hull[1]);
            let ab = [b[0] - a[0], b[1] - a[1]];
            let ap = [p[0] - a[0], p[1] - a[1]];
            let len_sq = ab[0] * ab[0] + ab[1] * ab[1];
            let t = ((ap[0] * ab[0] + ap[1] * ab[1]) / len_sq).clamp(0.0, 1.0);
            let q = [a[0] + t * ab[0], a[1] + t * ab[1]];
            (p[0] - q[0]).hypot(p[1] - q[1]) <= tol
        }
        _ => {
            for i in 0..hull.len() {
                let a = hull[i];
                let b = hull[(i + 1) % hull.len()];
                let cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
                let edge_len = (b[0] - a[0]).hypot(b[1] - a[1]).max(1e-300);
                if cross / edge_len < -tol {
                    return false;
                }
            }
            true
        }
    }
}

/// Nearest point of `conv(vertices)` to `x` via away-step Frank-Wolfe with
/// exact line search (the objective is quadratic, so steps are closed
/// form).
pub fn nearest_point_in_hull(
    vertices: &[DVector<f64>],
    x: &DVector<f64>,
) -> (DVector<f64>, f64) {
    let m = vertices.len();
    debug_assert!(m > 0);
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, v) in vertices.iter().enumerate() {
        let d = (v - x).norm_squared();
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    let mut lambda = vec![0.0; m];
    lambda[best] = 1.0;
    let mut p = vertices[best].clone();

    for _ in 0..500 {
        let grad = &p - x;
        let mut fw = 0;
        let mut fw_val = f64::INFINITY;
        let mut away = usize::MAX;
        let mut away_val = f64::NEG_INFINITY;
        for (i, v) in vertices.iter().enumerate() {
            let g = grad.dot(v);
            if g < fw_val {
                fw_val = g;
                fw = i;
            }
            if lambda[i] > 0.0 && g > away_val {
                away_val = g;
                away = i;
            }
        }
        let gap = grad.dot(&p) - fw_val;
        if gap <= 1e-16 * (1.0 + best_d) {
            break;
        }
        let fw_dir = &vertices[fw] - &p;
        let away_dir = if away != usize::MAX {
            Some(&p - &vertices[away])
        } else {
            None
        };
        let prefer_away = match &away_dir {
            Some(d) => -grad.dot(d) > -grad.dot(&fw_dir),
            None => false,
        };
        if prefer_away {
            let d = away_dir.unwrap();
            let t_max = lambda[away] / f64::max(1.0 - lambda[away], 1e-300);
            let denom = d.norm_squared();
            if denom <= 0.0 {
                break;
            }
            let t = (-grad.dot(&d) / denom).clamp(0.0, t_max);
            if t <= 0.0 {
                break;
            }
            for l in lambda.iter_mut() {
                *l *= 1.0 + t;
            }
            lambda[away] -= t * 1.0;
            lambda[away] = lambda[away].max(0.0);
            p += &d * t;
        } else {
            let denom = fw_dir.norm_squared();
            if denom <= 0.0 {
                break;
            }
            let t = (-grad.dot(&fw_dir) / denom).clamp(0.0, 1.0);
            if t <= 0.0 {
                break;
            }
            for l in lambda.iter_mut() {
                *l *= 1.0 - t;
            }
            lambda[fw] += t;
            p += &fw_dir * t;
        }
    }
    let dist = (&p - x).norm();
    (p, dist)
}
