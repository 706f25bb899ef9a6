//! Pointwise lattice operations and subdifferentials of the
//! piecewise-linear variants.

use super::{ConvexFunction, Shape};
use crate::error::{Error, Result};
use crate::quad::BoxDomain;
use crate::rng::CounterRng;
use nalgebra::DVector;

/// Convexity acceptance tolerance for sampled midpoints.
pub const MIDPOINT_TOL: f64 = 1e-9;

/// Number of random segments probed by the convexity test.
pub const MIDPOINT_SAMPLES: usize = 10_000;

/// Result of the lattice construction: the maximum is always convex; the
/// minimum is returned only when it passes the sampled convexity test.
#[derive(Debug, Clone)]
pub struct LatticeOutcome {
    pub max: ConvexFunction,
    pub min: Option<ConvexFunction>,
}

/// Pointwise maximum and (when convex) minimum of a pair.
pub fn lattice_ops(u: &ConvexFunction, v: &ConvexFunction, seed: u64) -> Result<LatticeOutcome> {
    if u.dim() != v.dim() {
        return Err(Error::Dimension {
            expected: u.dim(),
            got: v.dim(),
        });
    }
    let n = u.dim();
    let max = ConvexFunction::from_shape(
        n,
        Shape::MaxOf {
            items: vec![u.clone(), v.clone()],
        },
    );
    let min_candidate = ConvexFunction::from_shape(
        n,
        Shape::MinOf {
            items: vec![u.clone(), v.clone()],
        },
    );
    let accepted = min_is_midpoint_convex(&min_candidate, u, v, seed);
    Ok(LatticeOutcome {
        max,
        min: accepted.then_some(min_candidate),
    })
}

fn sampling_box(u: &ConvexFunction, v: &ConvexFunction) -> BoxDomain {
    let n = u.dim();
    let fallback = BoxDomain::new(vec![-3.0; n], vec![3.0; n]);
    match (u.domain_box(), v.domain_box()) {
        (Some(a), Some(b)) => a.hull(&b),
        (Some(a), None) => a.hull(&fallback),
        (None, Some(b)) => b.hull(&fallback),
        (None, None) => fallback,
    }
}

fn min_is_midpoint_convex(
    w: &ConvexFunction,
    u: &ConvexFunction,
    v: &ConvexFunction,
    seed: u64,
) -> bool {
    let n = w.dim();
    let b = sampling_box(u, v);
    let mut rng = CounterRng::new(seed, 0);
    let mut effective = 0usize;
    let mut attempts = 0usize;
    while effective < MIDPOINT_SAMPLES && attempts < 20 * MIDPOINT_SAMPLES {
        attempts += 1;
        let x = DVector::from_fn(n, |i, _| rng.next_range(b.lo[i], b.hi[i]));
        let y = DVector::from_fn(n, |i, _| rng.next_range(b.lo[i], b.hi[i]));
        let (wx, wy) = (w.evaluate(&x), w.evaluate(&y));
        if !wx.is_finite() || !wy.is_finite() {
            continue;
        }
        effective += 1;
        let mid = (&x + &y) * 0.5;
        let wm = w.evaluate(&mid);
        if wm > 0.5 * (wx + wy) + MIDPOINT_TOL {
            return false;
        }
    }
    effective > 0
}

/// Vertex-and-ray description of a subdifferential set.
#[derive(Debug, Clone)]
pub struct SubdifferentialSet {
    pub vertices: Vec<DVector<f64>>,
    /// Recession directions (nonempty only on indicator-domain boundaries).
    pub rays: Vec<DVector<f64>>,
}

impl SubdifferentialSet {
    /// Volume of the bounded part (product structure assumed handled by
    /// the caller via the convex hull of `vertices`).
    pub fn is_bounded(&self) -> bool {
        self.rays.is_empty()
    }
}

/// Subdifferential of a piecewise-linear variant at `x`.
///
/// Piecewise-linear sums give a product of intervals; support-plus-indicator
/// functions give the face of `P` in direction `x` plus the normal cone of
/// `Q` (rays are produced for box domains; other boundary cases are
/// unsupported).
pub fn subdifferential_pl(u: &ConvexFunction, x: &DVector<f64>) -> Result<SubdifferentialSet> {
    match u.shape() {
        Shape::PiecewiseLinearSum { anchors } => {
            let n = u.dim();
            let mut free_axes = Vec::new();
            let mut base = DVector::zeros(n);
            for i in 0..n {
                let d = x[i] - anchors[i];
                if d.abs() < 1e-12 {
                    free_axes.push(i);
                } else {
                    base[i] = 0.5 * d.signum();
                }
            }
            let mut vertices = Vec::with_capacity(1 << free_axes.len());
            for mask in 0..(1usize << free_axes.len()) {
                let mut v = base.clone();
                for (bit, &axis) in free_axes.iter().enumerate() {
                    v[axis] = if mask >> bit & 1 == 1 { 0.5 } else { -0.5 };
                }
                vertices.push(v);
            }
            Ok(SubdifferentialSet {
                vertices,
                rays: vec![],
            })
        }
        Shape::SupportPlusIndicator { p, q } => {
            let scale = 1.0 + x.norm();
            let face: Vec<DVector<f64>> = p
                .support_face(x, 1e-12 * scale)
                .into_iter()
                .map(|i| p.vertices()[i].clone())
                .collect();
            let rays = match q {
                None => vec![],
                Some(q) => {
                    if !q.contains(x, 1e-9) {
                        return Err(Error::domain(format!(
                            "subdifferential outside the domain at {:?}",
                            x.as_slice()
                        )));
                    }
                    normal_cone_rays(q, x)?
                }
            };
            Ok(SubdifferentialSet {
                vertices: face,
                rays,
            })
        }
        _ => Err(Error::unsupported(format!(
            "subdifferential_pl supports piecewise-linear variants, got {}",
            u.variant_name()
        ))),
    }
}

/// Normal cone generators of a box domain; empty in the interior.
fn normal_cone_rays(q: &crate::geometry::Polytope, x: &DVector<f64>) -> Result<Vec<DVector<f64>>> {
    let n = q.ambient_dim();
    let bb = q.bounding_box();
    let is_box = q.vertices().len() == 1 << n
        && q.vertices().iter().all(|v| {
            (0..n).all(|i| {
                (v[i] - bb.lo[i]).abs() < 1e-12 || (v[i] - bb.hi[i]).abs() < 1e-12
            })
        });
    let mut rays = Vec::new();
    let mut on_boundary = false;
    for i in 0..n {
        let span = (bb.hi[i] - bb.lo[i]).max(1e-300);
        if (x[i] - bb.hi[i]).abs() < 1e-9 * span {
            on_boundary = true;
            let mut r = DVector::zeros(n);
            r[i] = 1.0;
            rays.push(r);
        }
        if (x[i] - bb.lo[i]).abs() < 1e-9 * span {
            on_boundary = true;
            let mut r = DVector::zeros(n);
            r[i] = -1.0;
            rays.push(r);
        }
    }
    if !is_box && on_boundary {
        return Err(Error::unsupported(
            "normal cone at the boundary of a non-box polytope is not representable here",
        ));
    }
    if !is_box {
        return Ok(vec![]);
    }
    Ok(rays)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Polytope;
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;

    fn vecd(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    #[test]
    fn identical_pair_accepts_min() {
        let u = ConvexFunction::isotropic_quadratic(2);
        let out = lattice_ops(&u, &u, 7).unwrap();
        let x = vecd(&[0.7, -0.4]);
        assert_abs_diff_eq!(out.max.evaluate(&x), u.evaluate(&x));
        let min = out.min.expect("min of identical pair is convex");
        assert_abs_diff_eq!(min.evaluate(&x), u.evaluate(&x));
    }

    #[test]
    fn tangent_quadratic_pair_accepted() {
        // phi(x) = x^2 and psi(x) = 2x^2 - x + 1/4 touch at x = 1/2 with
        // psi >= phi everywhere, so the minimum (= phi) is convex.
        let phi =
            ConvexFunction::quadratic(DMatrix::from_element(1, 1, 2.0), DVector::zeros(1), 0.0)
                .unwrap();
        let psi = ConvexFunction::quadratic(
            DMatrix::from_element(1, 1, 4.0),
            vecd(&[-1.0]),
            0.25,
        )
        .unwrap();
        let out = lattice_ops(&phi, &psi, 3).unwrap();
        let min = out.min.expect("ordered tangent pair accepted");
        for x in [-1.0, 0.0, 0.5, 2.0] {
            let p = vecd(&[x]);
            assert_abs_diff_eq!(min.evaluate(&p), phi.evaluate(&p), epsilon = 1e-12);
        }
    }

    #[test]
    fn crossing_quadratics_reject_min() {
        // u = x_1^2/2, v = x_2^2/2 (as 2-D quadratics): the minimum is not
        // convex along the diagonal.
        let a1 = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1e-6]);
        let a2 = DMatrix::from_row_slice(2, 2, &[1e-6, 0.0, 0.0, 1.0]);
        let u = ConvexFunction::quadratic(a1, DVector::zeros(2), 0.0).unwrap();
        let v = ConvexFunction::quadratic(a2, DVector::zeros(2), 0.0).unwrap();
        let out = lattice_ops(&u, &v, 19).unwrap();
        assert!(out.min.is_none(), "crossing pair must reject the minimum");
    }

    #[test]
    fn pl_sum_subdifferential_at_anchor() {
        let u = ConvexFunction::pl_sum(vecd(&[0.0, 0.0]));
        let sd = subdifferential_pl(&u, &vecd(&[0.0, 0.0])).unwrap();
        assert_eq!(sd.vertices.len(), 4);
        assert!(sd.is_bounded());
        for v in &sd.vertices {
            assert_abs_diff_eq!(v[0].abs(), 0.5);
            assert_abs_diff_eq!(v[1].abs(), 0.5);
        }
    }

    #[test]
    fn pl_sum_subdifferential_in_smooth_region() {
        let u = ConvexFunction::pl_sum(vecd(&[0.0, 0.0]));
        let sd = subdifferential_pl(&u, &vecd(&[1.0, 2.0])).unwrap();
        assert_eq!(sd.vertices.len(), 1);
        assert_eq!(sd.vertices[0].as_slice(), &[0.5, 0.5]);
    }

    #[test]
    fn support_function_face() {
        // h_P with P = [-1,1]^2 at (1, 0): the face is {1} x [-1, 1].
        let p = Polytope::cube(2, 1.0);
        let u = ConvexFunction::support_plus_indicator(p, None).unwrap();
        let sd = subdifferential_pl(&u, &vecd(&[1.0, 0.0])).unwrap();
        assert_eq!(sd.vertices.len(), 2);
        for v in &sd.vertices {
            assert_abs_diff_eq!(v[0], 1.0);
            assert_abs_diff_eq!(v[1].abs(), 1.0);
        }
        // Oracle: every face vertex attains the support value.
        let x = vecd(&[1.0, 0.0]);
        for v in &sd.vertices {
            assert_abs_diff_eq!(v.dot(&x), u.evaluate(&x), epsilon = 1e-12);
        }
    }

    #[test]
    fn box_normal_cone_rays() {
        let p = Polytope::origin(2);
        let q = Polytope::cube(2, 1.0);
        let u = ConvexFunction::support_plus_indicator(p, Some(q)).unwrap();
        let sd = subdifferential_pl(&u, &vecd(&[1.0, 0.0])).unwrap();
        assert_eq!(sd.rays.len(), 1);
        assert_eq!(sd.rays[0].as_slice(), &[1.0, 0.0]);
        let interior = subdifferential_pl(&u, &vecd(&[0.2, 0.3])).unwrap();
        assert!(interior.rays.is_empty());
    }
}
