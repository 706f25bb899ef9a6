//! Epigraph operations: infimal convolution and epi-multiplication.

use super::legendre::simplify_sum;
use super::{ConvexFunction, Shape};
use crate::error::{Error, Result};
use nalgebra::DVector;

/// Epi-multiplication `lambda . u : x -> lambda u(x / lambda)`, `lambda > 0`.
pub fn epi_mult(lambda: f64, u: &ConvexFunction) -> Result<ConvexFunction> {
    if !(lambda > 0.0) {
        return Err(Error::domain(format!(
            "epi-multiplication needs lambda > 0, got {lambda}"
        )));
    }
    let n = u.dim();
    let shape = match u.shape() {
        Shape::Quadratic { a, b, c } => Shape::Quadratic {
            a: a / lambda,
            b: b.clone(),
            c: lambda * c,
        },
        Shape::SmoothRadial { profile } => Shape::SmoothRadial {
            profile: profile.epi_mult(lambda),
        },
        Shape::ConeBall {
            slope,
            radius,
            center,
        } => Shape::ConeBall {
            slope: *slope,
            radius: lambda * radius,
            center: center * lambda,
        },
        Shape::SupportPlusIndicator { p, q } => Shape::SupportPlusIndicator {
            // Support functions are 1-homogeneous, so only the domain
            // rescales.
            p: p.clone(),
            q: q.as_ref().map(|q| q.scale(lambda)),
        },
        Shape::PiecewiseLinearSum { anchors } => Shape::PiecewiseLinearSum {
            anchors: anchors * lambda,
        },
        Shape::EpiSum { operands } => Shape::EpiSum {
            operands: operands
                .iter()
                .map(|v| epi_mult(lambda, v))
                .collect::<Result<Vec<_>>>()?,
        },
        Shape::SumOf { items } => Shape::SumOf {
            items: items
                .iter()
                .map(|v| epi_mult(lambda, v))
                .collect::<Result<Vec<_>>>()?,
        },
        Shape::MaxOf { items } => Shape::MaxOf {
            items: items
                .iter()
                .map(|v| epi_mult(lambda, v))
                .collect::<Result<Vec<_>>>()?,
        },
        Shape::MinOf { items } => Shape::MinOf {
            items: items
                .iter()
                .map(|v| epi_mult(lambda, v))
                .collect::<Result<Vec<_>>>()?,
        },
        Shape::GridSampled { grid } => {
            let mut g = grid.clone();
            for v in g.values.iter_mut() {
                *v *= lambda;
            }
            for (lo, hi) in g.lo.iter_mut().zip(g.hi.iter_mut()) {
                *lo *= lambda;
                *hi *= lambda;
            }
            Shape::GridSampled { grid: g }
        }
        Shape::Embedded { subspace, inner } => Shape::Embedded {
            subspace: subspace.clone(),
            inner: Box::new(epi_mult(lambda, inner)?),
        },
        Shape::Cylinder { subspace, inner } => Shape::Cylinder {
            subspace: subspace.clone(),
            inner: Box::new(epi_mult(lambda, inner)?),
        },
        Shape::Projection { inner, frame } => Shape::Projection {
            // Projection commutes with epi-multiplication.
            inner: Box::new(epi_mult(lambda, inner)?),
            frame: frame.clone(),
        },
        Shape::Affine {
            inner,
            rotation,
            translation,
            linear,
            offset,
        } => Shape::Affine {
            inner: Box::new(epi_mult(lambda, inner)?),
            rotation: rotation.clone(),
            translation: translation.as_ref().map(|t| t * lambda),
            linear: linear.clone(),
            offset: lambda * offset,
        },
    };
    Ok(ConvexFunction::from_shape(n, shape))
}

/// Infimal convolution `(u1 [] u2)(x) = inf_{x1 + x2 = x} u1(x1) + u2(x2)`.
///
/// Closed forms: quadratic pairs (through the conjugate identity
/// `(u1 [] u2)* = u1* + u2*`), cones with equal slopes, indicator pairs
/// (Minkowski sums), and the point-indicator identity element. Everything
/// else is stored symbolically and evaluated by fiber minimization.
pub fn epi_sum(u1: &ConvexFunction, u2: &ConvexFunction) -> Result<ConvexFunction> {
    let n = u1.dim();
    if u2.dim() != n {
        return Err(Error::Dimension {
            expected: n,
            got: u2.dim(),
        });
    }
    // Identity element: u [] I_{{v}} = u(. - v).
    if let Some(v) = as_point_indicator(u2) {
        return Ok(u1.translate(&v, 0.0));
    }
    if let Some(v) = as_point_indicator(u1) {
        return Ok(u2.translate(&v, 0.0));
    }
    match (u1.shape(), u2.shape()) {
        (Shape::Quadratic { .. }, Shape::Quadratic { .. }) => {
            let sum = simplify_sum(n, vec![u1.legendre()?, u2.legendre()?]);
            sum.legendre()
        }
        (
            Shape::ConeBall {
                slope: s1,
                radius: r1,
                center: c1,
            },
            Shape::ConeBall {
                slope: s2,
                radius: r2,
                center: c2,
            },
        ) if (s1 - s2).abs() < 1e-14 => {
            ConvexFunction::cone_ball(*s1, r1 + r2, c1 + c2)
        }
        (
            Shape::SupportPlusIndicator { p: p1, q: Some(q1) },
            Shape::SupportPlusIndicator { p: p2, q: Some(q2) },
        ) if is_origin(p1) && is_origin(p2) => {
            Ok(ConvexFunction::indicator(q1.minkowski_sum(q2)))
        }
        _ => Ok(ConvexFunction::from_shape(
            n,
            Shape::EpiSum {
                operands: vec![u1.clone(), u2.clone()],
            },
        )),
    }
}

fn is_origin(p: &crate::geometry::Polytope) -> bool {
    p.vertices().iter().all(|v| v.amax() == 0.0)
}

fn as_point_indicator(u: &ConvexFunction) -> Option<DVector<f64>> {
    if let Shape::SupportPlusIndicator { p, q: Some(q) } = u.shape() {
        if is_origin(p) && q.vertices().len() == 1 {
            return Some(q.vertices()[0].clone());
        }
    }
    None
}

/// Evaluate a symbolic epi-sum at `x`.
pub(super) fn evaluate_epi_sum(operands: &[ConvexFunction], x: &DVector<f64>) -> f64 {
    // Orthogonal subspace-domain operands split uniquely.
    if operands.iter().all(|u| matches!(u.shape(), Shape::Embedded { .. })) {
        let mut frames = Vec::new();
        for u in operands {
            if let Shape::Embedded { subspace, .. } = u.shape() {
                frames.push(subspace);
            }
        }
        let orthogonal = frames.iter().enumerate().all(|(i, a)| {
            frames.iter().skip(i + 1).all(|b| {
                (a.frame().transpose() * b.frame()).amax() < 1e-10
            })
        });
        if orthogonal {
            let mut residual = x.clone();
            let mut total = 0.0;
            for u in operands {
                if let Shape::Embedded { subspace, inner } = u.shape() {
                    let coords = subspace.coords(x);
                    residual -= subspace.lift(&coords);
                    total += inner.evaluate(&coords);
                }
            }
            if residual.norm() > 1e-9 * (1.0 + x.norm()) {
                return f64::INFINITY;
            }
            return total;
        }
    }
    if operands.len() == 2 {
        return infimal_convolution_numeric(&operands[0], &operands[1], x);
    }
    // Fold left for longer chains.
    let mut acc = operands[0].clone();
    for u in &operands[1..] {
        acc = ConvexFunction::from_shape(
            acc.dim(),
            Shape::EpiSum {
                operands: vec![acc.clone(), u.clone()],
            },
        );
    }
    acc.evaluate(x)
}

/// Numeric value of `inf_z u1(z) + u2(x - z)`.
///
/// Preferred route is the conjugate identity: the dual problem
/// `sup_y <x,y> - u1*(y) - u2*(y)` is unconstrained over finite convex
/// conjugates, which keeps the search away from domain boundaries where a
/// primal pattern search stalls. The primal search box remains the
/// fallback when a conjugate is unavailable.
fn infimal_convolution_numeric(
    u1: &ConvexFunction,
    u2: &ConvexFunction,
    x: &DVector<f64>,
) -> f64 {
    if let (Ok(c1), Ok(c2)) = (u1.legendre(), u2.legendre()) {
        if let Some(v) = dual_supremum(&c1, &c2, x) {
            return v;
        }
    }
    infimal_convolution_primal(u1, u2, x)
}

/// sup_y <x, y> - c1(y) - c2(y) over an adaptively expanded box.
fn dual_supremum(c1: &ConvexFunction, c2: &ConvexFunction, x: &DVector<f64>) -> Option<f64> {
    let n = x.len();
    let neg_objective = |y: &DVector<f64>| {
        let a = c1.evaluate(y);
        let b = c2.evaluate(y);
        if a.is_finite() && b.is_finite() {
            -(x.dot(y) - a - b)
        } else {
            f64::INFINITY
        }
    };
    let mut half = 4.0 * (1.0 + x.norm());
    for _ in 0..3 {
        // Coarse scan for a starting point.
        let per_axis = if n <= 2 { 17 } else { 9 };
        let total: usize = (0..n).map(|_| per_axis).product();
        let mut best = DVector::zeros(n);
        let mut best_val = f64::INFINITY;
        let mut idx = vec![0usize; n];
        for flat in 0..total {
            let mut rem = flat;
            for i in (0..n).rev() {
                idx[i] = rem % per_axis;
                rem /= per_axis;
            }
            let y = DVector::from_fn(n, |i, _| {
                -half + (idx[i] as f64 + 0.5) * 2.0 * half / per_axis as f64
            });
            let v = neg_objective(&y);
            if v < best_val {
                best_val = v;
                best = y;
            }
        }
        if !best_val.is_finite() {
            return None;
        }
        let (arg, value) = super::project::direction_set_minimize(
            &neg_objective,
            best,
            best_val,
            0.5 * half,
            1e-10,
        );
        if arg.amax() < 0.9 * half {
            return Some(-value);
        }
        half *= 4.0;
    }
    None
}

/// Primal fallback: bounded search over the split variable.
fn infimal_convolution_primal(
    u1: &ConvexFunction,
    u2: &ConvexFunction,
    x: &DVector<f64>,
) -> f64 {
    let n = u1.dim();
    let (lo, hi) = search_box(u1, u2, x);
    let f = |z: &DVector<f64>| {
        let a = u1.evaluate(z);
        if !a.is_finite() {
            return f64::INFINITY;
        }
        let b = u2.evaluate(&(x - z));
        a + b
    };
    // Coarse scan for a finite starting point.
    let mut best = DVector::zeros(n);
    let mut best_val = f64::INFINITY;
    let per_axis = if n <= 2 { 17 } else { 9 };
    let total: usize = (0..n).map(|_| per_axis).product();
    let mut idx = vec![0usize; n];
    for flat in 0..total {
        let mut rem = flat;
        for i in (0..n).rev() {
            idx[i] = rem % per_axis;
            rem /= per_axis;
        }
        let z = DVector::from_fn(n, |i, _| {
            lo[i] + (idx[i] as f64 + 0.5) * (hi[i] - lo[i]) / per_axis as f64
        });
        let v = f(&z);
        if v < best_val {
            best_val = v;
            best = z;
        }
    }
    if !best_val.is_finite() {
        return f64::INFINITY;
    }
    let span = hi
        .iter()
        .zip(&lo)
        .map(|(h, l)| h - l)
        .fold(0.0f64, f64::max)
        .max(1e-6);
    let (_, value) = super::project::direction_set_minimize(
        &|z: &DVector<f64>| f(z),
        best,
        best_val,
        0.25 * span,
        1e-9,
    );
    value
}

fn search_box(
    u1: &ConvexFunction,
    u2: &ConvexFunction,
    x: &DVector<f64>,
) -> (Vec<f64>, Vec<f64>) {
    let n = u1.dim();
    let d1 = u1.domain_box();
    let d2 = u2.domain_box();
    let mut lo = vec![f64::NEG_INFINITY; n];
    let mut hi = vec![f64::INFINITY; n];
    if let Some(b) = &d1 {
        for i in 0..n {
            lo[i] = lo[i].max(b.lo[i]);
            hi[i] = hi[i].min(b.hi[i]);
        }
    }
    if let Some(b) = &d2 {
        // z must satisfy x - z in dom u2.
        for i in 0..n {
            lo[i] = lo[i].max(x[i] - b.hi[i]);
            hi[i] = hi[i].min(x[i] - b.lo[i]);
        }
    }
    let fallback = 5.0 * (1.0 + x.norm());
    for i in 0..n {
        if !lo[i].is_finite() {
            lo[i] = x[i] / 2.0 - fallback;
        }
        if !hi[i].is_finite() {
            hi[i] = x[i] / 2.0 + fallback;
        }
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Polytope;
    use approx::assert_abs_diff_eq;

    fn vecd(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    #[test]
    fn identity_element() {
        let u = ConvexFunction::isotropic_quadratic(2);
        let id = ConvexFunction::indicator(Polytope::origin(2));
        let s = epi_sum(&u, &id).unwrap();
        for p in [[0.0, 0.0], [1.5, -0.5]] {
            let x = vecd(&p);
            assert_abs_diff_eq!(s.evaluate(&x), u.evaluate(&x), epsilon = 1e-14);
        }
    }

    #[test]
    fn quadratic_pair_halves_curvature() {
        // 1/2|x|^2 [] 1/2|x|^2 = 1/4|x|^2 (conjugates add).
        let u = ConvexFunction::isotropic_quadratic(2);
        let s = epi_sum(&u, &u).unwrap();
        let x = vecd(&[1.0, 1.0]);
        assert_abs_diff_eq!(s.evaluate(&x), 0.5, epsilon = 1e-13);
    }

    #[test]
    fn ball_indicators_add_domains() {
        let b1 = ConvexFunction::cone_t(2, 0.0);
        let s = epi_sum(&b1, &b1).unwrap();
        assert!(s.evaluate(&vecd(&[1.9, 0.0])).is_finite());
        assert_eq!(s.evaluate(&vecd(&[2.1, 0.0])), f64::INFINITY);
    }

    #[test]
    fn epi_mult_basics() {
        let u = ConvexFunction::isotropic_quadratic(2);
        let v = epi_mult(2.0, &u).unwrap();
        let x = vecd(&[1.0, 1.0]);
        // 2 * u(x/2) = 2 * 0.25 = 0.5 = |x|^2 / 4.
        assert_abs_diff_eq!(v.evaluate(&x), 0.5, epsilon = 1e-14);

        let cone = ConvexFunction::cone_t(2, 0.7);
        let scaled = epi_mult(2.0, &cone).unwrap();
        if let Shape::ConeBall { slope, radius, .. } = scaled.shape() {
            assert_eq!(*slope, 0.7);
            assert_eq!(*radius, 2.0);
        } else {
            panic!("expected cone");
        }

        let same = epi_mult(1.0, &u).unwrap();
        assert_abs_diff_eq!(same.evaluate(&x), u.evaluate(&x));
    }

    #[test]
    fn epi_mult_composes() {
        let u = ConvexFunction::cone_t(2, 0.4);
        let a = epi_mult(2.0, &epi_mult(1.5, &u).unwrap()).unwrap();
        let b = epi_mult(3.0, &u).unwrap();
        for p in [[0.3, 0.1], [1.0, 1.0], [2.5, 0.0]] {
            let x = vecd(&p);
            let (va, vb) = (a.evaluate(&x), b.evaluate(&x));
            if va.is_finite() || vb.is_finite() {
                assert_abs_diff_eq!(va, vb, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn symbolic_epi_sum_matches_closed_form() {
        // Force the numeric path on a pair with a known answer.
        let u = ConvexFunction::isotropic_quadratic(2);
        let cone = ConvexFunction::cone_t(2, 0.0);
        let s = epi_sum(&u, &cone).unwrap();
        // inf over |z| <= 1 of 1/2 |x - z|^2: distance to the unit ball.
        for p in [[2.0, 0.0], [0.5, 0.5], [3.0, -4.0]] {
            let x = vecd(&p);
            let d = (x.norm() - 1.0).max(0.0);
            assert_abs_diff_eq!(s.evaluate(&x), 0.5 * d * d, epsilon = 1e-5);
        }
    }

    #[test]
    fn associativity_and_commutativity_on_closed_forms() {
        let a = ConvexFunction::isotropic_quadratic(2);
        let b = ConvexFunction::quadratic(
            nalgebra::DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]),
            vecd(&[0.1, 0.0]),
            0.0,
        )
        .unwrap();
        let c = ConvexFunction::quadratic(
            nalgebra::DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 3.0]),
            DVector::zeros(2),
            0.5,
        )
        .unwrap();
        let ab_c = epi_sum(&epi_sum(&a, &b).unwrap(), &c).unwrap();
        let a_bc = epi_sum(&a, &epi_sum(&b, &c).unwrap()).unwrap();
        let ba = epi_sum(&b, &a).unwrap();
        let ab = epi_sum(&a, &b).unwrap();
        for p in [[0.0, 0.0], [1.0, -2.0], [0.3, 0.9]] {
            let x = vecd(&p);
            assert_abs_diff_eq!(ab_c.evaluate(&x), a_bc.evaluate(&x), epsilon = 1e-9);
            assert_abs_diff_eq!(ab.evaluate(&x), ba.evaluate(&x), epsilon = 1e-9);
        }
    }

    #[test]
    fn epigraph_additivity_on_slices() {
        // epi(u [] v) = epi u + epi v, checked by sampling pairs on a 2-D
        // slice: the symbolic value never exceeds any split and matches the
        // best sampled split.
        let u = ConvexFunction::isotropic_quadratic(2);
        let cone = ConvexFunction::cone_t(2, 0.3);
        let s = epi_sum(&u, &cone).unwrap();
        let x = vecd(&[1.2, -0.4]);
        let direct = s.evaluate(&x);
        let mut best = f64::INFINITY;
        for i in 0..60 {
            for j in 0..60 {
                let z = vecd(&[-1.5 + i as f64 * 0.05, -1.5 + j as f64 * 0.05]);
                let v = cone.evaluate(&z);
                if v.is_finite() {
                    best = best.min(u.evaluate(&(&x - &z)) + v);
                }
            }
        }
        assert!(direct <= best + 1e-9, "direct {direct} best {best}");
        assert!(best - direct < 2e-3, "direct {direct} best {best}");
    }
}
