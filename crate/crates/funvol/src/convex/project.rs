//! Projection functions `proj_E u(x_E) = min over the orthogonal fiber`.
//!
//! Closed forms: radial profiles restrict, cones project to cones,
//! quadratics reduce by Schur complement, indicator domains project to
//! projected polytopes, and epi-sums distribute. Everything else keeps a
//! lazy representation whose evaluation minimizes over the fiber
//! numerically (golden-section line searches inside a shrinking
//! direction-set search; the fiber problems are convex).

use super::{ConvexFunction, Shape};
use crate::error::{Error, Result};
use crate::geometry::Subspace;
use crate::rng::CounterRng;
use nalgebra::{DMatrix, DVector};

/// Fiber minimization target accuracy.
pub const FIBER_TOL: f64 = 1e-8;

impl ConvexFunction {
    /// The projection function on the subspace spanned by `e` (expressed in
    /// frame coordinates, an `e.dim()`-dimensional convex function).
    pub fn project(&self, e: &Subspace) -> Result<ConvexFunction> {
        if e.ambient_dim() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: e.ambient_dim(),
            });
        }
        let k = e.dim();
        if k == 0 {
            return Err(Error::precondition("projection needs a nonzero subspace"));
        }
        if k == self.dim() {
            // Projection onto the full space composes with the frame
            // rotation: proj(s) = u(F s).
            return Ok(self.rotate(&e.frame().transpose()));
        }
        match &self.shape {
            Shape::SmoothRadial { profile } => {
                // min_z phi(sqrt(|x_E|^2 + |z|^2)) is attained at z = 0
                // because the profile increases.
                ConvexFunction::smooth_radial(k, profile.clone())
            }
            Shape::ConeBall {
                slope,
                radius,
                center,
            } => ConvexFunction::cone_ball(*slope, *radius, e.coords(center)),
            Shape::Quadratic { a, b, c } => {
                let f = e.frame();
                let comp = e.orthogonal_complement();
                let g = comp.frame();
                let a_ss = f.transpose() * a * f;
                let a_sw = f.transpose() * a * g;
                let a_ww = g.transpose() * a * g;
                let b_s = f.transpose() * b;
                let b_w = g.transpose() * b;
                let a_ww_inv = a_ww.clone().try_inverse().ok_or_else(|| {
                    Error::precondition("fiber block of the quadratic is singular")
                })?;
                let a_proj = &a_ss - &a_sw * &a_ww_inv * a_sw.transpose();
                let b_proj = &b_s - &a_sw * &a_ww_inv * &b_w;
                let c_proj = c - 0.5 * (&a_ww_inv * &b_w).dot(&b_w);
                ConvexFunction::quadratic(symmetrize(a_proj), b_proj, c_proj)
            }
            Shape::SupportPlusIndicator { p, q } => {
                if p.vertices().iter().all(|v| v.amax() == 0.0) {
                    match q {
                        Some(q) => Ok(ConvexFunction::indicator(q.project(e))),
                        None => Err(Error::precondition(
                            "projection of the zero function onto a proper subspace is the zero function; represent it explicitly",
                        )),
                    }
                } else {
                    Ok(ConvexFunction::from_shape(
                        k,
                        Shape::Projection {
                            inner: Box::new(self.clone()),
                            frame: e.clone(),
                        },
                    ))
                }
            }
            Shape::PiecewiseLinearSum { anchors } => {
                if let Some(axes) = coordinate_axes(e) {
                    // Separable: dropped coordinates minimize to zero.
                    let kept = DVector::from_fn(k, |i, _| anchors[axes[i]]);
                    Ok(ConvexFunction::pl_sum(kept))
                } else {
                    Ok(ConvexFunction::from_shape(
                        k,
                        Shape::Projection {
                            inner: Box::new(self.clone()),
                            frame: e.clone(),
                        },
                    ))
                }
            }
            Shape::GridSampled { grid } => {
                if let Some(axes) = coordinate_axes(e) {
                    Ok(ConvexFunction::from_shape(
                        k,
                        Shape::GridSampled {
                            grid: project_grid(grid, &axes),
                        },
                    ))
                } else {
                    Ok(ConvexFunction::from_shape(
                        k,
                        Shape::Projection {
                            inner: Box::new(self.clone()),
                            frame: e.clone(),
                        },
                    ))
                }
            }
            Shape::EpiSum { operands } => {
                // Projection of an epi-sum is the epi-sum of projections.
                let mut acc: Option<ConvexFunction> = None;
                for u in operands {
                    let p = u.project(e)?;
                    acc = Some(match acc {
                        None => p,
                        Some(prev) => super::epi::epi_sum(&prev, &p)?,
                    });
                }
                Ok(acc.expect("epi-sum has operands"))
            }
            Shape::Affine {
                inner,
                rotation,
                translation,
                linear,
                offset,
            } if linear.is_none() => {
                let sub_frame = match rotation {
                    Some(r) => Subspace::new(r.transpose() * e.frame())?,
                    None => e.clone(),
                };
                let projected = inner.project(&sub_frame)?;
                let shifted = match translation {
                    Some(t) => projected.translate(&e.coords(t), 0.0),
                    None => projected,
                };
                Ok(shifted.add_offset(*offset))
            }
            _ => Ok(ConvexFunction::from_shape(
                k,
                Shape::Projection {
                    inner: Box::new(self.clone()),
                    frame: e.clone(),
                },
            )),
        }
    }
}

fn symmetrize(mut a: DMatrix<f64>) -> DMatrix<f64> {
    let at = a.transpose();
    a += at;
    a * 0.5
}

/// Columns of the frame that are exactly standard basis vectors.
fn coordinate_axes(e: &Subspace) -> Option<Vec<usize>> {
    let f = e.frame();
    let mut axes = Vec::with_capacity(e.dim());
    for col in 0..e.dim() {
        let mut axis = None;
        for row in 0..e.ambient_dim() {
            let v = f[(row, col)];
            if v.abs() > 1e-14 {
                if (v - 1.0).abs() < 1e-14 && axis.is_none() {
                    axis = Some(row);
                } else {
                    return None;
                }
            }
        }
        axes.push(axis?);
    }
    Some(axes)
}

/// Exact fiber minimum of a grid over the dropped coordinate axes.
fn project_grid(grid: &super::GridFunction, kept: &[usize]) -> super::GridFunction {
    let n = grid.dim();
    let dropped: Vec<usize> = (0..n).filter(|i| !kept.contains(i)).collect();
    let out_shape: Vec<usize> = kept.iter().map(|&i| grid.shape[i]).collect();
    let out_lo: Vec<f64> = kept.iter().map(|&i| grid.lo[i]).collect();
    let out_hi: Vec<f64> = kept.iter().map(|&i| grid.hi[i]).collect();
    let out_total: usize = out_shape.iter().product();
    let mut out_values = vec![f64::INFINITY; out_total];
    let drop_total: usize = dropped.iter().map(|&i| grid.shape[i]).product();
    let mut idx = vec![0usize; n];
    for (flat_out, value) in out_values.iter_mut().enumerate() {
        let mut rem = flat_out;
        for (pos, &axis) in kept.iter().enumerate().rev() {
            idx[axis] = rem % grid.shape[kept[pos]];
            rem /= grid.shape[kept[pos]];
        }
        let mut best = f64::INFINITY;
        for dflat in 0..drop_total.max(1) {
            let mut drem = dflat;
            for &axis in dropped.iter().rev() {
                idx[axis] = drem % grid.shape[axis];
                drem /= grid.shape[axis];
            }
            best = best.min(grid.value_at(&idx));
        }
        *value = best;
    }
    super::GridFunction {
        lo: out_lo,
        hi: out_hi,
        shape: out_shape,
        values: out_values,
    }
}

/// Value of the lazy projection at frame coordinates `s`.
pub(crate) fn evaluate_projection(
    inner: &ConvexFunction,
    frame: &Subspace,
    s: &DVector<f64>,
) -> f64 {
    fiber_minimum(inner, frame, s).map(|(v, _)| v).unwrap_or(f64::INFINITY)
}

/// Gradient of the lazy projection by central differences (one-sided at
/// domain edges).
pub(crate) fn projection_gradient(
    inner: &ConvexFunction,
    frame: &Subspace,
    s: &DVector<f64>,
) -> Result<DVector<f64>> {
    let k = s.len();
    let h = 1e-6 * (1.0 + s.norm());
    let center = evaluate_projection(inner, frame, s);
    if !center.is_finite() {
        return Err(Error::domain(format!(
            "projection gradient outside the projected domain at {:?}",
            s.as_slice()
        )));
    }
    let mut g = DVector::zeros(k);
    let mut probe = s.clone();
    for i in 0..k {
        probe[i] = s[i] + h;
        let plus = evaluate_projection(inner, frame, &probe);
        probe[i] = s[i] - h;
        let minus = evaluate_projection(inner, frame, &probe);
        probe[i] = s[i];
        g[i] = match (plus.is_finite(), minus.is_finite()) {
            (true, true) => (plus - minus) / (2.0 * h),
            (true, false) => (plus - center) / h,
            (false, true) => (center - minus) / h,
            (false, false) => {
                return Err(Error::domain(format!(
                    "projection gradient stencil infeasible at {:?}",
                    s.as_slice()
                )))
            }
        };
    }
    Ok(g)
}

/// Minimize `inner` over the fiber `lift(s) + E_perp`; returns the value
/// and minimizer (ambient coordinates).
pub(crate) fn fiber_minimum(
    inner: &ConvexFunction,
    frame: &Subspace,
    s: &DVector<f64>,
) -> Option<(f64, DVector<f64>)> {
    let comp = frame.orthogonal_complement();
    let m = comp.dim();
    let base = frame.lift(s);
    let eval = |w: &DVector<f64>| inner.evaluate(&(&base + comp.lift(w)));
    if m == 0 {
        let v = eval(&DVector::zeros(0));
        return v.is_finite().then(|| (v, base.clone()));
    }

    // Fiber search box from the domain box, if any.
    let (lo, hi) = match inner.domain_box() {
        Some(b) => {
            let shifted = crate::quad::BoxDomain::new(
                b.lo.iter().zip(base.iter()).map(|(l, c)| l - c).collect(),
                b.hi.iter().zip(base.iter()).map(|(h, c)| h - c).collect(),
            );
            let w_box = super::project_box(&comp, &shifted);
            (w_box.lo, w_box.hi)
        }
        None => {
            let r = 10.0 * (1.0 + s.norm());
            (vec![-r; m], vec![r; m])
        }
    };

    // Coarse feasibility scan.
    let per_axis: usize = match m {
        1 => 33,
        2 => 17,
        _ => 9,
    };
    let total: usize = (0..m).map(|_| per_axis).product();
    let mut best_w = DVector::zeros(m);
    let mut best = f64::INFINITY;
    let mut idx = vec![0usize; m];
    for flat in 0..total {
        let mut rem = flat;
        for i in (0..m).rev() {
            idx[i] = rem % per_axis;
            rem /= per_axis;
        }
        let w = DVector::from_fn(m, |i, _| {
            lo[i] + (idx[i] as f64 + 0.5) * (hi[i] - lo[i]) / per_axis as f64
        });
        let v = eval(&w);
        if v < best {
            best = v;
            best_w = w;
        }
    }
    if !best.is_finite() {
        return None;
    }

    let span = hi
        .iter()
        .zip(&lo)
        .map(|(h, l)| h - l)
        .fold(0.0f64, f64::max)
        .max(1e-6);
    let (best_w, best) = direction_set_minimize(&eval, best_w, best, 0.25 * span, FIBER_TOL);
    let minimizer = &base + comp.lift(&best_w);
    Some((best, minimizer))
}

/// Shrinking direction-set descent for convex objectives (extended values
/// allowed): compass directions plus deterministic random directions, a
/// golden-section refinement along any improving direction, radius halving
/// when nothing improves. Random directions let iterates slide along
/// curved domain boundaries where pure coordinate moves stall.
pub(crate) fn direction_set_minimize<F: Fn(&DVector<f64>) -> f64>(
    eval: &F,
    mut best_w: DVector<f64>,
    mut best: f64,
    initial_radius: f64,
    tol: f64,
) -> (DVector<f64>, f64) {
    let m = best_w.len();
    let mut radius = initial_radius;
    let mut rng = CounterRng::new(0x5eed_f1be, 0);
    let gr = 0.5 * (5f64.sqrt() - 1.0);
    while radius > tol * 1e-2 {
        let mut dirs: Vec<DVector<f64>> = Vec::with_capacity(2 * m + 6);
        for i in 0..m {
            let mut d = DVector::zeros(m);
            d[i] = 1.0;
            dirs.push(d.clone());
            d[i] = -1.0;
            dirs.push(d);
        }
        if m > 1 {
            for _ in 0..6 {
                let mut d = DVector::zeros(m);
                rng.fill_normals(d.as_mut_slice());
                let norm = d.norm();
                if norm > 1e-12 {
                    dirs.push(d / norm);
                }
            }
        }
        let mut improved = false;
        for d in &dirs {
            let probe = &best_w + d * radius;
            let v = eval(&probe);
            if v < best - 1e-15 {
                let mut a = 0.0f64;
                let mut b = 2.0 * radius;
                for _ in 0..48 {
                    let c = b - gr * (b - a);
                    let e = a + gr * (b - a);
                    let fc = eval(&(&best_w + d * c));
                    let fe = eval(&(&best_w + d * e));
                    if fc <= fe {
                        b = e;
                    } else {
                        a = c;
                    }
                }
                let t = 0.5 * (a + b);
                let cand = &best_w + d * t;
                let v = eval(&cand);
                if v < best {
                    best = v;
                    best_w = cand;
                    improved = true;
                }
            }
        }
        if !improved {
            radius *= 0.5;
        }
    }
    (best_w, best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::RadialProfile;
    use crate::geometry::Polytope;
    use approx::assert_abs_diff_eq;

    fn vecd(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    fn random_frame(n: usize, k: usize, seed: u64) -> Subspace {
        let mut rng = CounterRng::new(seed, 0);
        loop {
            let mut cols: Vec<DVector<f64>> = Vec::new();
            'outer: while cols.len() < k {
                let mut v = DVector::zeros(n);
                rng.fill_normals(v.as_mut_slice());
                for c in &cols {
                    let d = c.dot(&v);
                    v -= c * d;
                }
                let norm = v.norm();
                if norm < 1e-6 {
                    continue 'outer;
                }
                cols.push(v / norm);
            }
            let mut frame = DMatrix::zeros(n, k);
            for (j, c) in cols.iter().enumerate() {
                frame.set_column(j, c);
            }
            if let Ok(s) = Subspace::new(frame) {
                return s;
            }
        }
    }

    #[test]
    fn radial_projection_keeps_profile() {
        let u = ConvexFunction::smooth_radial(
            3,
            RadialProfile::Power {
                coeff: 1.0,
                exponent: 4.0,
            },
        )
        .unwrap();
        let e = random_frame(3, 2, 11);
        let p = u.project(&e).unwrap();
        let s = vecd(&[0.4, -0.3]);
        assert_abs_diff_eq!(p.evaluate(&s), s.norm().powi(4) / 4.0, epsilon = 1e-13);
    }

    #[test]
    fn cone_projects_to_cone_slice() {
        // proj_E u_t = t |x_E| + I_{B_E^j}.
        let u = ConvexFunction::cone_t(3, 0.8);
        let e = random_frame(3, 2, 23);
        let p = u.project(&e).unwrap();
        let inside = vecd(&[0.3, 0.2]);
        assert_abs_diff_eq!(p.evaluate(&inside), 0.8 * inside.norm(), epsilon = 1e-13);
        assert_eq!(p.evaluate(&vecd(&[1.2, 0.0])), f64::INFINITY);
    }

    #[test]
    fn quadratic_schur_matches_fiber_scan() {
        let a = DMatrix::from_row_slice(
            3,
            3,
            &[2.0, 0.4, 0.1, 0.4, 1.5, -0.2, 0.1, -0.2, 0.9],
        );
        let u = ConvexFunction::quadratic(a, vecd(&[0.3, -0.1, 0.2]), 0.05).unwrap();
        let e = random_frame(3, 1, 37);
        let p = u.project(&e).unwrap();
        let comp = e.orthogonal_complement();
        for sval in [-0.7, 0.0, 0.9] {
            let s = vecd(&[sval]);
            // Dense scan over the 2-D fiber.
            let base = e.lift(&s);
            let mut best = f64::INFINITY;
            for i in 0..160 {
                for j in 0..160 {
                    let w = vecd(&[-4.0 + i as f64 * 0.05, -4.0 + j as f64 * 0.05]);
                    best = best.min(u.evaluate(&(&base + comp.lift(&w))));
                }
            }
            assert_abs_diff_eq!(p.evaluate(&s), best, epsilon = 2e-3);
        }
    }

    #[test]
    fn indicator_projects_to_projected_domain() {
        let q = Polytope::cube(2, 1.0);
        let u = ConvexFunction::indicator(q);
        let e = Subspace::coordinate(2, &[0]);
        let p = u.project(&e).unwrap();
        assert_eq!(p.evaluate(&vecd(&[0.8])), 0.0);
        assert_eq!(p.evaluate(&vecd(&[1.2])), f64::INFINITY);
    }

    #[test]
    fn lazy_projection_of_support_plus_indicator() {
        // n = 2 -> 1-D fiber; oracle by dense scan.
        let p = Polytope::cube(2, 1.0);
        let q = Polytope::cube(2, 1.0);
        let u = ConvexFunction::support_plus_indicator(p, Some(q)).unwrap();
        let e = random_frame(2, 1, 5);
        let proj = u.project(&e).unwrap();
        let comp = e.orthogonal_complement();
        for sval in [-0.4, 0.0, 0.5] {
            let s = vecd(&[sval]);
            let base = e.lift(&s);
            let mut best = f64::INFINITY;
            for i in 0..4000 {
                let w = vecd(&[-2.0 + i as f64 * 0.001]);
                best = best.min(u.evaluate(&(&base + comp.lift(&w))));
            }
            let got = proj.evaluate(&s);
            // The scan oracle is resolution-limited; the lazy value may dip
            // slightly below it but never above.
            assert!(
                got <= best + 1e-6 && got >= best - 2e-3,
                "s = {sval}: lazy {got}, oracle {best}"
            );
        }
    }

    #[test]
    fn projection_commutes_with_epi_mult() {
        let u = ConvexFunction::cone_t(3, 0.5);
        let e = random_frame(3, 2, 77);
        let lambda = 2.0;
        let a = super::super::epi::epi_mult(lambda, &u)
            .unwrap()
            .project(&e)
            .unwrap();
        let b = super::super::epi::epi_mult(lambda, &u.project(&e).unwrap()).unwrap();
        for p in [[0.2, 0.3], [1.5, 0.0], [0.0, 1.9]] {
            let s = vecd(&p);
            let (va, vb) = (a.evaluate(&s), b.evaluate(&s));
            if va.is_finite() || vb.is_finite() {
                assert_abs_diff_eq!(va, vb, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn projection_subgradients_come_from_fiber_minimizers() {
        // For y_E in the subdifferential of proj_E u at x_E there is a
        // fiber minimizer x with y_E in the subdifferential of u at x,
        // checked through the subgradient inequality at random points.
        let p = Polytope::cube(2, 1.0);
        let q = Polytope::cube(2, 1.0);
        let u = ConvexFunction::support_plus_indicator(p, Some(q)).unwrap();
        let e = random_frame(2, 1, 99);
        let mut rng = CounterRng::new(4242, 0);
        for trial in 0..5 {
            let s = vecd(&[-0.5 + 0.25 * trial as f64]);
            let grad = match projection_gradient(&u, &e, &s) {
                Ok(g) => g,
                Err(_) => continue,
            };
            let (_, minimizer) = fiber_minimum(&u, &e, &s).expect("feasible fiber");
            let y = e.lift(&grad);
            let u_at_min = u.evaluate(&minimizer);
            let mut checked = 0;
            while checked < 1000 {
                let w = vecd(&[rng.next_range(-1.0, 1.0), rng.next_range(-1.0, 1.0)]);
                let uw = u.evaluate(&w);
                if !uw.is_finite() {
                    continue;
                }
                checked += 1;
                let rhs = u_at_min + y.dot(&(&w - &minimizer)) - 2e-5;
                assert!(
                    uw >= rhs,
                    "subgradient inequality failed: u(w) = {uw}, bound = {rhs}"
                );
            }
        }
    }
}
