//! Legendre-Fenchel transforms: closed forms where the variant algebra is
//! closed, the separable discrete transform on grids.

use super::{ConvexFunction, RadialProfile, Shape};
use crate::error::{Error, Result};
use crate::geometry::Polytope;
use nalgebra::{DMatrix, DVector};

impl ConvexFunction {
    /// Convex conjugate `u*(y) = sup_x (<x, y> - u(x))`.
    pub fn legendre(&self) -> Result<ConvexFunction> {
        let n = self.dim();
        match &self.shape {
            Shape::Quadratic { a, b, c } => {
                let inv = a.clone().try_inverse().ok_or_else(|| {
                    Error::precondition("quadratic matrix is numerically singular")
                })?;
                let b2 = -(&inv * b);
                let c2 = 0.5 * (&inv * b).dot(b) - c;
                Ok(ConvexFunction::from_shape(
                    n,
                    Shape::Quadratic { a: inv, b: b2, c: c2 },
                ))
            }
            Shape::SmoothRadial { profile } => match profile {
                RadialProfile::Power { .. } => {
                    let dual = profile.conjugate().expect("power profiles conjugate");
                    Ok(ConvexFunction::from_shape(
                        n,
                        Shape::SmoothRadial { profile: dual },
                    ))
                }
                RadialProfile::Ramp { slope, knee } => {
                    // (R (|y| - t)_+)* = t |x| + I_{R B}.
                    ConvexFunction::cone_ball(*knee, *slope, DVector::zeros(n))
                }
            },
            Shape::ConeBall {
                slope,
                radius,
                center,
            } => {
                let ramp = ConvexFunction::from_shape(
                    n,
                    Shape::SmoothRadial {
                        profile: RadialProfile::Ramp {
                            slope: *radius,
                            knee: *slope,
                        },
                    },
                );
                if center.amax() == 0.0 {
                    Ok(ramp)
                } else {
                    // (u(. - c))* = u*(y) + <c, y>.
                    Ok(ConvexFunction::from_shape(
                        n,
                        Shape::Affine {
                            inner: Box::new(ramp),
                            rotation: None,
                            translation: None,
                            linear: Some(center.clone()),
                            offset: 0.0,
                        },
                    ))
                }
            }
            Shape::SupportPlusIndicator { p, q } => match q {
                None => Ok(ConvexFunction::from_shape(
                    n,
                    Shape::SupportPlusIndicator {
                        p: Polytope::origin(n),
                        q: Some(p.clone()),
                    },
                )),
                Some(q) => {
                    if is_origin_polytope(p) {
                        // (I_Q)* = h_Q.
                        return Ok(ConvexFunction::from_shape(
                            n,
                            Shape::SupportPlusIndicator {
                                p: q.clone(),
                                q: None,
                            },
                        ));
                    }
                    if p.vertices().len() == 1 {
                        // (<v, .> + I_Q)* = h_Q(y - v).
                        let v = p.vertices()[0].clone();
                        let h_q = ConvexFunction::from_shape(
                            n,
                            Shape::SupportPlusIndicator {
                                p: q.clone(),
                                q: None,
                            },
                        );
                        return Ok(h_q.translate(&v, 0.0));
                    }
                    // (h_P + I_Q)* = I_P [] h_Q.
                    let i_p = ConvexFunction::indicator(p.clone());
                    let h_q = ConvexFunction::from_shape(
                        n,
                        Shape::SupportPlusIndicator {
                            p: q.clone(),
                            q: None,
                        },
                    );
                    Ok(ConvexFunction::from_shape(
                        n,
                        Shape::EpiSum {
                            operands: vec![i_p, h_q],
                        },
                    ))
                }
            },
            Shape::PiecewiseLinearSum { anchors } => {
                // sup_x <x,y> - 1/2 sum |x_i - a_i| = <a, y> + I_{[-1/2,1/2]^n}.
                Ok(ConvexFunction::from_shape(
                    n,
                    Shape::SupportPlusIndicator {
                        p: Polytope::point(anchors.clone()),
                        q: Some(Polytope::cube(n, 0.5)),
                    },
                ))
            }
            Shape::EpiSum { operands } => {
                let mut items = Vec::with_capacity(operands.len());
                for u in operands {
                    items.push(u.legendre()?);
                }
                Ok(simplify_sum(n, items))
            }
            Shape::SumOf { items } => {
                let mut operands = Vec::with_capacity(items.len());
                for u in items {
                    operands.push(u.legendre()?);
                }
                Ok(ConvexFunction::from_shape(n, Shape::EpiSum { operands }))
            }
            Shape::GridSampled { grid } => {
                let out = grid.legendre(None);
                Ok(ConvexFunction::from_shape(n, Shape::GridSampled { grid: out }))
            }
            Shape::Embedded { subspace, inner } => {
                let dual = inner.legendre()?;
                Ok(ConvexFunction::from_shape(
                    n,
                    Shape::Cylinder {
                        subspace: subspace.clone(),
                        inner: Box::new(dual),
                    },
                ))
            }
            Shape::Cylinder { subspace, inner } => {
                let dual = inner.legendre()?;
                Ok(ConvexFunction::from_shape(
                    n,
                    Shape::Embedded {
                        subspace: subspace.clone(),
                        inner: Box::new(dual),
                    },
                ))
            }
            Shape::Affine {
                inner,
                rotation,
                translation,
                linear,
                offset,
            } => {
                // (g(R'(x - t)) + <l, x> + c)* = g*(R'(y - l)) + <t, y> - <t, l> - c.
                let dual = inner.legendre()?;
                let t_dot_l = match (translation, linear) {
                    (Some(t), Some(l)) => t.dot(l),
                    _ => 0.0,
                };
                Ok(ConvexFunction::from_shape(
                    n,
                    Shape::Affine {
                        inner: Box::new(dual),
                        rotation: rotation.clone(),
                        translation: linear.clone(),
                        linear: translation.clone(),
                        offset: -offset - t_dot_l,
                    },
                ))
            }
            Shape::MaxOf { .. } | Shape::MinOf { .. } | Shape::Projection { .. } => {
                Err(Error::unsupported(format!(
                    "legendre transform not available for {}",
                    self.variant_name()
                )))
            }
        }
    }
}

fn is_origin_polytope(p: &Polytope) -> bool {
    p.vertices().iter().all(|v| v.amax() == 0.0)
}

/// Collapse a pointwise sum where exact simplifications exist.
pub(super) fn simplify_sum(n: usize, items: Vec<ConvexFunction>) -> ConvexFunction {
    if items.len() == 1 {
        return items.into_iter().next().unwrap();
    }
    // All quadratic: add the forms.
    if items
        .iter()
        .all(|u| matches!(u.shape(), Shape::Quadratic { .. }))
    {
        let mut a_sum = DMatrix::zeros(n, n);
        let mut b_sum = DVector::zeros(n);
        let mut c_sum = 0.0;
        for u in &items {
            if let Shape::Quadratic { a, b, c } = u.shape() {
                a_sum += a;
                b_sum += b;
                c_sum += c;
            }
        }
        return ConvexFunction::from_shape(
            n,
            Shape::Quadratic {
                a: a_sum,
                b: b_sum,
                c: c_sum,
            },
        );
    }
    // Pure support function + pure indicator recombine exactly.
    if items.len() == 2 {
        let pick = |want_support: bool| {
            items.iter().find_map(|u| match u.shape() {
                Shape::SupportPlusIndicator { p, q: None } if want_support => Some((p, None)),
                Shape::SupportPlusIndicator { p, q: Some(q) }
                    if !want_support && is_origin_polytope(p) =>
                {
                    Some((p, Some(q)))
                }
                _ => None,
            })
        };
        if let (Some((support_p, _)), Some((_, Some(ind_q)))) = (pick(true), pick(false)) {
            return ConvexFunction::from_shape(
                n,
                Shape::SupportPlusIndicator {
                    p: support_p.clone(),
                    q: Some(ind_q.clone()),
                },
            );
        }
    }
    ConvexFunction::from_shape(n, Shape::SumOf { items })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::GridFunction;
    use crate::quad::BoxDomain;
    use approx::assert_abs_diff_eq;

    fn vecd(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    #[test]
    fn isotropic_quadratic_is_self_dual() {
        let u = ConvexFunction::isotropic_quadratic(3);
        let d = u.legendre().unwrap();
        let x = vecd(&[0.4, -1.0, 0.2]);
        assert_abs_diff_eq!(d.evaluate(&x), u.evaluate(&x), epsilon = 1e-14);
    }

    #[test]
    fn diagonal_quadratic_inverts() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]);
        let u = ConvexFunction::quadratic(a, DVector::zeros(2), 0.0).unwrap();
        let d = u.legendre().unwrap();
        let y = vecd(&[1.0, 1.0]);
        // 1/2 y' diag(1/2, 2) y = 0.25 + 1.0.
        assert_abs_diff_eq!(d.evaluate(&y), 1.25, epsilon = 1e-14);
    }

    #[test]
    fn ball_indicator_conjugates_to_norm() {
        // I_{B^n} as a cone with zero slope; conjugate is |y|.
        let u = ConvexFunction::cone_t(2, 0.0);
        let d = u.legendre().unwrap();
        for y in [[0.3, -0.4], [2.0, 1.0], [0.0, 0.0]] {
            let v = vecd(&y);
            assert_abs_diff_eq!(d.evaluate(&v), v.norm(), epsilon = 1e-13);
        }
        // Grid oracle: discrete sup over the ball.
        let grid = GridFunction::from_fn(
            &BoxDomain::new(vec![-1.0, -1.0], vec![1.0, 1.0]),
            vec![201, 201],
            |x| {
                if x[0] * x[0] + x[1] * x[1] <= 1.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            },
        );
        let y = vecd(&[0.8, -0.6]);
        let mut sup = f64::NEG_INFINITY;
        for i in 0..201 {
            for j in 0..201 {
                let x = [-1.0 + i as f64 * 0.01, -1.0 + j as f64 * 0.01];
                if grid.eval(&x).is_finite() {
                    sup = sup.max(x[0] * y[0] + x[1] * y[1]);
                }
            }
        }
        assert_abs_diff_eq!(d.evaluate(&y), sup, epsilon = 2e-2);
    }

    #[test]
    fn double_transform_returns_original() {
        let a = DMatrix::from_row_slice(2, 2, &[1.7, 0.4, 0.4, 0.9]);
        let u = ConvexFunction::quadratic(a, vecd(&[0.1, -0.2]), 0.3).unwrap();
        let uu = u.legendre().unwrap().legendre().unwrap();
        for p in [[0.0, 0.0], [1.0, 2.0], [-0.7, 0.4]] {
            let x = vecd(&p);
            assert_abs_diff_eq!(uu.evaluate(&x), u.evaluate(&x), epsilon = 1e-12);
        }

        let cone = ConvexFunction::cone_t(3, 0.5);
        let cc = cone.legendre().unwrap().legendre().unwrap();
        for p in [[0.1, 0.2, 0.0], [0.9, 0.0, 0.0]] {
            let x = vecd(&p);
            assert_abs_diff_eq!(cc.evaluate(&x), cone.evaluate(&x), epsilon = 1e-12);
        }
    }

    #[test]
    fn pl_sum_conjugate_is_box_indicator_plus_linear() {
        let u = ConvexFunction::pl_sum(vecd(&[1.0, -2.0]));
        let d = u.legendre().unwrap();
        assert_abs_diff_eq!(d.evaluate(&vecd(&[0.25, 0.5])), 0.25 - 1.0, epsilon = 1e-13);
        assert_eq!(d.evaluate(&vecd(&[0.75, 0.0])), f64::INFINITY);
        // Involution.
        let dd = d.legendre().unwrap();
        for p in [[0.0, 0.0], [1.5, -0.3]] {
            let x = vecd(&p);
            assert_abs_diff_eq!(dd.evaluate(&x), u.evaluate(&x), epsilon = 1e-12);
        }
    }

    #[test]
    fn support_plus_indicator_double_transform() {
        let p = Polytope::cube(2, 1.0);
        let q = Polytope::cube(2, 0.75);
        let u = ConvexFunction::support_plus_indicator(p, Some(q)).unwrap();
        let uu = u.legendre().unwrap().legendre().unwrap();
        for pt in [[0.2, -0.3], [0.7, 0.7]] {
            let x = vecd(&pt);
            assert_abs_diff_eq!(uu.evaluate(&x), u.evaluate(&x), epsilon = 1e-10);
        }
    }

    #[test]
    fn grid_double_transform_within_spacing() {
        let domain = BoxDomain::new(vec![-2.0, -2.0], vec![2.0, 2.0]);
        let grid = GridFunction::from_fn(&domain, vec![65, 65], |x| {
            0.5 * (x[0] * x[0] + x[1] * x[1])
        });
        let spacing = grid.max_spacing();
        let u = ConvexFunction::grid_sampled(grid).unwrap();
        let uu = u.legendre().unwrap().legendre().unwrap();
        let mut worst: f64 = 0.0;
        for pt in [[0.0, 0.0], [0.5, -0.5], [1.0, 0.25], [-0.75, -1.0]] {
            let x = vecd(&pt);
            worst = worst.max((uu.evaluate(&x) - u.evaluate(&x)).abs());
        }
        assert!(worst < 2.0 * spacing, "worst {worst}, spacing {spacing}");
    }

    #[test]
    fn conjugate_reverses_order() {
        // u <= v pointwise implies u* >= v*.
        let u = ConvexFunction::isotropic_quadratic(2);
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0]);
        let v = ConvexFunction::quadratic(a, DVector::zeros(2), 0.0).unwrap();
        let (du, dv) = (u.legendre().unwrap(), v.legendre().unwrap());
        for k in 0..50 {
            let x = vecd(&[(k as f64 - 25.0) / 10.0, (k as f64 * 7.0 % 11.0 - 5.0) / 5.0]);
            assert!(u.evaluate(&x) <= v.evaluate(&x) + 1e-12);
            assert!(du.evaluate(&x) >= dv.evaluate(&x) - 1e-12);
        }
    }
}
