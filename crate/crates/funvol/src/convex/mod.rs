//! Representations of super-coercive convex functions with evaluation,
//! derivatives, Legendre-Fenchel transforms, epigraph operations,
//! projection functions and lattice operations.
//!
//! The closed-form variants (quadratics, radial profiles, cone functions,
//! support-plus-indicator pairs, piecewise-linear sums) carry exact
//! formulas for everything they support; grid-sampled functions and lazy
//! composites (epi-sums, projections, rigid motions) fall back to numeric
//! paths.

mod descriptor;
mod epi;
mod grid;
mod lattice;
mod legendre;
mod profile;
mod project;

pub use descriptor::ConvexFunctionDescriptor;
pub use epi::{epi_mult, epi_sum};
pub use grid::{discrete_legendre_1d, GridFunction};
pub use lattice::{
    lattice_ops, subdifferential_pl, LatticeOutcome, SubdifferentialSet, MIDPOINT_SAMPLES,
    MIDPOINT_TOL,
};
pub use profile::RadialProfile;
pub use project::FIBER_TOL;

use crate::error::{Error, Result};
use crate::geometry::{Polytope, Subspace};
use crate::quad::BoxDomain;
use nalgebra::{DMatrix, DVector};

pub const EVAL_MEMBERSHIP_TOL: f64 = 1e-9;

/// A convex function on `R^n` (extended-real-valued).
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexFunction {
    dim: usize,
    shape: Shape,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// `x -> 1/2 x'Ax + b'x + c` with `A` symmetric positive definite.
    Quadratic {
        a: DMatrix<f64>,
        b: DVector<f64>,
        c: f64,
    },
    /// `x -> profile(|x|)`.
    SmoothRadial { profile: RadialProfile },
    /// `x -> slope |x - center| + I_{center + radius B}(x)`.
    ConeBall {
        slope: f64,
        radius: f64,
        center: DVector<f64>,
    },
    /// `x -> h_P(x) + I_Q(x)`; `q = None` means the support function alone.
    SupportPlusIndicator { p: Polytope, q: Option<Polytope> },
    /// `x -> 1/2 sum |x_i - anchors_i|`.
    PiecewiseLinearSum { anchors: DVector<f64> },
    /// Symbolic infimal convolution of the operands.
    EpiSum { operands: Vec<ConvexFunction> },
    /// Pointwise sum.
    SumOf { items: Vec<ConvexFunction> },
    /// Pointwise maximum (always convex).
    MaxOf { items: Vec<ConvexFunction> },
    /// Pointwise minimum; constructed only after a convexity acceptance
    /// test.
    MinOf { items: Vec<ConvexFunction> },
    /// Values on a regular grid with an infinity sentinel.
    GridSampled { grid: GridFunction },
    /// `inner` on the subspace plus the indicator of the subspace
    /// (domain contained in the subspace).
    Embedded {
        subspace: Subspace,
        inner: Box<ConvexFunction>,
    },
    /// `x -> inner(coords_E(x))`: constant along the orthogonal complement.
    Cylinder {
        subspace: Subspace,
        inner: Box<ConvexFunction>,
    },
    /// Lazy projection function `x_E -> min over the fiber of inner`.
    Projection {
        inner: Box<ConvexFunction>,
        frame: Subspace,
    },
    /// `x -> inner(R'(x - t)) + <l, x> + offset`.
    Affine {
        inner: Box<ConvexFunction>,
        rotation: Option<DMatrix<f64>>,
        translation: Option<DVector<f64>>,
        linear: Option<DVector<f64>>,
        offset: f64,
    },
}

impl ConvexFunction {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub(crate) fn from_shape(dim: usize, shape: Shape) -> Self {
        ConvexFunction { dim, shape }
    }

    // --- constructors ----------------------------------------------------

    pub fn quadratic(a: DMatrix<f64>, b: DVector<f64>, c: f64) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || b.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: a.ncols().max(b.len()),
            });
        }
        let scale = a.amax().max(1e-300);
        for i in 0..n {
            for j in 0..n {
                if (a[(i, j)] - a[(j, i)]).abs() > 1e-10 * scale {
                    return Err(Error::precondition("quadratic matrix must be symmetric"));
                }
            }
        }
        let eig = a.clone().symmetric_eigen();
        if eig.eigenvalues.iter().any(|l| *l <= 0.0) {
            return Err(Error::precondition(
                "quadratic matrix must be positive definite (super-coercivity)",
            ));
        }
        Ok(ConvexFunction {
            dim: n,
            shape: Shape::Quadratic { a, b, c },
        })
    }

    pub fn isotropic_quadratic(n: usize) -> Self {
        ConvexFunction::quadratic(DMatrix::identity(n, n), DVector::zeros(n), 0.0)
            .expect("identity quadratic is valid")
    }

    pub fn smooth_radial(n: usize, profile: RadialProfile) -> Result<Self> {
        profile.validate()?;
        Ok(ConvexFunction {
            dim: n,
            shape: Shape::SmoothRadial { profile },
        })
    }

    /// `t |x - center| + I_{center + R B^n}`.
    pub fn cone_ball(slope: f64, radius: f64, center: DVector<f64>) -> Result<Self> {
        if !(slope >= 0.0) || !(radius > 0.0) {
            return Err(Error::precondition(
                "cone function needs slope >= 0 and radius > 0",
            ));
        }
        Ok(ConvexFunction {
            dim: center.len(),
            shape: Shape::ConeBall {
                slope,
                radius,
                center,
            },
        })
    }

    /// The calibration family `u_t = t|x| + I_{B^n}`.
    pub fn cone_t(n: usize, t: f64) -> Self {
        ConvexFunction::cone_ball(t, 1.0, DVector::zeros(n)).expect("unit cone is valid")
    }

    pub fn support_plus_indicator(p: Polytope, q: Option<Polytope>) -> Result<Self> {
        let n = p.ambient_dim();
        if let Some(q) = &q {
            if q.ambient_dim() != n {
                return Err(Error::Dimension {
                    expected: n,
                    got: q.ambient_dim(),
                });
            }
        }
        Ok(ConvexFunction {
            dim: n,
            shape: Shape::SupportPlusIndicator { p, q },
        })
    }

    pub fn indicator(q: Polytope) -> Self {
        let n = q.ambient_dim();
        ConvexFunction::support_plus_indicator(Polytope::origin(n), Some(q))
            .expect("indicator is valid")
    }

    pub fn pl_sum(anchors: DVector<f64>) -> Self {
        ConvexFunction {
            dim: anchors.len(),
            shape: Shape::PiecewiseLinearSum { anchors },
        }
    }

    pub fn grid_sampled(grid: GridFunction) -> Result<Self> {
        if !grid.is_midpoint_convex(1e-9) {
            return Err(Error::precondition(
                "grid values violate midpoint convexity",
            ));
        }
        Ok(ConvexFunction {
            dim: grid.dim(),
            shape: Shape::GridSampled { grid },
        })
    }

    /// Function with domain inside a subspace: `inner` on the subspace,
    /// `+inf` off it.
    pub fn embedded(subspace: Subspace, inner: ConvexFunction) -> Result<Self> {
        if inner.dim() != subspace.dim() {
            return Err(Error::Dimension {
                expected: subspace.dim(),
                got: inner.dim(),
            });
        }
        Ok(ConvexFunction {
            dim: subspace.ambient_dim(),
            shape: Shape::Embedded {
                subspace,
                inner: Box::new(inner),
            },
        })
    }

    /// Cylinder function, constant along the complement of the subspace.
    pub fn cylinder(subspace: Subspace, inner: ConvexFunction) -> Result<Self> {
        if inner.dim() != subspace.dim() {
            return Err(Error::Dimension {
                expected: subspace.dim(),
                got: inner.dim(),
            });
        }
        Ok(ConvexFunction {
            dim: subspace.ambient_dim(),
            shape: Shape::Cylinder {
                subspace,
                inner: Box::new(inner),
            },
        })
    }

    // --- evaluation -------------------------------------------------------

    /// Extended-real evaluation (`+inf` outside the effective domain).
    pub fn evaluate(&self, x: &DVector<f64>) -> f64 {
        match &self.shape {
            Shape::Quadratic { a, b, c } => 0.5 * (a * x).dot(x) + b.dot(x) + c,
            Shape::SmoothRadial { profile } => profile.value(x.norm()),
            Shape::ConeBall {
                slope,
                radius,
                center,
            } => {
                let r = (x - center).norm();
                if r <= radius + 1e-12 * radius {
                    slope * r
                } else {
                    f64::INFINITY
                }
            }
            Shape::SupportPlusIndicator { p, q } => {
                let inside = match q {
                    Some(q) => q.contains(x, EVAL_MEMBERSHIP_TOL),
                    None => true,
                };
                if inside {
                    p.support(x)
                } else {
                    f64::INFINITY
                }
            }
            Shape::PiecewiseLinearSum { anchors } => {
                0.5 * x
                    .iter()
                    .zip(anchors.iter())
                    .map(|(xi, ai)| (xi - ai).abs())
                    .sum::<f64>()
            }
            Shape::EpiSum { operands } => epi::evaluate_epi_sum(operands, x),
            Shape::SumOf { items } => items.iter().map(|u| u.evaluate(x)).sum(),
            Shape::MaxOf { items } => items
                .iter()
                .map(|u| u.evaluate(x))
                .fold(f64::NEG_INFINITY, f64::max),
            Shape::MinOf { items } => items
                .iter()
                .map(|u| u.evaluate(x))
                .fold(f64::INFINITY, f64::min),
            Shape::GridSampled { grid } => grid.eval(x.as_slice()),
            Shape::Embedded { subspace, inner } => {
                let off = subspace.off_subspace_distance(x);
                if off > 1e-9 * (1.0 + x.norm()) {
                    f64::INFINITY
                } else {
                    inner.evaluate(&subspace.coords(x))
                }
            }
            Shape::Cylinder { subspace, inner } => inner.evaluate(&subspace.coords(x)),
            Shape::Projection { inner, frame } => project::evaluate_projection(inner, frame, x),
            Shape::Affine {
                inner,
                rotation,
                translation,
                linear,
                offset,
            } => {
                let mut y = x.clone();
                if let Some(t) = translation {
                    y -= t;
                }
                if let Some(r) = rotation {
                    y = r.transpose() * y;
                }
                let mut v = inner.evaluate(&y) + offset;
                if let Some(l) = linear {
                    v += l.dot(x);
                }
                v
            }
        }
    }

    /// Almost-everywhere gradient. At non-differentiable points an error
    /// naming the variant and the point is returned.
    pub fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        match &self.shape {
            Shape::Quadratic { a, b, .. } => Ok(a * x + b),
            Shape::SmoothRadial { profile } => {
                let r = x.norm();
                if r == 0.0 {
                    return Ok(DVector::zeros(self.dim));
                }
                Ok(x * (profile.derivative(r) / r))
            }
            Shape::ConeBall {
                slope,
                radius,
                center,
            } => {
                let d = x - center;
                let r = d.norm();
                if r > *radius + 1e-12 * radius {
                    return Err(Error::domain(format!(
                        "cone function gradient outside the ball at {:?}",
                        x.as_slice()
                    )));
                }
                if r < 1e-14 {
                    return Err(Error::domain(format!(
                        "cone function not differentiable at its apex {:?}",
                        x.as_slice()
                    )));
                }
                Ok(d * (slope / r))
            }
            Shape::SupportPlusIndicator { p, q } => {
                if let Some(q) = q {
                    if !q.contains(x, EVAL_MEMBERSHIP_TOL) {
                        return Err(Error::domain(format!(
                            "support-plus-indicator gradient outside the domain at {:?}",
                            x.as_slice()
                        )));
                    }
                }
                let face = p.support_face(x, 1e-12 * (1.0 + x.norm()));
                if face.len() != 1 {
                    return Err(Error::domain(format!(
                        "support function not differentiable at {:?} (face has {} vertices)",
                        x.as_slice(),
                        face.len()
                    )));
                }
                Ok(p.vertices()[face[0]].clone())
            }
            Shape::PiecewiseLinearSum { anchors } => {
                let mut g = DVector::zeros(self.dim);
                for i in 0..self.dim {
                    let d = x[i] - anchors[i];
                    if d.abs() < 1e-14 {
                        return Err(Error::domain(format!(
                            "piecewise-linear sum not differentiable at {:?} (coordinate {i})",
                            x.as_slice()
                        )));
                    }
                    g[i] = 0.5 * d.signum();
                }
                Ok(g)
            }
            Shape::SumOf { items } => {
                let mut g = DVector::zeros(self.dim);
                for u in items {
                    g += u.gradient(x)?;
                }
                Ok(g)
            }
            Shape::MaxOf { items } | Shape::MinOf { items } => {
                let take_max = matches!(self.shape, Shape::MaxOf { .. });
                let vals: Vec<f64> = items.iter().map(|u| u.evaluate(x)).collect();
                let best = if take_max {
                    vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                } else {
                    vals.iter().cloned().fold(f64::INFINITY, f64::min)
                };
                let scale = 1.0 + best.abs();
                let ties: Vec<usize> = vals
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| (**v - best).abs() <= 1e-12 * scale)
                    .map(|(i, _)| i)
                    .collect();
                // Tied branches with agreeing gradients leave the lattice
                // function differentiable (regions of equal values).
                let mut grad: Option<DVector<f64>> = None;
                for &i in &ties {
                    let g = items[i].gradient(x)?;
                    match &grad {
                        None => grad = Some(g),
                        Some(g0) => {
                            if (g0 - &g).norm() > 1e-9 * (1.0 + g0.norm()) {
                                return Err(Error::domain(format!(
                                    "lattice function not differentiable at {:?} (tied branches)",
                                    x.as_slice()
                                )));
                            }
                        }
                    }
                }
                grad.ok_or_else(|| {
                    Error::domain(format!(
                        "lattice function has no attaining branch at {:?}",
                        x.as_slice()
                    ))
                })
            }
            Shape::GridSampled { grid } => {
                let (g, _) = grid.gradient_hessian(x.as_slice())?;
                Ok(DVector::from_vec(g))
            }
            Shape::Cylinder { subspace, inner } => {
                let g = inner.gradient(&subspace.coords(x))?;
                Ok(subspace.lift(&g))
            }
            Shape::Projection { inner, frame } => {
                project::projection_gradient(inner, frame, x)
            }
            Shape::Affine {
                inner,
                rotation,
                translation,
                linear,
                ..
            } => {
                let mut y = x.clone();
                if let Some(t) = translation {
                    y -= t;
                }
                if let Some(r) = rotation {
                    y = r.transpose() * y;
                }
                let mut g = inner.gradient(&y)?;
                if let Some(r) = rotation {
                    g = r * g;
                }
                if let Some(l) = linear {
                    g += l;
                }
                Ok(g)
            }
            Shape::EpiSum { .. } | Shape::Embedded { .. } => Err(Error::unsupported(format!(
                "gradient not available for {} at {:?}",
                self.variant_name(),
                x.as_slice()
            ))),
        }
    }

    /// Gradient and Hessian for twice-differentiable representations.
    pub fn gradient_hessian(&self, x: &DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
        match &self.shape {
            Shape::Quadratic { a, b, .. } => Ok((a * x + b, a.clone())),
            Shape::SmoothRadial { profile } => {
                let r = x.norm();
                let n = self.dim;
                if r < 1e-14 {
                    // At the origin the Hessian is phi''(0) I (zero for
                    // super-quadratic powers).
                    let h2 = profile.second_derivative(0.0)?;
                    return Ok((DVector::zeros(n), DMatrix::identity(n, n) * h2));
                }
                let d1 = profile.derivative(r);
                let d2 = profile.second_derivative(r)?;
                let e = x / r;
                let ee = &e * e.transpose();
                let hess = &ee * d2 + (DMatrix::identity(n, n) - &ee) * (d1 / r);
                Ok((e * d1, hess))
            }
            Shape::ConeBall {
                slope,
                radius,
                center,
            } => {
                let d = x - center;
                let r = d.norm();
                if r < 1e-14 || r > *radius {
                    return Err(Error::domain(format!(
                        "cone function not twice differentiable at {:?}",
                        x.as_slice()
                    )));
                }
                let n = self.dim;
                let e = &d / r;
                let ee = &e * e.transpose();
                let hess = (DMatrix::identity(n, n) - &ee) * (slope / r);
                Ok((e * *slope, hess))
            }
            Shape::SumOf { items } => {
                let mut g = DVector::zeros(self.dim);
                let mut h = DMatrix::zeros(self.dim, self.dim);
                for u in items {
                    let (gi, hi) = u.gradient_hessian(x)?;
                    g += gi;
                    h += hi;
                }
                Ok((g, h))
            }
            Shape::GridSampled { grid } => {
                let (g, h) = grid.gradient_hessian(x.as_slice())?;
                let n = self.dim;
                let hess = DMatrix::from_fn(n, n, |i, j| h[i][j]);
                Ok((DVector::from_vec(g), hess))
            }
            Shape::Cylinder { subspace, inner } => {
                let (g, h) = inner.gradient_hessian(&subspace.coords(x))?;
                let f = subspace.frame();
                Ok((subspace.lift(&g), f * h * f.transpose()))
            }
            Shape::Affine {
                inner,
                rotation,
                translation,
                linear,
                ..
            } => {
                let mut y = x.clone();
                if let Some(t) = translation {
                    y -= t;
                }
                if let Some(r) = rotation {
                    y = r.transpose() * y;
                }
                let (mut g, mut h) = inner.gradient_hessian(&y)?;
                if let Some(r) = rotation {
                    g = r * g;
                    h = r * h * r.transpose();
                }
                if let Some(l) = linear {
                    g += l;
                }
                Ok((g, h))
            }
            _ => Err(Error::unsupported(format!(
                "second derivatives not available for {} at {:?}",
                self.variant_name(),
                x.as_slice()
            ))),
        }
    }

    pub fn variant_name(&self) -> &'static str {
        match &self.shape {
            Shape::Quadratic { .. } => "quadratic",
            Shape::SmoothRadial { .. } => "smooth_radial",
            Shape::ConeBall { .. } => "cone_ball",
            Shape::SupportPlusIndicator { .. } => "support_plus_indicator",
            Shape::PiecewiseLinearSum { .. } => "piecewise_linear_sum",
            Shape::EpiSum { .. } => "epi_sum",
            Shape::SumOf { .. } => "sum",
            Shape::MaxOf { .. } => "max",
            Shape::MinOf { .. } => "min",
            Shape::GridSampled { .. } => "grid_sampled",
            Shape::Embedded { .. } => "embedded",
            Shape::Cylinder { .. } => "cylinder",
            Shape::Projection { .. } => "projection",
            Shape::Affine { .. } => "affine",
        }
    }

    /// Twice continuously differentiable with positive semidefinite
    /// Hessian formulas everywhere in the domain interior (the variants
    /// accepted by the direct Hessian-integral route for j < n).
    pub fn is_smooth(&self) -> bool {
        match &self.shape {
            Shape::Quadratic { .. } => true,
            Shape::SmoothRadial { profile } => profile.is_smooth(),
            Shape::SumOf { items } => items.iter().all(|u| u.is_smooth()),
            Shape::Affine { inner, .. } => inner.is_smooth(),
            _ => false,
        }
    }

    pub fn is_supercoercive(&self) -> bool {
        match &self.shape {
            Shape::Quadratic { .. } => true,
            Shape::SmoothRadial { profile } => profile.is_supercoercive(),
            Shape::ConeBall { .. } => true,
            Shape::SupportPlusIndicator { q, .. } => q.is_some(),
            Shape::PiecewiseLinearSum { .. } => false,
            Shape::EpiSum { operands } => operands.iter().all(|u| u.is_supercoercive()),
            Shape::SumOf { items } => items.iter().any(|u| u.is_supercoercive()),
            Shape::MaxOf { items } => items.iter().any(|u| u.is_supercoercive()),
            Shape::MinOf { items } => items.iter().all(|u| u.is_supercoercive()),
            Shape::GridSampled { .. } => true,
            Shape::Embedded { inner, .. } => inner.is_supercoercive(),
            Shape::Cylinder { .. } => false,
            Shape::Projection { inner, .. } => inner.is_supercoercive(),
            Shape::Affine { inner, .. } => inner.is_supercoercive(),
        }
    }

    /// Bounding box of the effective domain; `None` when unbounded.
    pub fn domain_box(&self) -> Option<BoxDomain> {
        match &self.shape {
            Shape::Quadratic { .. }
            | Shape::SmoothRadial { .. }
            | Shape::PiecewiseLinearSum { .. }
            | Shape::Cylinder { .. } => None,
            Shape::ConeBall {
                radius, center, ..
            } => {
                let lo = center.iter().map(|c| c - radius).collect();
                let hi = center.iter().map(|c| c + radius).collect();
                Some(BoxDomain::new(lo, hi))
            }
            Shape::SupportPlusIndicator { q, .. } => q.as_ref().map(|q| q.bounding_box()),
            Shape::EpiSum { operands } => {
                // dom(u1 [] u2) = dom u1 + dom u2.
                let mut acc: Option<BoxDomain> = None;
                for u in operands {
                    let b = u.domain_box()?;
                    acc = Some(match acc {
                        None => b,
                        Some(a) => BoxDomain::new(
                            a.lo.iter().zip(&b.lo).map(|(x, y)| x + y).collect(),
                            a.hi.iter().zip(&b.hi).map(|(x, y)| x + y).collect(),
                        ),
                    });
                }
                acc
            }
            Shape::SumOf { items } | Shape::MaxOf { items } => {
                // Domain is the intersection; any bounded member bounds it.
                let mut acc: Option<BoxDomain> = None;
                for u in items {
                    if let Some(b) = u.domain_box() {
                        acc = Some(match acc {
                            None => b,
                            Some(a) => a.intersect(&b),
                        });
                    }
                }
                acc
            }
            Shape::MinOf { items } => {
                let mut acc: Option<BoxDomain> = None;
                for u in items {
                    let b = u.domain_box()?;
                    acc = Some(match acc {
                        None => b,
                        Some(a) => a.hull(&b),
                    });
                }
                acc
            }
            Shape::GridSampled { grid } => Some(grid.domain()),
            Shape::Embedded { subspace, inner } => {
                let inner_box = inner
                    .domain_box()
                    .unwrap_or_else(|| large_box(subspace.dim()));
                Some(lift_box(subspace, &inner_box))
            }
            Shape::Projection { inner, frame } => {
                let b = inner.domain_box()?;
                Some(project_box(frame, &b))
            }
            Shape::Affine {
                inner,
                rotation,
                translation,
                ..
            } => {
                let b = inner.domain_box()?;
                Some(transform_box(&b, rotation.as_ref(), translation.as_ref()))
            }
        }
    }

    /// Box containing `{x in dom u : |grad u(x)| <= s}` (up to null sets);
    /// `None` when no bound is available.
    pub fn gradient_preimage_box(&self, s: f64) -> Option<BoxDomain> {
        let raw = match &self.shape {
            Shape::Quadratic { a, b, .. } => {
                let inv = a.clone().try_inverse()?;
                let center = -(&inv * b);
                let n = self.dim;
                let lo: Vec<f64> = (0..n)
                    .map(|i| center[i] - s * inv.row(i).norm())
                    .collect();
                let hi: Vec<f64> = (0..n)
                    .map(|i| center[i] + s * inv.row(i).norm())
                    .collect();
                Some(BoxDomain::new(lo, hi))
            }
            Shape::SmoothRadial { profile } => {
                let r = profile.derivative_preimage_radius(s)?;
                Some(BoxDomain::new(vec![-r; self.dim], vec![r; self.dim]))
            }
            Shape::ConeBall { .. }
            | Shape::SupportPlusIndicator { .. }
            | Shape::GridSampled { .. }
            | Shape::Embedded { .. } => self.domain_box(),
            Shape::PiecewiseLinearSum { .. } => {
                let norm = 0.5 * (self.dim as f64).sqrt();
                if s >= norm {
                    None
                } else {
                    Some(BoxDomain::new(vec![0.0; self.dim], vec![0.0; self.dim]))
                }
            }
            Shape::SumOf { items } => {
                if items.len() == 1 {
                    items[0].gradient_preimage_box(s)
                } else {
                    None
                }
            }
            Shape::MaxOf { items } | Shape::MinOf { items } => {
                let mut acc: Option<BoxDomain> = None;
                for u in items {
                    let b = u.gradient_preimage_box(s)?;
                    acc = Some(match acc {
                        None => b,
                        Some(a) => a.hull(&b),
                    });
                }
                acc
            }
            Shape::Affine {
                inner,
                rotation,
                translation,
                linear,
                ..
            } => {
                let slack = linear.as_ref().map(|l| l.norm()).unwrap_or(0.0);
                let b = inner.gradient_preimage_box(s + slack)?;
                Some(transform_box(&b, rotation.as_ref(), translation.as_ref()))
            }
            Shape::Cylinder { .. } | Shape::EpiSum { .. } | Shape::Projection { .. } => None,
        };
        match (raw, self.domain_box()) {
            (Some(a), Some(d)) => Some(a.intersect(&d)),
            (Some(a), None) => Some(a),
            (None, d) => d,
        }
    }

    // --- rigid motions and constants --------------------------------------

    /// `u(. - t) + c`: epi-translation by `(t, c)`.
    pub fn translate(&self, t: &DVector<f64>, c: f64) -> ConvexFunction {
        match &self.shape {
            Shape::Quadratic { a, b, c: c0 } => {
                let b2 = b - a * t;
                let c2 = c0 + 0.5 * (a * t).dot(t) - b.dot(t) + c;
                ConvexFunction {
                    dim: self.dim,
                    shape: Shape::Quadratic {
                        a: a.clone(),
                        b: b2,
                        c: c2,
                    },
                }
            }
            Shape::ConeBall {
                slope,
                radius,
                center,
            } => {
                let moved = ConvexFunction {
                    dim: self.dim,
                    shape: Shape::ConeBall {
                        slope: *slope,
                        radius: *radius,
                        center: center + t,
                    },
                };
                moved.add_offset(c)
            }
            Shape::PiecewiseLinearSum { anchors } => ConvexFunction {
                dim: self.dim,
                shape: Shape::PiecewiseLinearSum {
                    anchors: anchors + t,
                },
            }
            .add_offset(c),
            Shape::Affine {
                inner,
                rotation,
                translation,
                linear,
                offset,
            } => {
                // Compose translations; the linear term picks up a constant.
                let new_translation = match translation {
                    Some(t0) => Some(t0 + t),
                    None => Some(t.clone()),
                };
                let lin_const = linear.as_ref().map(|l| l.dot(t)).unwrap_or(0.0);
                ConvexFunction {
                    dim: self.dim,
                    shape: Shape::Affine {
                        inner: inner.clone(),
                        rotation: rotation.clone(),
                        translation: new_translation,
                        linear: linear.clone(),
                        offset: offset + c + lin_const,
                    },
                }
            }
            _ => ConvexFunction {
                dim: self.dim,
                shape: Shape::Affine {
                    inner: Box::new(self.clone()),
                    rotation: None,
                    translation: Some(t.clone()),
                    linear: None,
                    offset: c,
                },
            },
        }
    }

    pub fn add_offset(&self, c: f64) -> ConvexFunction {
        if c == 0.0 {
            return self.clone();
        }
        match &self.shape {
            Shape::Quadratic { a, b, c: c0 } => ConvexFunction {
                dim: self.dim,
                shape: Shape::Quadratic {
                    a: a.clone(),
                    b: b.clone(),
                    c: c0 + c,
                },
            },
            Shape::Affine {
                inner,
                rotation,
                translation,
                linear,
                offset,
            } => ConvexFunction {
                dim: self.dim,
                shape: Shape::Affine {
                    inner: inner.clone(),
                    rotation: rotation.clone(),
                    translation: translation.clone(),
                    linear: linear.clone(),
                    offset: offset + c,
                },
            },
            _ => ConvexFunction {
                dim: self.dim,
                shape: Shape::Affine {
                    inner: Box::new(self.clone()),
                    rotation: None,
                    translation: None,
                    linear: None,
                    offset: c,
                },
            },
        }
    }

    /// `u(R^-1 x)` for an orthogonal matrix `R`.
    pub fn rotate(&self, r: &DMatrix<f64>) -> ConvexFunction {
        match &self.shape {
            Shape::Quadratic { a, b, c } => ConvexFunction {
                dim: self.dim,
                shape: Shape::Quadratic {
                    a: r * a * r.transpose(),
                    b: r * b,
                    c: *c,
                },
            },
            Shape::SmoothRadial { .. } => self.clone(),
            Shape::ConeBall {
                slope,
                radius,
                center,
            } => ConvexFunction {
                dim: self.dim,
                shape: Shape::ConeBall {
                    slope: *slope,
                    radius: *radius,
                    center: r * center,
                },
            },
            Shape::SupportPlusIndicator { p, q } => ConvexFunction {
                dim: self.dim,
                shape: Shape::SupportPlusIndicator {
                    p: p.rotate(r),
                    q: q.as_ref().map(|q| q.rotate(r)),
                },
            },
            Shape::Affine {
                inner,
                rotation,
                translation,
                linear,
                offset,
            } => {
                let new_rot = match rotation {
                    Some(r0) => r * r0,
                    None => r.clone(),
                };
                ConvexFunction {
                    dim: self.dim,
                    shape: Shape::Affine {
                        inner: inner.clone(),
                        rotation: Some(new_rot),
                        translation: translation.as_ref().map(|t| r * t),
                        linear: linear.as_ref().map(|l| r * l),
                        offset: *offset,
                    },
                }
            }
            _ => ConvexFunction {
                dim: self.dim,
                shape: Shape::Affine {
                    inner: Box::new(self.clone()),
                    rotation: Some(r.clone()),
                    translation: None,
                    linear: None,
                    offset: 0.0,
                },
            },
        }
    }
}

pub(crate) fn large_box(n: usize) -> BoxDomain {
    BoxDomain::new(vec![-1e6; n], vec![1e6; n])
}

/// Box of the image of a subspace-coordinates box under the frame
/// embedding.
pub(crate) fn lift_box(subspace: &Subspace, inner_box: &BoxDomain) -> BoxDomain {
    let n = subspace.ambient_dim();
    let f = subspace.frame();
    let mut lo = vec![0.0; n];
    let mut hi = vec![0.0; n];
    for row in 0..n {
        for col in 0..subspace.dim() {
            let v = f[(row, col)];
            if v >= 0.0 {
                lo[row] += v * inner_box.lo[col];
                hi[row] += v * inner_box.hi[col];
            } else {
                lo[row] += v * inner_box.hi[col];
                hi[row] += v * inner_box.lo[col];
            }
        }
    }
    BoxDomain::new(lo, hi)
}

/// Box of frame coordinates of points of an ambient box.
pub(crate) fn project_box(frame: &Subspace, ambient: &BoxDomain) -> BoxDomain {
    let k = frame.dim();
    let f = frame.frame();
    let mut lo = vec![0.0; k];
    let mut hi = vec![0.0; k];
    for col in 0..k {
        for row in 0..frame.ambient_dim() {
            let v = f[(row, col)];
            if v >= 0.0 {
                lo[col] += v * ambient.lo[row];
                hi[col] += v * ambient.hi[row];
            } else {
                lo[col] += v * ambient.hi[row];
                hi[col] += v * ambient.lo[row];
            }
        }
    }
    BoxDomain::new(lo, hi)
}

pub(crate) fn transform_box(
    b: &BoxDomain,
    rotation: Option<&DMatrix<f64>>,
    translation: Option<&DVector<f64>>,
) -> BoxDomain {
    let n = b.dim();
    let (mut lo, mut hi) = match rotation {
        None => (b.lo.clone(), b.hi.clone()),
        Some(r) => {
            // Envelope of the rotated box.
            let mut lo = vec![0.0; n];
            let mut hi = vec![0.0; n];
            for row in 0..n {
                for col in 0..n {
                    let v = r[(row, col)];
                    if v >= 0.0 {
                        lo[row] += v * b.lo[col];
                        hi[row] += v * b.hi[col];
                    } else {
                        lo[row] += v * b.hi[col];
                        hi[row] += v * b.lo[col];
                    }
                }
            }
            (lo, hi)
        }
    };
    if let Some(t) = translation {
        for i in 0..n {
            lo[i] += t[i];
            hi[i] += t[i];
        }
    }
    BoxDomain::new(lo, hi)
}

/// Largest absolute difference of two functions over a sampling grid on a
/// box (the numeric stand-in for epi-convergence comparisons).
pub fn sup_norm_distance(
    u: &ConvexFunction,
    v: &ConvexFunction,
    domain: &BoxDomain,
    points_per_axis: usize,
) -> f64 {
    let n = domain.dim();
    let mut idx = vec![0usize; n];
    let mut max_diff: f64 = 0.0;
    let total: usize = (0..n).map(|_| points_per_axis).product();
    for flat in 0..total {
        let mut rem = flat;
        for i in (0..n).rev() {
            idx[i] = rem % points_per_axis;
            rem /= points_per_axis;
        }
        let x = DVector::from_fn(n, |i, _| {
            domain.lo[i]
                + (idx[i] as f64 + 0.5) * (domain.hi[i] - domain.lo[i]) / points_per_axis as f64
        });
        let (a, b) = (u.evaluate(&x), v.evaluate(&x));
        if a.is_finite() && b.is_finite() {
            max_diff = max_diff.max((a - b).abs());
        } else if a.is_finite() != b.is_finite() {
            return f64::INFINITY;
        }
    }
    max_diff
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn vecd(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    #[test]
    fn quadratic_evaluation_and_derivatives() {
        let u = ConvexFunction::isotropic_quadratic(2);
        assert_abs_diff_eq!(u.evaluate(&vecd(&[1.0, 1.0])), 1.0);
        let (g, h) = u.gradient_hessian(&vecd(&[0.3, -0.7])).unwrap();
        assert_eq!(g.as_slice(), &[0.3, -0.7]);
        assert_eq!(h[(0, 0)], 1.0);
        assert_eq!(h[(0, 1)], 0.0);
    }

    #[test]
    fn quadratic_requires_positive_definite() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -0.5]);
        assert!(ConvexFunction::quadratic(a, DVector::zeros(2), 0.0).is_err());
    }

    #[test]
    fn cone_ball_values() {
        let u = ConvexFunction::cone_t(2, 2.0);
        assert_abs_diff_eq!(u.evaluate(&vecd(&[0.0, 0.5])), 1.0);
        assert_eq!(u.evaluate(&vecd(&[0.0, 2.0])), f64::INFINITY);
        let g = u.gradient(&vecd(&[0.3, 0.1])).unwrap();
        assert_abs_diff_eq!(g.norm(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn pl_sum_value() {
        let u = ConvexFunction::pl_sum(vecd(&[1.0, 1.0]));
        assert_abs_diff_eq!(u.evaluate(&vecd(&[0.0, 0.0])), 1.0);
    }

    #[test]
    fn support_plus_indicator_evaluation() {
        let p = Polytope::cube(2, 1.0);
        let q = Polytope::cube(2, 0.5);
        let u = ConvexFunction::support_plus_indicator(p, Some(q)).unwrap();
        // h_P(x) = |x_1| + |x_2| for the square P.
        assert_abs_diff_eq!(u.evaluate(&vecd(&[0.25, -0.5])), 0.75, epsilon = 1e-12);
        assert_eq!(u.evaluate(&vecd(&[0.8, 0.0])), f64::INFINITY);
    }

    #[test]
    fn radial_gradient_norm_is_profile_derivative() {
        let u = ConvexFunction::smooth_radial(
            3,
            RadialProfile::Power {
                coeff: 1.0,
                exponent: 4.0,
            },
        )
        .unwrap();
        let x = vecd(&[0.3, -0.2, 0.6]);
        let g = u.gradient(&x).unwrap();
        assert_abs_diff_eq!(g.norm(), x.norm().powi(3), epsilon = 1e-13);
    }

    #[test]
    fn translation_is_exact_for_quadratics() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let u = ConvexFunction::quadratic(a, vecd(&[0.5, -1.0]), 0.7).unwrap();
        let t = vecd(&[0.4, -0.9]);
        let v = u.translate(&t, 1.3);
        for p in [[0.0, 0.0], [1.0, -0.5], [-2.0, 0.25]] {
            let x = vecd(&p);
            assert_abs_diff_eq!(
                v.evaluate(&x),
                u.evaluate(&(&x - &t)) + 1.3,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn rotation_moves_gradients_covariantly() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]);
        let u = ConvexFunction::quadratic(a, DVector::zeros(2), 0.0).unwrap();
        let theta = 0.7f64;
        let r = DMatrix::from_row_slice(
            2,
            2,
            &[theta.cos(), -theta.sin(), theta.sin(), theta.cos()],
        );
        let v = u.rotate(&r);
        let x = vecd(&[0.8, -0.3]);
        let gu = u.gradient(&(r.transpose() * &x)).unwrap();
        let gv = v.gradient(&x).unwrap();
        assert_abs_diff_eq!((&r * gu - gv).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn embedded_domain_is_degenerate() {
        let e = Subspace::coordinate(2, &[0]);
        let inner = ConvexFunction::isotropic_quadratic(1);
        let u = ConvexFunction::embedded(e, inner).unwrap();
        assert!(u.evaluate(&vecd(&[0.5, 0.0])).is_finite());
        assert_eq!(u.evaluate(&vecd(&[0.5, 0.1])), f64::INFINITY);
    }

    #[test]
    fn cylinder_constant_along_complement() {
        let e = Subspace::coordinate(2, &[0]);
        let inner = ConvexFunction::isotropic_quadratic(1);
        let v = ConvexFunction::cylinder(e, inner).unwrap();
        assert_abs_diff_eq!(v.evaluate(&vecd(&[0.5, 0.0])), 0.125);
        assert_abs_diff_eq!(v.evaluate(&vecd(&[0.5, 9.0])), 0.125);
        let (_, h) = v.gradient_hessian(&vecd(&[0.5, 1.0])).unwrap();
        assert_eq!(h[(0, 0)], 1.0);
        assert_eq!(h[(1, 1)], 0.0);
    }

    #[test]
    fn gradient_preimage_box_quadratic() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]);
        let u = ConvexFunction::quadratic(a, DVector::zeros(2), 0.0).unwrap();
        let b = u.gradient_preimage_box(1.0).unwrap();
        // |grad u| <= 1 contains x with |2 x_1| <= 1 and |x_2 / 2| <= 1.
        assert!(b.hi[0] >= 0.5 - 1e-12);
        assert!(b.hi[1] >= 2.0 - 1e-12);
    }
}
