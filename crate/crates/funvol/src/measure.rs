//! Hessian measures and their conjugate counterparts as weighted particle
//! clouds: gradient-pushforward construction for smooth functions,
//! subdifferential-volume atoms for piecewise-linear ones, plus the
//! structural identities (conjugate duality, product decomposition,
//! lower-dimensional extension through the Abel transform).

use crate::abel;
use crate::convex::{ConvexFunction, Shape};
use crate::density::Density;
use crate::error::{Error, Result};
use crate::geometry::Subspace;
use crate::quad::BoxDomain;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Dimension cap for tensor-grid measure quadrature.
pub const MAX_MEASURE_DIM: usize = 4;

/// Default midpoint resolution per axis by dimension.
pub fn default_resolution(n: usize) -> usize {
    match n {
        0 | 1 | 2 => 256,
        3 => 64,
        _ => 24,
    }
}

/// k-th elementary symmetric function of a list of eigenvalues
/// (`e_0 = 1`).
pub fn elementary_symmetric(eigenvalues: &[f64], k: usize) -> Result<f64> {
    if k > eigenvalues.len() {
        return Err(Error::precondition(format!(
            "elementary symmetric index {k} exceeds list length {}",
            eigenvalues.len()
        )));
    }
    let mut e = vec![0.0; k + 1];
    e[0] = 1.0;
    for lambda in eigenvalues {
        for kk in (1..=k).rev() {
            e[kk] += lambda * e[kk - 1];
        }
    }
    Ok(e[k])
}

/// `[H]_k`: sum of k-by-k principal minors of a symmetric matrix. Agrees
/// with the elementary symmetric function of the eigenvalues without an
/// eigendecomposition.
pub fn elementary_symmetric_matrix(h: &DMatrix<f64>, k: usize) -> f64 {
    let n = h.nrows();
    if k == 0 {
        return 1.0;
    }
    if k > n {
        return 0.0;
    }
    let mut total = 0.0;
    let mut subset: Vec<usize> = (0..k).collect();
    loop {
        let minor = DMatrix::from_fn(k, k, |i, j| h[(subset[i], subset[j])]);
        total += minor.determinant();
        // Next k-subset in lexicographic order.
        let mut i = k;
        loop {
            if i == 0 {
                return total;
            }
            i -= 1;
            if subset[i] != i + n - k {
                break;
            }
            if i == 0 {
                return total;
            }
        }
        subset[i] += 1;
        for jj in i + 1..k {
            subset[jj] = subset[jj - 1] + 1;
        }
    }
}

/// Weighted particle approximation of a Hessian measure.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    pub dim: usize,
    /// `(location, weight)` pairs, weights non-negative.
    pub particles: Vec<(Vec<f64>, f64)>,
    pub metadata: MeasureMetadata,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasureMetadata {
    pub source: String,
    pub index_j: usize,
    pub grid_resolution: usize,
    /// Cleared when kink loci fell outside the requested region.
    pub complete: bool,
}

impl DiscreteMeasure {
    pub fn total_mass(&self) -> f64 {
        self.particles.iter().map(|(_, w)| w).sum()
    }

    pub fn is_complete(&self) -> bool {
        self.metadata.complete
    }
}

/// `sum weights * beta(location)` in particle order.
pub fn integrate_density<F: Fn(&DVector<f64>) -> f64>(mu: &DiscreteMeasure, beta: F) -> f64 {
    let mut acc = 0.0;
    for (loc, w) in &mu.particles {
        acc += w * beta(&DVector::from_column_slice(loc));
    }
    acc
}

/// Quadrature grid for measure construction.
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    pub domain: BoxDomain,
    pub points_per_axis: usize,
}

/// Gradient-pushforward Hessian measure of a smooth function: a particle
/// at `grad u(x_i)` with weight `[D^2 u(x_i)]_(n-j) * cell`, for midpoint
/// nodes `x_i` of the grid inside the domain. For `j = n` the weight
/// degenerates to the cell volume and cone functions are admitted
/// (gradient defined almost everywhere; nodes on the null set are
/// jittered by half a cell).
pub fn hessian_measure_smooth(
    u: &ConvexFunction,
    j: usize,
    grid: &QuadratureGrid,
) -> Result<DiscreteMeasure> {
    let n = u.dim();
    if n > MAX_MEASURE_DIM {
        return Err(Error::precondition(format!(
            "measure quadrature capped at dimension {MAX_MEASURE_DIM}, got {n}"
        )));
    }
    if j > n {
        return Err(Error::precondition(format!("need 0 <= j <= n, got j={j}, n={n}")));
    }
    let smooth_ok = u.is_smooth() || (j == n && gradient_a_e(u));
    if !smooth_ok {
        return Err(Error::precondition(format!(
            "hessian measure needs a twice-differentiable variant (or j = n with an a.e. gradient), got {} with j={j}",
            u.variant_name()
        )));
    }

    let count = grid.points_per_axis;
    let steps: Vec<f64> = (0..n)
        .map(|i| (grid.domain.hi[i] - grid.domain.lo[i]) / count as f64)
        .collect();
    let cell: f64 = steps.iter().product();
    let mut particles = Vec::new();
    let total = count.pow(n as u32);
    let mut idx = vec![0usize; n];
    for flat in 0..total {
        let mut rem = flat;
        for i in (0..n).rev() {
            idx[i] = rem % count;
            rem /= count;
        }
        let mut x = DVector::from_fn(n, |i, _| {
            grid.domain.lo[i] + (idx[i] as f64 + 0.5) * steps[i]
        });
        if !u.evaluate(&x).is_finite() {
            continue;
        }
        let sample = if j == n {
            u.gradient(&x).map(|g| (g, cell))
        } else {
            u.gradient_hessian(&x)
                .map(|(g, h)| (g, elementary_symmetric_matrix(&h, n - j) * cell))
        };
        let (location, weight) = match sample {
            Ok(v) => v,
            Err(_) => {
                // Null-set node (cone apex, tied branches): jitter by half
                // a cell and retry once.
                for i in 0..n {
                    x[i] += 0.5 * steps[i] * if i % 2 == 0 { 1.0 } else { -1.0 } * 0.5;
                }
                if !u.evaluate(&x).is_finite() {
                    continue;
                }
                match if j == n {
                    u.gradient(&x).map(|g| (g, cell))
                } else {
                    u.gradient_hessian(&x)
                        .map(|(g, h)| (g, elementary_symmetric_matrix(&h, n - j) * cell))
                } {
                    Ok(v) => v,
                    Err(_) => continue,
                }
            }
        };
        if weight != 0.0 {
            particles.push((location.iter().copied().collect(), weight));
        }
    }
    Ok(DiscreteMeasure {
        dim: n,
        particles,
        metadata: MeasureMetadata {
            source: u.variant_name().to_string(),
            index_j: j,
            grid_resolution: count,
            complete: true,
        },
    })
}

fn gradient_a_e(u: &ConvexFunction) -> bool {
    matches!(
        u.shape(),
        Shape::ConeBall { .. }
            | Shape::MaxOf { .. }
            | Shape::MinOf { .. }
            | Shape::SupportPlusIndicator { .. }
    ) || u.is_smooth()
}

/// One-dimensional convex piecewise-linear data: sorted breakpoints and
/// the slopes of the pieces between them (`slopes.len() = breakpoints.len() + 1`,
/// non-decreasing).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AxisPl {
    pub breakpoints: Vec<f64>,
    pub slopes: Vec<f64>,
}

/// Separable piecewise-linear convex function `v(x) = sum_i g_i(x_i)`;
/// covers anchored absolute-value sums and grid-style piecewise-linear
/// inputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeparablePiecewiseLinear {
    pub axes: Vec<AxisPl>,
}

impl SeparablePiecewiseLinear {
    pub fn validate(&self) -> Result<()> {
        for (i, axis) in self.axes.iter().enumerate() {
            if axis.slopes.len() != axis.breakpoints.len() + 1 {
                return Err(Error::Descriptor(format!(
                    "axis {i}: slopes must have one more entry than breakpoints"
                )));
            }
            if axis.breakpoints.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::Descriptor(format!("axis {i}: breakpoints not sorted")));
            }
            if axis.slopes.windows(2).any(|w| w[1] < w[0]) {
                return Err(Error::Descriptor(format!(
                    "axis {i}: slopes must be non-decreasing (convexity)"
                )));
            }
        }
        Ok(())
    }

    /// The anchored sum `1/2 sum |x_i - anchor_i|`.
    pub fn from_anchors(anchors: &DVector<f64>) -> Self {
        SeparablePiecewiseLinear {
            axes: anchors
                .iter()
                .map(|a| AxisPl {
                    breakpoints: vec![*a],
                    slopes: vec![-0.5, 0.5],
                })
                .collect(),
        }
    }

    pub fn from_convex(v: &ConvexFunction) -> Result<Self> {
        match v.shape() {
            Shape::PiecewiseLinearSum { anchors } => Ok(Self::from_anchors(anchors)),
            _ => Err(Error::unsupported(format!(
                "monge_ampere_pl needs a separable piecewise-linear function, got {}",
                v.variant_name()
            ))),
        }
    }
}

/// Monge-Ampere measure of a finite-valued separable piecewise-linear
/// function: one atom per combination of slope-jump loci with weight equal
/// to the product of the jumps (the volume of the subdifferential box).
/// Atoms outside `region` are dropped and flag the result incomplete.
pub fn monge_ampere_pl(
    v: &SeparablePiecewiseLinear,
    region: &BoxDomain,
) -> Result<DiscreteMeasure> {
    v.validate()?;
    let n = v.axes.len();
    if region.dim() != n {
        return Err(Error::Dimension {
            expected: n,
            got: region.dim(),
        });
    }
    // Kinks with positive jump per axis.
    let mut axis_atoms: Vec<Vec<(f64, f64)>> = Vec::with_capacity(n);
    for axis in &v.axes {
        let mut atoms = Vec::new();
        for (i, b) in axis.breakpoints.iter().enumerate() {
            let jump = axis.slopes[i + 1] - axis.slopes[i];
            if jump > 0.0 {
                atoms.push((*b, jump));
            }
        }
        axis_atoms.push(atoms);
    }
    let mut particles = Vec::new();
    let mut complete = true;
    if axis_atoms.iter().all(|a| !a.is_empty()) {
        let mut idx = vec![0usize; n];
        'outer: loop {
            let mut loc = Vec::with_capacity(n);
            let mut weight = 1.0;
            for i in 0..n {
                let (b, jump) = axis_atoms[i][idx[i]];
                loc.push(b);
                weight *= jump;
            }
            if region.contains(&loc) {
                particles.push((loc, weight));
            } else {
                complete = false;
            }
            let mut axis = n;
            loop {
                if axis == 0 {
                    break 'outer;
                }
                axis -= 1;
                idx[axis] += 1;
                if idx[axis] < axis_atoms[axis].len() {
                    break;
                }
                idx[axis] = 0;
                if axis == 0 {
                    break 'outer;
                }
            }
        }
    }
    Ok(DiscreteMeasure {
        dim: n,
        particles,
        metadata: MeasureMetadata {
            source: "separable_piecewise_linear".into(),
            index_j: n,
            grid_resolution: 0,
            complete,
        },
    })
}

/// Radial test panel: five smooth bumps at staggered radii, all vanishing
/// near the origin (conjugate-side integrands can be singular there).
pub fn standard_panel() -> Vec<Density> {
    [0.3, 0.45, 0.6, 0.75, 0.9]
        .iter()
        .map(|c| {
            Density::from_expr(crate::density::ClosedFormExpr::Bump {
                center: *c,
                width: 0.12,
                height: 1.0,
            })
        })
        .collect()
}

/// Largest argument with a nonzero panel value.
pub fn panel_support(panel: &[Density]) -> f64 {
    panel.iter().map(|d| d.support_upper()).fold(0.0, f64::max)
}

/// Midpoint quadrature of `x -> beta(x) [D^2 v(x)]_j` over a box,
/// skipping (null-set) nodes where the Hessian is unavailable.
pub fn hessian_integral<F: Fn(&DVector<f64>) -> f64>(
    v: &ConvexFunction,
    j: usize,
    beta: F,
    domain: &BoxDomain,
    points_per_axis: usize,
) -> f64 {
    crate::quad::midpoint_box(
        |x: &[f64]| {
            let xv = DVector::from_column_slice(x);
            let b = beta(&xv);
            if b == 0.0 {
                return 0.0;
            }
            match v.gradient_hessian(&xv) {
                Ok((_, h)) => b * elementary_symmetric_matrix(&h, j),
                Err(_) => 0.0,
            }
        },
        domain,
        points_per_axis,
    )
}

/// Gradient-pushforward quadrature of
/// `x -> beta(grad u(x)) [D^2 u(x)]_(n-j)` over a box.
pub fn pushforward_integral<F: Fn(&DVector<f64>) -> f64>(
    u: &ConvexFunction,
    j: usize,
    beta: F,
    domain: &BoxDomain,
    points_per_axis: usize,
) -> f64 {
    let n = u.dim();
    crate::quad::midpoint_box(
        |x: &[f64]| {
            let xv = DVector::from_column_slice(x);
            if !u.evaluate(&xv).is_finite() {
                return 0.0;
            }
            if j == n {
                match u.gradient(&xv) {
                    Ok(g) => beta(&g),
                    Err(_) => 0.0,
                }
            } else {
                match u.gradient_hessian(&xv) {
                    Ok((g, h)) => {
                        let b = beta(&g);
                        if b == 0.0 {
                            0.0
                        } else {
                            b * elementary_symmetric_matrix(&h, n - j)
                        }
                    }
                    Err(_) => 0.0,
                }
            }
        },
        domain,
        points_per_axis,
    )
}

/// Outcome of the conjugate-duality comparison
/// `Psi_j(u, .) = Phi_j(u*, .)` over the radial test panel.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransportReport {
    pub j: usize,
    pub n: usize,
    pub psi_integrals: Vec<f64>,
    pub phi_integrals: Vec<f64>,
    pub max_abs_discrepancy: f64,
    pub max_rel_discrepancy: f64,
}

/// Compare the gradient-pushforward route on `u` with the direct
/// conjugate-side quadrature on `u*` across the test panel.
pub fn conjugate_transport(
    u: &ConvexFunction,
    j: usize,
    points_per_axis: usize,
) -> Result<TransportReport> {
    let n = u.dim();
    if j > n {
        return Err(Error::precondition(format!("need 0 <= j <= n, got j={j}, n={n}")));
    }
    if !u.is_smooth() {
        return Err(Error::precondition(format!(
            "conjugate_transport needs a smooth variant, got {}",
            u.variant_name()
        )));
    }
    let conj = u.legendre()?;
    let panel = standard_panel();
    let smax = panel_support(&panel);

    let psi_box = u
        .gradient_preimage_box(smax)
        .ok_or_else(|| Error::precondition("cannot bound the gradient preimage of u"))?;
    let phi_box = BoxDomain::new(vec![-smax; n], vec![smax; n]);

    let mut psi_integrals = Vec::with_capacity(panel.len());
    let mut phi_integrals = Vec::with_capacity(panel.len());
    for beta in &panel {
        let b = |y: &DVector<f64>| beta.eval_unchecked(y.norm());
        psi_integrals.push(pushforward_integral(u, j, b, &psi_box, points_per_axis));
        phi_integrals.push(hessian_integral(&conj, j, b, &phi_box, points_per_axis));
    }
    let mut max_abs: f64 = 0.0;
    let mut max_rel: f64 = 0.0;
    for (p, f) in psi_integrals.iter().zip(&phi_integrals) {
        let abs = (p - f).abs();
        max_abs = max_abs.max(abs);
        max_rel = max_rel.max(abs / f.abs().max(1e-12));
    }
    Ok(TransportReport {
        j,
        n,
        psi_integrals,
        phi_integrals,
        max_abs_discrepancy: max_abs,
        max_rel_discrepancy: max_rel,
    })
}

/// Outcome of the product-decomposition identity check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub l: usize,
    pub n: usize,
    pub k: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub abs_discrepancy: f64,
    pub rel_discrepancy: f64,
}

/// Check `Phi_l^n(vE + vF, B) = sum_i Phi_i^k(vE, B cap E) Phi_(l-i)^(n-k)(vF, B cap F)`
/// for the coordinate split `E = first k axes`. The left side integrates
/// the elementary symmetric function of the full block Hessian; the right
/// side multiplies lower-dimensional quadratures, so the two routes are
/// independent.
pub fn product_decomposition_check(
    v_e: &ConvexFunction,
    v_f: &ConvexFunction,
    l: usize,
    b: &BoxDomain,
    points_per_axis: usize,
) -> Result<DecompositionReport> {
    let k = v_e.dim();
    let m = v_f.dim();
    let n = k + m;
    if b.dim() != n {
        return Err(Error::Dimension {
            expected: n,
            got: b.dim(),
        });
    }
    if l > n {
        return Err(Error::precondition(format!("need 0 <= l <= n, got l={l}, n={n}")));
    }

    // Left side: n-dimensional quadrature of [D^2 (vE + vF)]_l.
    let lhs = crate::quad::midpoint_box(
        |x: &[f64]| {
            let xe = DVector::from_column_slice(&x[..k]);
            let xf = DVector::from_column_slice(&x[k..]);
            let he = match v_e.gradient_hessian(&xe) {
                Ok((_, h)) => h,
                Err(_) => return 0.0,
            };
            let hf = match v_f.gradient_hessian(&xf) {
                Ok((_, h)) => h,
                Err(_) => return 0.0,
            };
            let mut h = DMatrix::zeros(n, n);
            h.view_mut((0, 0), (k, k)).copy_from(&he);
            h.view_mut((k, k), (m, m)).copy_from(&hf);
            elementary_symmetric_matrix(&h, l)
        },
        b,
        points_per_axis,
    );

    // Right side: products of lower-dimensional Hessian quadratures.
    let be = BoxDomain::new(b.lo[..k].to_vec(), b.hi[..k].to_vec());
    let bf = BoxDomain::new(b.lo[k..].to_vec(), b.hi[k..].to_vec());
    let lo_i = l.saturating_sub(m);
    let hi_i = k.min(l);
    let mut rhs = 0.0;
    for i in lo_i..=hi_i {
        let phi_e = hessian_integral(v_e, i, |_| 1.0, &be, points_per_axis);
        let phi_f = hessian_integral(v_f, l - i, |_| 1.0, &bf, points_per_axis);
        rhs += phi_e * phi_f;
    }

    let abs = (lhs - rhs).abs();
    Ok(DecompositionReport {
        l,
        n,
        k,
        lhs,
        rhs,
        abs_discrepancy: abs,
        rel_discrepancy: abs / rhs.abs().max(1e-12),
    })
}

/// Outcome of the lower-dimensional extension identity check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtensionReport {
    pub j: usize,
    pub n: usize,
    pub k: usize,
    pub ambient_integral: f64,
    pub restricted_integral: f64,
    pub abs_discrepancy: f64,
    pub rel_discrepancy: f64,
}

/// For `u` with domain inside the subspace spanned by `e`, compare
/// `int xi(|y|) dPsi_j^n(u, .)` (via the conjugate cylinder function and
/// Fubini) with `int A^(n-k) xi(|y_E|) dPsi_j^k(u|_E, .)`.
pub fn lower_dim_extension_check(
    inner: &ConvexFunction,
    e: &Subspace,
    j: usize,
    xi: &Density,
    points_per_axis: usize,
) -> Result<ExtensionReport> {
    let k = e.dim();
    let n = e.ambient_dim();
    if inner.dim() != k {
        return Err(Error::Dimension {
            expected: k,
            got: inner.dim(),
        });
    }
    if !(1 <= j && j <= k && k < n) {
        return Err(Error::precondition(format!(
            "need 1 <= j <= k < n, got j={j}, k={k}, n={n}"
        )));
    }
    let smax = xi.support_upper();

    // Ambient side: Psi_j^n(u, .) = Phi_j^n(u*, .) with u* the cylinder
    // extension of inner*.
    let w = inner.legendre()?;
    let cylinder = ConvexFunction::cylinder(e.clone(), w)?;
    let ambient_box = BoxDomain::new(vec![-smax; n], vec![smax; n]);
    let ambient_integral = hessian_integral(
        &cylinder,
        j,
        |x: &DVector<f64>| xi.eval_unchecked(x.norm()),
        &ambient_box,
        points_per_axis,
    );

    // Restricted side: pushforward on the subspace against the
    // (n-k)-fold Abel transform of xi.
    let transformed = abel::abel_k(xi, n - k)?;
    let push_box = inner
        .gradient_preimage_box(smax)
        .ok_or_else(|| Error::precondition("cannot bound the gradient preimage of u|_E"))?;
    let restricted_integral = pushforward_integral(
        inner,
        j,
        |y: &DVector<f64>| transformed.eval_unchecked(y.norm()),
        &push_box,
        points_per_axis,
    );

    let abs = (ambient_integral - restricted_integral).abs();
    Ok(ExtensionReport {
        j,
        n,
        k,
        ambient_integral,
        restricted_integral,
        abs_discrepancy: abs,
        rel_discrepancy: abs / restricted_integral.abs().max(1e-12),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::RadialProfile;
    use crate::density::ClosedFormExpr;
    use crate::rng::CounterRng;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn vecd(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    #[test]
    fn elementary_symmetric_examples() {
        assert_eq!(elementary_symmetric(&[1.0, 2.0, 3.0], 2).unwrap(), 11.0);
        assert_eq!(elementary_symmetric(&[4.0, -1.0, 7.0], 0).unwrap(), 1.0);
        // Identity eigenvalues give binomial coefficients.
        assert_eq!(elementary_symmetric(&[1.0; 4], 2).unwrap(), 6.0);
        assert!(elementary_symmetric(&[1.0], 2).is_err());
    }

    #[test]
    fn matrix_route_agrees_with_eigenvalue_route() {
        let mut rng = CounterRng::new(31, 0);
        for n in 2..=4usize {
            // Random symmetric matrix.
            let mut m = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..=i {
                    let v = rng.next_range(-1.0, 1.0);
                    m[(i, j)] = v;
                    m[(j, i)] = v;
                }
            }
            let eigs: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
            for k in 0..=n {
                let a = elementary_symmetric_matrix(&m, k);
                let b = elementary_symmetric(&eigs, k).unwrap();
                assert_abs_diff_eq!(a, b, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn isotropic_quadratic_measure_mass() {
        // u = |x|^2/2 in n = 2, j = 1: mass over a disk of radius R is
        // int [I]_1 = 2 pi R^2 (the pushforward keeps particles at grid
        // nodes since grad u = x).
        let u = ConvexFunction::isotropic_quadratic(2);
        let r = 0.8;
        let grid = QuadratureGrid {
            domain: BoxDomain::new(vec![-r, -r], vec![r, r]),
            points_per_axis: 256,
        };
        let mu = hessian_measure_smooth(&u, 1, &grid).unwrap();
        let mass = integrate_density(&mu, |y| if y.norm() <= r { 1.0 } else { 0.0 });
        assert_abs_diff_eq!(mass, 2.0 * PI * r * r, epsilon = 0.01 * 2.0 * PI * r * r);
        //

        // Particles coincide with their grid nodes.
        for (loc, _) in mu.particles.iter().take(10) {
            let x = vecd(loc);
            let g = u.gradient(&x).unwrap();
            assert_abs_diff_eq!((x - g).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn cone_j_equals_n_total_mass_is_domain_volume() {
        let t = 0.7;
        let u = ConvexFunction::cone_t(2, t);
        let grid = QuadratureGrid {
            domain: BoxDomain::new(vec![-1.0, -1.0], vec![1.0, 1.0]),
            points_per_axis: 256,
        };
        let mu = hessian_measure_smooth(&u, 2, &grid).unwrap();
        // beta = 1 on a superset of grad(dom): mass = vol(B^2) = pi.
        let mass = mu.total_mass();
        assert_abs_diff_eq!(mass, PI, epsilon = 0.005 * PI);
        // The gradient norm is t almost everywhere.
        for (loc, _) in mu.particles.iter().take(20) {
            assert_abs_diff_eq!(vecd(loc).norm(), t, epsilon = 1e-10);
        }
        // Integrating zeta(|y|) gives kappa_2 * zeta(t).
        let tent = Density::tent();
        let val = integrate_density(&mu, |y| tent.eval_unchecked(y.norm()));
        assert_abs_diff_eq!(val, PI * tent.eval(t).unwrap(), epsilon = 0.005 * PI);
    }

    #[test]
    fn dirac_reproduction() {
        // Lemma-of-the-anchored-sum: Phi_n^n(v-bar) = delta at the anchor.
        let mut rng = CounterRng::new(99, 3);
        for n in 1..=3usize {
            for _ in 0..5 {
                let anchors = DVector::from_fn(n, |_, _| {
                    // Nonzero anchors.
                    let v = rng.next_range(-1.0, 1.0);
                    if v.abs() < 0.05 {
                        v + 0.1
                    } else {
                        v
                    }
                });
                let v = SeparablePiecewiseLinear::from_anchors(&anchors);
                let region = BoxDomain::new(vec![-2.0; n], vec![2.0; n]);
                let mu = monge_ampere_pl(&v, &region).unwrap();
                assert_eq!(mu.particles.len(), 1);
                let (loc, w) = &mu.particles[0];
                assert!((w - 1.0).abs() <= 1e-12, "weight {w}");
                for (a, b) in loc.iter().zip(anchors.iter()) {
                    assert_eq!(a, b);
                }
                assert!(mu.is_complete());
            }
        }
    }

    #[test]
    fn linear_function_has_zero_measure() {
        let v = SeparablePiecewiseLinear {
            axes: vec![
                AxisPl {
                    breakpoints: vec![],
                    slopes: vec![0.3],
                },
                AxisPl {
                    breakpoints: vec![],
                    slopes: vec![-0.1],
                },
            ],
        };
        let mu = monge_ampere_pl(&v, &BoxDomain::new(vec![-1.0; 2], vec![1.0; 2])).unwrap();
        assert!(mu.particles.is_empty());
        assert_eq!(mu.total_mass(), 0.0);
    }

    #[test]
    fn incomplete_region_is_flagged() {
        let v = SeparablePiecewiseLinear::from_anchors(&vecd(&[3.0, 0.5]));
        let region = BoxDomain::new(vec![-1.0, -1.0], vec![1.0, 1.0]);
        let mu = monge_ampere_pl(&v, &region).unwrap();
        assert!(!mu.is_complete());
        assert!(mu.particles.is_empty());
    }

    #[test]
    fn integrate_density_examples() {
        let zero = DiscreteMeasure {
            dim: 2,
            particles: vec![],
            metadata: MeasureMetadata {
                source: "test".into(),
                index_j: 2,
                grid_resolution: 0,
                complete: true,
            },
        };
        assert_eq!(integrate_density(&zero, |_| 1.0), 0.0);
        let dirac = DiscreteMeasure {
            dim: 2,
            particles: vec![(vec![0.3, -0.4], 1.0)],
            metadata: zero.metadata.clone(),
        };
        assert_abs_diff_eq!(integrate_density(&dirac, |y| y.norm()), 0.5);
    }

    #[test]
    fn quadratic_measure_against_radial_oracle() {
        // u = |x|^2/2, j = n, tent density over the unit disk:
        // 2 pi int_0^1 (1 - r) r dr = pi / 3.
        let u = ConvexFunction::isotropic_quadratic(2);
        let grid = QuadratureGrid {
            domain: BoxDomain::new(vec![-1.0, -1.0], vec![1.0, 1.0]),
            points_per_axis: 256,
        };
        let mu = hessian_measure_smooth(&u, 2, &grid).unwrap();
        let tent = Density::tent();
        let val = integrate_density(&mu, |y| tent.eval_unchecked(y.norm()));
        assert_abs_diff_eq!(val, PI / 3.0, epsilon = 2e-4);
    }

    #[test]
    fn conjugate_transport_self_dual() {
        let u = ConvexFunction::isotropic_quadratic(2);
        let rep = conjugate_transport(&u, 1, 256).unwrap();
        assert!(rep.max_abs_discrepancy < 1e-12, "{rep:?}");
    }

    #[test]
    fn conjugate_transport_anisotropic() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]);
        let u = ConvexFunction::quadratic(a, DVector::zeros(2), 0.0).unwrap();
        let rep = conjugate_transport(&u, 1, 256).unwrap();
        assert!(rep.max_abs_discrepancy < 1e-6, "{rep:?}");
    }

    #[test]
    fn conjugate_transport_quartic() {
        let u = ConvexFunction::smooth_radial(
            2,
            RadialProfile::Power {
                coeff: 1.0,
                exponent: 4.0,
            },
        )
        .unwrap();
        let rep = conjugate_transport(&u, 2, 256).unwrap();
        assert!(rep.max_abs_discrepancy < 1e-4, "{rep:?}");
    }

    #[test]
    fn product_decomposition_quadratic_pair() {
        // vE = x^2/2 on E, vF = y^2/2 on F, l = 1, B = [-1,1]^2:
        // both sides are 8.
        let v_e = ConvexFunction::isotropic_quadratic(1);
        let v_f = ConvexFunction::isotropic_quadratic(1);
        let b = BoxDomain::new(vec![-1.0, -1.0], vec![1.0, 1.0]);
        let rep = product_decomposition_check(&v_e, &v_f, 1, &b, 128).unwrap();
        assert_abs_diff_eq!(rep.lhs, 8.0, epsilon = 1e-10);
        assert_abs_diff_eq!(rep.rhs, 8.0, epsilon = 1e-10);
    }

    #[test]
    fn product_decomposition_l_zero_is_volume() {
        let v_e = ConvexFunction::isotropic_quadratic(1);
        let v_f = ConvexFunction::isotropic_quadratic(2);
        let b = BoxDomain::new(vec![-1.0; 3], vec![1.0; 3]);
        let rep = product_decomposition_check(&v_e, &v_f, 0, &b, 32).unwrap();
        assert_abs_diff_eq!(rep.lhs, 8.0, epsilon = 1e-10);
        assert_abs_diff_eq!(rep.rhs, 8.0, epsilon = 1e-10);
    }

    #[test]
    fn lower_dim_extension_line_in_plane() {
        // n = 2, k = 1, u|_E = s^2/2, j = 1, xi a bump.
        let inner = ConvexFunction::isotropic_quadratic(1);
        let e = Subspace::coordinate(2, &[0]);
        let xi = Density::from_expr(ClosedFormExpr::Bump {
            center: 0.5,
            width: 0.3,
            height: 1.0,
        });
        let rep = lower_dim_extension_check(&inner, &e, 1, &xi, 256).unwrap();
        assert!(
            rep.rel_discrepancy < 0.01,
            "relative discrepancy {} (ambient {}, restricted {})",
            rep.rel_discrepancy,
            rep.ambient_integral,
            rep.restricted_integral
        );
    }

    #[test]
    fn translation_invariance_of_radial_integrals() {
        // Integrating a radial density against Psi is unchanged by
        // epi-translation.
        let u = ConvexFunction::isotropic_quadratic(2);
        let moved = u.translate(&vecd(&[0.4, -0.3]), 1.7);
        let bump = Density::from_expr(ClosedFormExpr::Bump {
            center: 0.5,
            width: 0.3,
            height: 1.0,
        });
        let beta = |y: &DVector<f64>| bump.eval_unchecked(y.norm());
        let box_u = u.gradient_preimage_box(0.9).unwrap();
        let box_m = moved.gradient_preimage_box(0.9).unwrap();
        let a = pushforward_integral(&u, 1, beta, &box_u, 256);
        let b = pushforward_integral(&moved, 1, beta, &box_m, 256);
        assert_abs_diff_eq!(a, b, epsilon = 1e-9);
    }

    #[test]
    fn rotation_covariance_of_radial_integrals() {
        let a_mat = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]);
        let u = ConvexFunction::quadratic(a_mat, DVector::zeros(2), 0.0).unwrap();
        let theta = 0.9f64;
        let rot = DMatrix::from_row_slice(
            2,
            2,
            &[theta.cos(), -theta.sin(), theta.sin(), theta.cos()],
        );
        let v = u.rotate(&rot);
        let bump = Density::from_expr(ClosedFormExpr::Bump {
            center: 0.5,
            width: 0.3,
            height: 1.0,
        });
        let beta = |y: &DVector<f64>| bump.eval_unchecked(y.norm());
        let box_u = u.gradient_preimage_box(0.9).unwrap();
        let box_v = v.gradient_preimage_box(0.9).unwrap();
        let a = pushforward_integral(&u, 1, beta, &box_u, 256);
        let b = pushforward_integral(&v, 1, beta, &box_v, 256);
        assert_abs_diff_eq!(a, b, epsilon = 1e-6);
    }
}
