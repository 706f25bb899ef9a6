//! Forward, iterated and inverse Abel transforms of compactly supported
//! densities.
//!
//! All forward integrals use the cosh substitution
//! `A zeta(t) = 2t int_0^inf zeta(t cosh r) cosh r dr`, which moves the
//! inverse-square-root endpoint singularity of the naive form out of the
//! integrand; the r-integral is truncated at `acosh(S/t)` where `S` is the
//! support bound, beyond which the integrand vanishes identically.

use crate::density::{self, Density, DensityRepr, PiecewisePolynomial, PolyPiece};
use crate::error::{Error, Result};
use crate::quad;

/// Absolute tolerance for the transform quadratures.
const ABEL_QUAD_TOL: f64 = 1e-10;

/// Pointwise forward Abel transform at `t > 0`.
pub fn abel_eval(zeta: &Density, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::domain(format!(
            "abel transform evaluation needs t > 0, got {t}"
        )));
    }
    let support = zeta.support_upper();
    if t >= support {
        return Ok(0.0);
    }
    let upper = (support / t).acosh();
    // The r-integral is `A zeta(t) / (2t)`, so its magnitude grows like 1/t;
    // scale the tolerance to target the final value instead.
    let r = quad::integrate_with_budget(
        |r| {
            let c = r.cosh();
            zeta.eval_unchecked(t * c) * c
        },
        0.0,
        upper,
        ABEL_QUAD_TOL / (2.0 * t),
        16384,
    );
    Ok(2.0 * t * r.value)
}

/// Pointwise k-fold transform via the radial reduction
/// `A^k zeta(t) = int_0^inf zeta(sqrt(r^2 + t^2)) k kappa_k r^(k-1) dr`,
/// valid at `t = 0` for `k >= 2`.
pub fn abel_k_eval(zeta: &Density, k: usize, t: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::precondition("abel_k needs k >= 1"));
    }
    if k == 1 {
        return abel_eval(zeta, t);
    }
    if !(t >= 0.0) {
        return Err(Error::domain(format!("abel_k evaluation needs t >= 0, got {t}")));
    }
    let support = zeta.support_upper();
    if t >= support {
        return Ok(0.0);
    }
    let rmax = (support * support - t * t).sqrt();
    let surface = k as f64 * density::unit_ball_volume(k);
    let r = quad::integrate_with_budget(
        |r| zeta.eval_unchecked((r * r + t * t).sqrt()) * surface * r.powi(k as i32 - 1),
        0.0,
        rmax,
        ABEL_QUAD_TOL,
        16384,
    );
    Ok(r.value)
}

/// Pointwise inverse transform
/// `A^-1 zeta(s) = -(1/pi) int_0^inf zeta'(s cosh r) dr` at `s > 0`.
pub fn inverse_abel_eval(zeta: &Density, s: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::domain(format!(
            "inverse abel evaluation needs s > 0, got {s}"
        )));
    }
    let support = zeta.support_upper();
    if s >= support {
        return Ok(0.0);
    }
    // Probe the derivative once so a missing derivative surfaces as a
    // precondition error instead of silent NaN.
    zeta.derivative_at(0.5 * (s + support)).map_err(|e| {
        Error::precondition(format!("inverse abel needs a usable derivative: {e}"))
    })?;
    let upper = (support / s).acosh();
    let r = quad::integrate_with_budget(
        |r| zeta.derivative_at(s * r.cosh()).unwrap_or(f64::NAN),
        0.0,
        upper,
        ABEL_QUAD_TOL,
        16384,
    );
    Ok(-r.value / std::f64::consts::PI)
}

fn sample_transform<F: Fn(f64) -> Result<f64>>(
    eval: F,
    support: f64,
    value_at_zero: Option<f64>,
) -> Result<Density> {
    if support <= 0.0 {
        return Ok(Density::zero());
    }
    let nodes = density::transform_grid(support, density::TRANSFORM_GRID_POINTS);
    let mut values = Vec::with_capacity(nodes.len());
    for s in &nodes {
        values.push(eval(*s)?);
    }
    let derivs = density::grid_derivatives(&nodes, &values);
    let sampled = density::SampledDensity::new(nodes, values, value_at_zero, Some(derivs))?;
    Ok(Density::from_sampled(sampled, support, false, value_at_zero))
}

/// Forward Abel transform; support bound preserved.
pub fn abel(zeta: &Density) -> Result<Density> {
    let support = zeta.support_upper();
    if support <= 0.0 {
        return Ok(Density::zero());
    }
    // Value at 0+: 2 int_0^S zeta(s) ds (finite whenever zeta is integrable
    // at the origin).
    let v0 = quad::integrate_with_budget(
        |s| zeta.eval_unchecked(s),
        0.0,
        support,
        ABEL_QUAD_TOL,
        16384,
    );
    let value_at_zero = if v0.converged && v0.value.is_finite() {
        Some(2.0 * v0.value)
    } else {
        None
    };
    sample_transform(|t| abel_eval(zeta, t), support, value_at_zero)
}

/// k-fold Abel transform. `k = 1` is the plain transform; for `k >= 2` the
/// radial-reduction form is used directly (composition serves as an
/// independent oracle in the tests).
pub fn abel_k(zeta: &Density, k: usize) -> Result<Density> {
    if k == 0 {
        return Err(Error::precondition("abel_k needs k >= 1"));
    }
    if k == 1 {
        return abel(zeta);
    }
    let support = zeta.support_upper();
    if support <= 0.0 {
        return Ok(Density::zero());
    }
    let value_at_zero = Some(abel_k_eval(zeta, k, 0.0)?);
    sample_transform(|t| abel_k_eval(zeta, k, t), support, value_at_zero)
}

/// Closed form of the squared transform: `A^2 zeta(t) = 2 pi int_t^S zeta(s) s ds`.
///
/// Exact piecewise polynomial for piecewise inputs; otherwise sampled with
/// the exact derivative `-2 pi t zeta(t)` attached, so the result is usable
/// by the inverse transform.
pub fn abel2_closed_form(zeta: &Density) -> Result<Density> {
    let support = zeta.support_upper();
    if support <= 0.0 {
        return Ok(Density::zero());
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    if let DensityRepr::PiecewisePolynomial(pp) = zeta.repr() {
        // 2 pi * (T(hi) + R(hi) - R(t)) piece by piece, R the antiderivative
        // of s * zeta(s).
        let mut cuts: Vec<f64> = pp.pieces.iter().flat_map(|p| [p.lo, p.hi]).collect();
        cuts.push(0.0);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut out = Vec::new();
        for w in cuts.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            if hi <= lo || lo >= support {
                continue;
            }
            let mid = 0.5 * (lo + hi);
            let piece = pp
                .pieces
                .iter()
                .find(|p| mid >= p.lo && mid < p.hi)
                .map(|p| p.coeffs.clone())
                .unwrap_or_else(|| vec![0.0]);
            let anti = PolyPiece {
                lo,
                hi,
                coeffs: piece,
            }
            .shift_degree(1)
            .antiderivative();
            let constant = pp.tail_moment_integral(1, hi) + anti.eval(hi);
            let mut coeffs: Vec<f64> = anti.coeffs.iter().map(|c| -two_pi * c).collect();
            coeffs[0] += two_pi * constant;
            out.push(PolyPiece { lo, hi, coeffs });
        }
        return Ok(Density::from_piecewise(PiecewisePolynomial::new(out)));
    }

    let nodes = density::transform_grid(support, density::TRANSFORM_GRID_POINTS);
    let count = nodes.len();
    // Accumulate int_t^S zeta(s) s ds downward through the grid.
    let mut tails = vec![0.0; count];
    for i in (0..count - 1).rev() {
        let seg = quad::integrate(
            |s| s * zeta.eval_unchecked(s),
            nodes[i],
            nodes[i + 1],
            ABEL_QUAD_TOL / count as f64,
        );
        tails[i] = tails[i + 1] + seg.value;
    }
    let values: Vec<f64> = tails.iter().map(|t| two_pi * t).collect();
    let derivs: Vec<f64> = nodes
        .iter()
        .map(|t| -two_pi * t * zeta.eval_unchecked(*t))
        .collect();
    let head = quad::integrate_with_budget(
        |s| s * zeta.eval_unchecked(s),
        0.0,
        nodes[0],
        ABEL_QUAD_TOL,
        16384,
    );
    let value_at_zero = Some(two_pi * (tails[0] + head.value));
    let sampled = density::SampledDensity::new(nodes, values, value_at_zero, Some(derivs))?;
    Ok(Density::from_sampled(sampled, support, false, value_at_zero))
}

/// Inverse Abel transform of a continuously differentiable density.
pub fn inverse_abel(zeta: &Density) -> Result<Density> {
    let support = zeta.support_upper();
    if support <= 0.0 {
        return Ok(Density::zero());
    }
    sample_transform(|s| inverse_abel_eval(zeta, s), support, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::ClosedFormExpr;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn bump_psi() -> Density {
        // psi(s) = exp(1 - 1/(1 - s^2)) on [0, 1).
        Density::from_expr(ClosedFormExpr::PowerBump { power: 0.0 })
    }

    #[test]
    fn abel_of_zero_is_zero() {
        let a = abel(&Density::zero()).unwrap();
        assert_eq!(a.eval_unchecked(0.3), 0.0);
    }

    #[test]
    fn abel_vanishes_beyond_support() {
        let b = Density::from_expr(ClosedFormExpr::Bump {
            center: 0.5,
            width: 0.5,
            height: 1.0,
        });
        assert_eq!(abel_eval(&b, 1.0).unwrap(), 0.0);
        assert_eq!(abel_eval(&b, 1.7).unwrap(), 0.0);
    }

    #[test]
    fn abel_tent_matches_direct_s_integral() {
        // Independent oracle in the s-variable:
        // A tent(t) = 2 int_0^sqrt(1-t^2) (1 - sqrt(s^2 + t^2)) ds.
        let tent = Density::tent();
        for &t in &[0.25f64, 0.5, 0.75] {
            let oracle = quad::integrate(
                |s| {
                    let r = (s * s + t * t).sqrt();
                    if r < 1.0 {
                        1.0 - r
                    } else {
                        0.0
                    }
                },
                0.0,
                (1.0 - t * t).sqrt(),
                1e-12,
            );
            assert_abs_diff_eq!(
                abel_eval(&tent, t).unwrap(),
                2.0 * oracle.value,
                epsilon = 1e-8
            );
        }
    }

    #[test]
    fn abel_k1_is_abel() {
        let tent = Density::tent();
        for &t in &[0.2, 0.5, 0.8] {
            assert_abs_diff_eq!(
                abel_k_eval(&tent, 1, t).unwrap(),
                abel_eval(&tent, t).unwrap(),
                epsilon = 1e-13
            );
        }
    }

    #[test]
    fn abel2_tent_values() {
        // A^2 tent(0) = 2 pi int_0^1 (1-s) s ds = pi/3;
        // A^2 tent(t) = 2 pi (1/6 - t^2/2 + t^3/3).
        let tent = Density::tent();
        assert_abs_diff_eq!(abel_k_eval(&tent, 2, 0.0).unwrap(), PI / 3.0, epsilon = 1e-9);
        // t = 0.5: 1/6 - 1/8 + 1/24 = 1/12.
        assert_abs_diff_eq!(
            abel_k_eval(&tent, 2, 0.5).unwrap(),
            2.0 * PI / 12.0,
            epsilon = 1e-9
        );
    }

    #[test]
    fn abel2_closed_form_is_exact_for_tent() {
        let tent = Density::tent();
        let a2 = abel2_closed_form(&tent).unwrap();
        assert_abs_diff_eq!(a2.eval_at(0.0).unwrap(), PI / 3.0, epsilon = 1e-14);
        let oracle = |t: f64| {
            if t >= 1.0 {
                0.0
            } else {
                2.0 * PI * (1.0 / 6.0 - t * t / 2.0 + t * t * t / 3.0)
            }
        };
        for k in 1..50 {
            let t = k as f64 / 50.0;
            assert_abs_diff_eq!(a2.eval(t).unwrap(), oracle(t), epsilon = 1e-13);
        }
    }

    #[test]
    fn abel_k2_agrees_with_closed_form_on_grid() {
        let tent = Density::tent();
        let by_reduction = abel_k(&tent, 2).unwrap();
        let closed = abel2_closed_form(&tent).unwrap();
        let mut max_err: f64 = 0.0;
        for k in 0..50 {
            let t = 0.02 + 0.96 * k as f64 / 49.0;
            max_err = max_err.max((by_reduction.eval(t).unwrap() - closed.eval(t).unwrap()).abs());
        }
        assert!(max_err < 1e-6, "max_err {max_err}");
    }

    #[test]
    fn abel2_by_composition_agrees_with_closed_form() {
        // Composition is the test oracle for the k-fold reduction.
        let tent = Density::tent();
        let once = abel(&tent).unwrap();
        let twice = abel(&once).unwrap();
        let closed = abel2_closed_form(&tent).unwrap();
        let mut max_err: f64 = 0.0;
        for k in 0..50 {
            let t = 0.02 + 0.96 * k as f64 / 49.0;
            max_err = max_err.max((twice.eval(t).unwrap() - closed.eval(t).unwrap()).abs());
        }
        assert!(max_err < 1e-6, "max_err {max_err}");
    }

    #[test]
    fn round_trip_smooth_bump() {
        let psi = bump_psi();
        let forward = abel(&psi).unwrap();
        let back = inverse_abel(&forward).unwrap();
        let mut max_err: f64 = 0.0;
        for k in 0..200 {
            let s = 0.05 + 0.90 * k as f64 / 199.0;
            max_err = max_err.max((back.eval(s).unwrap() - psi.eval(s).unwrap()).abs());
        }
        assert!(max_err < 1e-4, "sup error {max_err}");
    }

    #[test]
    fn round_trip_other_direction() {
        // abel(inverse_abel(zeta)) = zeta for the C^1 density A^2 tent.
        let a2 = abel2_closed_form(&Density::tent()).unwrap();
        let inv = inverse_abel(&a2).unwrap();
        let fwd = abel(&inv).unwrap();
        let mut max_err: f64 = 0.0;
        for k in 0..200 {
            let s = 0.05 + 0.90 * k as f64 / 199.0;
            max_err = max_err.max((fwd.eval(s).unwrap() - a2.eval(s).unwrap()).abs());
        }
        assert!(max_err < 1e-4, "sup error {max_err}");
    }

    #[test]
    fn hadwiger_class_transport() {
        use crate::density::{check_hadwiger_class, default_class_sequence};
        let tent = Density::tent();
        let rep = check_hadwiger_class(&tent, 1, 3, &default_class_sequence(&tent)).unwrap();
        assert!(rep.member);
        let a = abel(&tent).unwrap();
        let rep = check_hadwiger_class(&a, 1, 2, &default_class_sequence(&a)).unwrap();
        assert!(rep.member, "transported density should be in Had(1, 2)");
    }

    #[test]
    fn support_preservation() {
        let tent = Density::tent();
        let a = abel(&tent).unwrap();
        assert_eq!(a.support_upper(), 1.0);
        for k in 1..=5 {
            let t = 1.0 + 0.3 * k as f64;
            assert_eq!(a.eval_unchecked(t), 0.0);
        }
    }

    #[test]
    fn inverse_abel_of_zero() {
        let z = inverse_abel(&Density::zero()).unwrap();
        assert_eq!(z.eval_unchecked(0.4), 0.0);
    }
}
