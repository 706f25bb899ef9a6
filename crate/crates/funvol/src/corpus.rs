//! Built-in densities and convex functions addressable by id from the CLI
//! and the check suites.

use crate::convex::{ConvexFunction, RadialProfile};
use crate::density::{ClosedFormExpr, Density, PiecewisePolynomial, PolyPiece};
use crate::geometry::{Polytope, Subspace};
use nalgebra::{DMatrix, DVector};

/// Sorted list of `(id, description)` pairs for the density corpus.
pub fn density_catalog() -> Vec<(&'static str, &'static str)> {
    let mut v = vec![
        ("bump", "smooth bump exp(1 - 1/(1-z^2)), z = (s-0.5)/0.3"),
        ("bump_narrow", "smooth bump centered 0.45, width 0.35, height 0.7"),
        ("bump_wide", "smooth bump centered 0.6, width 0.25"),
        ("psi", "boundary-flat profile exp(1 - 1/(1-s^2)) on [0,1)"),
        ("quad_spline", "piecewise polynomial 4 s (1-s) on [0,1]"),
        ("sqrt_tent", "s^(-1/2) max(0, 1-s), singular at zero"),
        ("tent", "tent max(0, 1-s)"),
        ("zero", "identically zero"),
    ];
    v.sort_by_key(|(id, _)| *id);
    v
}

pub fn density(id: &str) -> Option<Density> {
    Some(match id {
        "tent" => Density::tent(),
        "zero" => Density::zero(),
        "bump" => Density::from_expr(ClosedFormExpr::Bump {
            center: 0.5,
            width: 0.3,
            height: 1.0,
        }),
        "bump_wide" => Density::from_expr(ClosedFormExpr::Bump {
            center: 0.6,
            width: 0.25,
            height: 1.0,
        }),
        "bump_narrow" => Density::from_expr(ClosedFormExpr::Bump {
            center: 0.45,
            width: 0.35,
            height: 0.7,
        }),
        "psi" => Density::from_expr(ClosedFormExpr::PowerBump { power: 0.0 }),
        "sqrt_tent" => Density::from_expr(ClosedFormExpr::PowerTent { power: -0.5 }),
        "quad_spline" => Density::from_piecewise(PiecewisePolynomial::new(vec![PolyPiece {
            lo: 0.0,
            hi: 1.0,
            coeffs: vec![0.0, 4.0, -4.0],
        }])),
        _ => return None,
    })
}

/// Sorted list of `(id, description)` pairs for the function corpus. The
/// `cone_t*` family are the calibration cones `t|x| + I_B`.
pub fn function_catalog() -> Vec<(&'static str, &'static str)> {
    let mut v = vec![
        ("aniso_quad_n2", "1/2 x' diag(2, 1/2) x"),
        ("aniso_quad_n3", "1/2 x' diag(2, 1, 1/2) x"),
        ("cone_t00_n2", "cone family member t = 0 (ball indicator), n = 2"),
        ("cone_t03_n2", "cone family member t = 0.3, n = 2"),
        ("cone_t03_n3", "cone family member t = 0.3, n = 3"),
        ("cone_t08_n2", "cone family member t = 0.8, n = 2"),
        ("cone_t08_n3", "cone family member t = 0.8, n = 3"),
        ("hp_box_n2", "support function of a square plus square indicator"),
        ("hplane_ball_n3", "disk-domain cone embedded in a coordinate plane of R^3"),
        ("hplane_interval_n2", "interval indicator embedded in the x-axis of R^2"),
        ("hplane_interval_n3", "interval indicator embedded in a coordinate axis of R^3"),
        ("hplane_seg_n2", "segment-domain cone embedded in the x-axis of R^2"),
        ("hplane_tilted_n2", "segment-domain cone embedded in a tilted line of R^2"),
        ("iso_quad_n1", "1/2 x^2"),
        ("iso_quad_n2", "1/2 |x|^2, n = 2"),
        ("iso_quad_n3", "1/2 |x|^2, n = 3"),
        ("pl_ones_n2", "1/2 (|x_1 - 1| + |x_2 - 1|)"),
        ("radial_quartic_n2", "|x|^4 / 4, n = 2"),
        ("radial_quartic_n3", "|x|^4 / 4, n = 3"),
    ];
    v.sort_by_key(|(id, _)| *id);
    v
}

pub fn function(id: &str) -> Option<ConvexFunction> {
    let quartic = |n: usize| {
        ConvexFunction::smooth_radial(
            n,
            RadialProfile::Power {
                coeff: 1.0,
                exponent: 4.0,
            },
        )
        .expect("quartic profile is valid")
    };
    Some(match id {
        "iso_quad_n1" => ConvexFunction::isotropic_quadratic(1),
        "iso_quad_n2" => ConvexFunction::isotropic_quadratic(2),
        "iso_quad_n3" => ConvexFunction::isotropic_quadratic(3),
        "aniso_quad_n2" => ConvexFunction::quadratic(
            DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]),
            DVector::zeros(2),
            0.0,
        )
        .expect("diagonal quadratic is valid"),
        "aniso_quad_n3" => ConvexFunction::quadratic(
            DMatrix::from_row_slice(3, 3, &[2.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.5]),
            DVector::zeros(3),
            0.0,
        )
        .expect("diagonal quadratic is valid"),
        "radial_quartic_n2" => quartic(2),
        "radial_quartic_n3" => quartic(3),
        "cone_t00_n2" => ConvexFunction::cone_t(2, 0.0),
        "cone_t03_n2" => ConvexFunction::cone_t(2, 0.3),
        "cone_t08_n2" => ConvexFunction::cone_t(2, 0.8),
        "cone_t03_n3" => ConvexFunction::cone_t(3, 0.3),
        "cone_t08_n3" => ConvexFunction::cone_t(3, 0.8),
        "pl_ones_n2" => ConvexFunction::pl_sum(DVector::from_vec(vec![1.0, 1.0])),
        "hp_box_n2" => ConvexFunction::support_plus_indicator(
            Polytope::cube(2, 1.0),
            Some(Polytope::cube(2, 1.0)),
        )
        .expect("square pair is valid"),
        "hplane_seg_n2" => ConvexFunction::embedded(
            Subspace::coordinate(2, &[0]),
            ConvexFunction::cone_t(1, 0.3),
        )
        .expect("embedding is valid"),
        "hplane_interval_n2" => ConvexFunction::embedded(
            Subspace::coordinate(2, &[1]),
            ConvexFunction::cone_t(1, 0.0),
        )
        .expect("embedding is valid"),
        "hplane_tilted_n2" => {
            let inv_sqrt2 = 1.0 / 2f64.sqrt();
            let frame = DMatrix::from_column_slice(2, 1, &[inv_sqrt2, inv_sqrt2]);
            ConvexFunction::embedded(
                Subspace::new(frame).expect("tilted line frame"),
                ConvexFunction::cone_t(1, 0.5),
            )
            .expect("embedding is valid")
        }
        "hplane_ball_n3" => ConvexFunction::embedded(
            Subspace::coordinate(3, &[0, 1]),
            ConvexFunction::cone_t(2, 0.4),
        )
        .expect("embedding is valid"),
        "hplane_interval_n3" => ConvexFunction::embedded(
            Subspace::coordinate(3, &[2]),
            ConvexFunction::cone_t(1, 0.2),
        )
        .expect("embedding is valid"),
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalogs_are_sorted_and_resolvable() {
        let densities = density_catalog();
        assert!(densities.windows(2).all(|w| w[0].0 < w[1].0));
        for (id, _) in &densities {
            assert!(density(id).is_some(), "unresolvable density id {id}");
        }
        assert!(densities.iter().any(|(id, _)| *id == "tent"));

        let functions = function_catalog();
        assert!(functions.windows(2).all(|w| w[0].0 < w[1].0));
        for (id, _) in &functions {
            assert!(function(id).is_some(), "unresolvable function id {id}");
        }
        assert!(functions.iter().any(|(id, _)| id.starts_with("cone_t")));
    }

    #[test]
    fn unknown_ids_are_none() {
        assert!(density("no_such_density").is_none());
        assert!(function("no_such_function").is_none());
    }
}
