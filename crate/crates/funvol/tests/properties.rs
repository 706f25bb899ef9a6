//! Property-based invariants over randomized inputs.

use funvol::convex::{self, ConvexFunction};
use funvol::density::{Density, PiecewisePolynomial, PolyPiece};
use funvol::interp::MonotoneCubic;
use funvol::measure::{elementary_symmetric, elementary_symmetric_matrix};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn piecewise_density(coeffs: Vec<f64>, hi: f64) -> Density {
    Density::from_piecewise(PiecewisePolynomial::new(vec![PolyPiece {
        lo: 0.0,
        hi,
        coeffs,
    }]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Densities vanish identically beyond their support bound.
    #[test]
    fn density_support_cutoff(
        c0 in -2.0..2.0f64,
        c1 in -2.0..2.0f64,
        hi in 0.2..3.0f64,
        factor in 1.001..10.0f64,
    ) {
        let d = piecewise_density(vec![c0, c1], hi);
        let s = hi * factor;
        prop_assert_eq!(d.eval_unchecked(s), 0.0);
    }

    /// Tail moment integrals of piecewise polynomials are exact: compare
    /// the closed form against a Riemann refinement.
    #[test]
    fn tail_integral_matches_riemann(
        c0 in 0.0..2.0f64,
        c1 in -1.0..1.0f64,
        s in 0.01..0.9f64,
    ) {
        let d = piecewise_density(vec![c0, c1], 1.0);
        let exact = d.tail_moment_integral(1, s);
        let mut riemann = 0.0;
        let steps = 20000;
        let h = (1.0 - s) / steps as f64;
        for i in 0..steps {
            let t = s + (i as f64 + 0.5) * h;
            riemann += t * d.eval_unchecked(t) * h;
        }
        prop_assert!((exact - riemann).abs() < 1e-6);
    }

    /// The two elementary-symmetric routes (eigenvalue recurrence and
    /// principal minors) agree on random symmetric matrices.
    #[test]
    fn elementary_symmetric_routes_agree(
        entries in proptest::collection::vec(-2.0..2.0f64, 10),
        k in 0usize..=4,
    ) {
        let n = 4;
        let mut m = DMatrix::zeros(n, n);
        let mut it = entries.into_iter();
        for i in 0..n {
            for j in 0..=i {
                let v = it.next().unwrap();
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        let eigs: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        let via_minors = elementary_symmetric_matrix(&m, k);
        let via_eigs = elementary_symmetric(&eigs, k).unwrap();
        prop_assert!((via_minors - via_eigs).abs() < 1e-9 * (1.0 + via_eigs.abs()));
    }

    /// Epi-multiplication composes: lambda.(mu.u) = (lambda mu).u.
    #[test]
    fn epi_mult_composes(
        lambda in 0.25..4.0f64,
        mu in 0.25..4.0f64,
        t in 0.0..1.5f64,
        px in -2.0..2.0f64,
        py in -2.0..2.0f64,
    ) {
        let u = ConvexFunction::cone_t(2, t);
        let a = convex::epi_mult(lambda, &convex::epi_mult(mu, &u).unwrap()).unwrap();
        let b = convex::epi_mult(lambda * mu, &u).unwrap();
        let x = DVector::from_vec(vec![px, py]);
        let (va, vb) = (a.evaluate(&x), b.evaluate(&x));
        if va.is_finite() || vb.is_finite() {
            prop_assert!((va - vb).abs() < 1e-9, "{va} vs {vb}");
        }
    }

    /// Conjugation reverses the pointwise order of quadratics.
    #[test]
    fn conjugate_reverses_order(
        d1 in 0.2..3.0f64,
        d2 in 0.2..3.0f64,
        bump1 in 0.0..2.0f64,
        bump2 in 0.0..2.0f64,
        px in -2.0..2.0f64,
        py in -2.0..2.0f64,
    ) {
        // v = u + PSD increment, so u <= v pointwise.
        let a_u = DMatrix::from_row_slice(2, 2, &[d1, 0.0, 0.0, d2]);
        let a_v = DMatrix::from_row_slice(2, 2, &[d1 + bump1, 0.0, 0.0, d2 + bump2]);
        let u = ConvexFunction::quadratic(a_u, DVector::zeros(2), 0.0).unwrap();
        let v = ConvexFunction::quadratic(a_v, DVector::zeros(2), 0.0).unwrap();
        let (du, dv) = (u.legendre().unwrap(), v.legendre().unwrap());
        let x = DVector::from_vec(vec![px, py]);
        prop_assert!(u.evaluate(&x) <= v.evaluate(&x) + 1e-12);
        prop_assert!(du.evaluate(&x) >= dv.evaluate(&x) - 1e-12);
    }

    /// Legendre involution on random positive-definite quadratics.
    #[test]
    fn legendre_involution(
        d1 in 0.3..3.0f64,
        d2 in 0.3..3.0f64,
        off in -0.5..0.5f64,
        b1 in -1.0..1.0f64,
        b2 in -1.0..1.0f64,
        px in -2.0..2.0f64,
        py in -2.0..2.0f64,
    ) {
        // Symmetric PD matrix with controlled off-diagonal.
        let cap = 0.9 * (d1 * d2).sqrt();
        let o = off.clamp(-cap, cap);
        let a = DMatrix::from_row_slice(2, 2, &[d1, o, o, d2]);
        let u = ConvexFunction::quadratic(a, DVector::from_vec(vec![b1, b2]), 0.3).unwrap();
        let uu = u.legendre().unwrap().legendre().unwrap();
        let x = DVector::from_vec(vec![px, py]);
        prop_assert!((uu.evaluate(&x) - u.evaluate(&x)).abs() < 1e-10);
    }

    /// The shape-preserving interpolant reproduces nodes and stays within
    /// the data range on monotone data.
    #[test]
    fn monotone_interpolant_bounded(
        raw in proptest::collection::vec(0.01..1.0f64, 6..20),
        q in 0.0..1.0f64,
    ) {
        // Build strictly increasing xs and monotone decreasing ys.
        let mut x = 0.0;
        let mut xs = Vec::with_capacity(raw.len());
        for r in &raw {
            x += r;
            xs.push(x);
        }
        let ys: Vec<f64> = xs.iter().map(|x| (-x).exp()).collect();
        let c = MonotoneCubic::new(xs.clone(), ys.clone());
        let probe = xs[0] + q * (xs[xs.len() - 1] - xs[0]);
        let v = c.eval(probe);
        prop_assert!(v <= ys[0] + 1e-12 && v >= ys[ys.len() - 1] - 1e-12);
    }
}
