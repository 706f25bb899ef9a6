//! Numerical toolkit for functional intrinsic volumes of convex functions.
//!
//! The library computes the functionals
//!
//! ```text
//! Z_{j,zeta}(u) = int zeta(|grad u(x)|) [D^2 u(x)]_{n-j} dx
//! ```
//!
//! on super-coercive convex functions by three independent routes and
//! cross-validates them:
//!
//! * direct quadrature of the Hessian integral ([`valuation::fiv_direct`]),
//! * integration against discretized Hessian / Monge-Ampere measures
//!   ([`measure`]),
//! * a Grassmannian (Cauchy-Kubota) average of gradient-density integrals of
//!   projection functions ([`valuation::fiv_kubota`]).
//!
//! Supporting machinery: densities on `(0, infinity)` with Hadwiger-class
//! membership tests ([`density`]), forward/iterated/inverse Abel transforms
//! ([`abel`]), convex-function representations with Legendre transforms and
//! epigraph operations ([`convex`]), and a valuation-axiom harness
//! ([`valuation::axiom_suite`]).

pub mod abel;
pub mod convex;
pub mod corpus;
pub mod density;
pub mod error;
pub mod geometry;
pub mod interp;
pub mod measure;
pub mod quad;
pub mod rng;
pub mod suite;
pub mod valuation;

pub use error::{Error, Result};

// The linear-algebra backend is part of the public API surface
// (function descriptors expose vectors and frames).
pub use nalgebra;
