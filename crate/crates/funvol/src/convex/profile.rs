//! Radial profiles for rotationally symmetric convex functions.

use crate::error::{Error, Result};

/// Scalar convex profile on `[0, infinity)`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RadialProfile {
    /// `coeff * r^exponent / exponent` with `exponent >= 2`, `coeff > 0`;
    /// twice continuously differentiable with superlinear growth.
    Power { coeff: f64, exponent: f64 },
    /// `slope * max(0, r - knee)`; the conjugate profile of cone functions.
    /// Not differentiable at the knee and only linearly growing.
    Ramp { slope: f64, knee: f64 },
}

impl RadialProfile {
    pub fn validate(&self) -> Result<()> {
        match self {
            RadialProfile::Power { coeff, exponent } => {
                if !(*coeff > 0.0) || !(*exponent >= 2.0) {
                    return Err(Error::Descriptor(format!(
                        "power profile needs coeff > 0 and exponent >= 2, got {coeff}, {exponent}"
                    )));
                }
            }
            RadialProfile::Ramp { slope, knee } => {
                if !(*slope >= 0.0) || !(*knee >= 0.0) {
                    return Err(Error::Descriptor(
                        "ramp profile needs slope >= 0 and knee >= 0".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn value(&self, r: f64) -> f64 {
        match self {
            RadialProfile::Power { coeff, exponent } => coeff * r.powf(*exponent) / exponent,
            RadialProfile::Ramp { slope, knee } => slope * (r - knee).max(0.0),
        }
    }

    pub fn derivative(&self, r: f64) -> f64 {
        match self {
            RadialProfile::Power { coeff, exponent } => coeff * r.powf(exponent - 1.0),
            RadialProfile::Ramp { slope, knee } => {
                if r > *knee {
                    *slope
                } else {
                    0.0
                }
            }
        }
    }

    pub fn second_derivative(&self, r: f64) -> Result<f64> {
        match self {
            RadialProfile::Power { coeff, exponent } => {
                Ok(coeff * (exponent - 1.0) * r.powf(exponent - 2.0))
            }
            RadialProfile::Ramp { knee, .. } => {
                if (r - knee).abs() < 1e-12 {
                    Err(Error::domain(format!(
                        "ramp profile is not twice differentiable at the knee r = {r}"
                    )))
                } else {
                    Ok(0.0)
                }
            }
        }
    }

    /// Twice continuously differentiable with positive curvature (usable in
    /// Hessian-integral quadrature).
    pub fn is_smooth(&self) -> bool {
        matches!(self, RadialProfile::Power { .. })
    }

    /// Superlinear growth (membership in the super-coercive class).
    pub fn is_supercoercive(&self) -> bool {
        matches!(self, RadialProfile::Power { .. })
    }

    /// Largest radius with `profile'(r) <= s`; `None` when the derivative
    /// never exceeds `s`.
    pub fn derivative_preimage_radius(&self, s: f64) -> Option<f64> {
        match self {
            RadialProfile::Power { coeff, exponent } => {
                Some((s / coeff).powf(1.0 / (exponent - 1.0)))
            }
            RadialProfile::Ramp { slope, knee } => {
                if s >= *slope {
                    None
                } else {
                    Some(*knee)
                }
            }
        }
    }

    /// Convex conjugate profile where it is again a profile
    /// (`Power` pairs with the dual exponent; ramps conjugate to cone
    /// functions, handled at the function level).
    pub fn conjugate(&self) -> Option<RadialProfile> {
        match self {
            RadialProfile::Power { coeff, exponent } => {
                let q = exponent / (exponent - 1.0);
                Some(RadialProfile::Power {
                    coeff: coeff.powf(1.0 - q),
                    exponent: q,
                })
            }
            RadialProfile::Ramp { .. } => None,
        }
    }

    /// Epi-multiplication by `lambda`: profile of `lambda * u(./lambda)`.
    pub fn epi_mult(&self, lambda: f64) -> RadialProfile {
        match self {
            RadialProfile::Power { coeff, exponent } => RadialProfile::Power {
                coeff: coeff * lambda.powf(1.0 - exponent),
                exponent: *exponent,
            },
            RadialProfile::Ramp { slope, knee } => RadialProfile::Ramp {
                slope: *slope,
                knee: lambda * knee,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn quartic_conjugate_matches_dual_exponent() {
        // (r^4/4)* = (3/4) rho^(4/3).
        let p = RadialProfile::Power {
            coeff: 1.0,
            exponent: 4.0,
        };
        let d = p.conjugate().unwrap();
        if let RadialProfile::Power { coeff, exponent } = d {
            assert_abs_diff_eq!(exponent, 4.0 / 3.0, epsilon = 1e-15);
            assert_abs_diff_eq!(coeff, 1.0, epsilon = 1e-15);
            assert_abs_diff_eq!(
                coeff * 2f64.powf(exponent) / exponent,
                0.75 * 2f64.powf(4.0 / 3.0),
                epsilon = 1e-12
            );
        } else {
            panic!("expected power profile");
        }
    }

    #[test]
    fn conjugate_by_direct_sup() {
        let p = RadialProfile::Power {
            coeff: 2.0,
            exponent: 3.0,
        };
        let d = p.conjugate().unwrap();
        for rho in [0.3, 1.0, 2.5] {
            // sup_r (r rho - p(r)) by dense scan.
            let mut sup = f64::NEG_INFINITY;
            for k in 0..200000 {
                let r = k as f64 * 2e-5 * 4.0;
                sup = sup.max(r * rho - p.value(r));
            }
            assert_abs_diff_eq!(d.value(rho), sup, epsilon = 1e-4);
        }
    }

    #[test]
    fn epi_mult_scales_epigraph() {
        let p = RadialProfile::Power {
            coeff: 1.0,
            exponent: 2.0,
        };
        let q = p.epi_mult(2.0);
        for r in [0.5, 1.0, 3.0] {
            assert_abs_diff_eq!(q.value(r), 2.0 * p.value(r / 2.0), epsilon = 1e-14);
        }
    }
}
