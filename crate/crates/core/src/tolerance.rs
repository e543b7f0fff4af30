//! Numeric thresholds, grouped into named precision profiles.

use std::str::FromStr;

use serde::Serialize;

use crate::error::FinslerError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tolerances {
    /// Minimum Euclidean length of a direction `y`.
    pub zero_section: f64,
    /// Smallest admissible eigenvalue of `g_ij`.
    pub convexity: f64,
    /// Reversibility threshold on the relative asymmetry.
    pub reversible: f64,
    /// Relative residual below which `Ric_ij = -c^2 g_ij` is accepted.
    pub einstein: f64,
    /// Absolute residual for the Berwald-parallel Ricci test.
    pub parallel: f64,
    /// Sine-of-angle threshold for `Gbar - G` parallel to `y`.
    pub projective_sine: f64,
    /// Hausdorff threshold for reversed geodesics.
    pub geodesic_reversible: f64,
    /// Minimum denominator in the flag curvature quotient.
    pub flag_denominator: f64,
    /// Integrator relative and absolute tolerances.
    pub rtol: f64,
    pub atol: f64,
    /// Terminal error targeted by shooting refinement.
    pub shooting_target: f64,
    /// Terminal error below which a shooting result counts as converged.
    pub shooting_converged: f64,
    /// `max |Q|` along a geodesic below which it is treated as flat.
    pub flat_q: f64,
    /// Schwarzian residual `|{p,s} - Q|` accepted along a projective segment.
    pub schwarzian: f64,
    /// Relative error accepted for the `d_M / d_F` proportionality.
    pub theorem_d: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            zero_section: 1e-8,
            convexity: 1e-10,
            reversible: 1e-12,
            einstein: 1e-5,
            parallel: 1e-5,
            projective_sine: 1e-8,
            geodesic_reversible: 1e-5,
            flag_denominator: 1e-12,
            rtol: 1e-9,
            atol: 1e-12,
            shooting_target: 1e-10,
            shooting_converged: 1e-8,
            flat_q: 1e-9,
            schwarzian: 1e-5,
            theorem_d: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PrecisionProfile {
    Standard,
    Strict,
}

impl PrecisionProfile {
    pub fn tolerances(self) -> Tolerances {
        match self {
            PrecisionProfile::Standard => Tolerances::default(),
            PrecisionProfile::Strict => Tolerances {
                rtol: 1e-11,
                atol: 1e-13,
                shooting_target: 1e-11,
                ..Tolerances::default()
            },
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PrecisionProfile::Standard => "standard",
            PrecisionProfile::Strict => "strict",
        }
    }
}

impl FromStr for PrecisionProfile {
    type Err = FinslerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "standard" | "default" => Ok(PrecisionProfile::Standard),
            "strict" => Ok(PrecisionProfile::Strict),
            other => Err(FinslerError::InvalidInput(format!(
                "unknown precision profile '{other}' (expected standard or strict)"
            ))),
        }
    }
}
