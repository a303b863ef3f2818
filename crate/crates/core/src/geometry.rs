//! Worldline of the uniformly accelerated detector and the mirror geometry.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Constant-Rindler-position trajectory with proper acceleration `a`.
///
/// The Rindler position is pinned to `xi = 1/a`, and the detector sits at the
/// inertial origin at `tau = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RindlerWorldline {
    acceleration: f64,
}

impl RindlerWorldline {
    pub fn new(acceleration: f64) -> Result<Self> {
        check_acceleration(acceleration)?;
        Ok(Self { acceleration })
    }

    pub fn acceleration(&self) -> f64 {
        self.acceleration
    }

    pub fn xi(&self) -> f64 {
        self.acceleration.recip()
    }

    /// Inertial coordinates `(t, x)` at proper time `tau`.
    pub fn coords(&self, tau: f64) -> (f64, f64) {
        let a = self.acceleration;
        let half = (0.5 * a * tau).sinh();
        // cosh(u) - 1 = 2 sinh^2(u/2) avoids cancellation near tau = 0
        ((a * tau).sinh() / a, 2.0 * half * half / a)
    }
}

pub fn worldline_coords(w: &RindlerWorldline, tau: f64) -> (f64, f64) {
    w.coords(tau)
}

pub(crate) fn check_acceleration(a: f64) -> Result<()> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::InvalidParameter {
            name: "a",
            value: a,
            reason: "acceleration must be finite and positive",
        });
    }
    if !(a * a).is_finite() {
        return Err(Error::Overflow {
            name: "a",
            value: a,
        });
    }
    Ok(())
}

/// Field boundary: free Minkowski vacuum, or two perpendicular Dirichlet
/// mirrors whose intersection line lies at distance `r` from the trajectory,
/// with the detector at angle `alpha` between them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundaryConfig {
    Unbounded,
    TwoPerpendicularMirrors { r: f64, alpha: f64 },
}

impl BoundaryConfig {
    pub fn mirrors(r: f64, alpha: f64) -> Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InvalidParameter {
                name: "R",
                value: r,
                reason: "mirror distance must be finite and positive",
            });
        }
        if !(alpha > 0.0 && alpha < FRAC_PI_2) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                value: alpha,
                reason: "angle must lie strictly inside (0, pi/2)",
            });
        }
        Ok(Self::TwoPerpendicularMirrors { r, alpha })
    }

    /// Re-checks the invariants, for values built by struct literal or
    /// deserialization.
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Unbounded => Ok(()),
            Self::TwoPerpendicularMirrors { r, alpha } => Self::mirrors(r, alpha).map(|_| ()),
        }
    }

    pub fn is_unbounded(&self) -> bool {
        matches!(self, Self::Unbounded)
    }

    /// Image separations `(R cos alpha, R sin alpha, R)`: one per mirror and
    /// one for the doubly reflected image.
    pub fn image_distances(&self) -> Result<[f64; 3]> {
        match *self {
            Self::Unbounded => Err(Error::NoImages),
            Self::TwoPerpendicularMirrors { r, alpha } => {
                let (sin, cos) = alpha.sin_cos();
                Ok([r * cos, r * sin, r])
            }
        }
    }
}

pub fn image_distances(b: &BoundaryConfig) -> Result<[f64; 3]> {
    b.image_distances()
}
