//! Phase estimation with a uniformly accelerated Unruh-DeWitt detector.
//!
//! A two-level detector with gap `omega0` couples with strength `lambda` to a
//! massless scalar vacuum while moving with proper acceleration `a`, either in
//! free space or between two perpendicular Dirichlet mirrors. The crate
//! provides:
//!
//! - [`geometry`]: the Rindler worldline and mirror image separations,
//! - [`field_response`]: Wightman functions and the detector response
//!   `G(omega)`, in closed form and by a numeric Fourier oracle,
//! - [`dynamics`]: Lindblad decay rates and Bloch-vector evolution, analytic
//!   and by RK4,
//! - [`metrology`]: quantum Fisher information of the phase (general SLD route
//!   and closed forms) and the Cramer-Rao bound,
//! - [`sweep`], [`report`], [`verify`]: parameter sweeps, figure presets, CSV
//!   and manifest output, and the oracle verification suite.
//!
//! Natural units `c = hbar = 1` are used throughout.

// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod field_response;
pub mod geometry;
pub mod metrology;
pub mod report;
pub mod sweep;
pub mod verify;

pub use dynamics::{BlochState, DecayRates, DetectorParams, GammaZConvention, GeneratorMatrix};
pub use error::{Error, Result};
pub use field_response::{ResponseValue, WightmanParams};
pub use geometry::{BoundaryConfig, RindlerWorldline};
pub use metrology::{QfiRecord, SpectralDecomposition};
