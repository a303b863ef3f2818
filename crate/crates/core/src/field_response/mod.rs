//! Vacuum Wightman functions along the accelerated worldline and the detector
//! response `G(omega)`, their Fourier transform.
//!
//! The closed form is a Planck factor `omega / (2 pi (1 - exp(-2 pi omega / a)))`
//! times a boundary bracket `1 - f1(R cos alpha) - f1(R sin alpha) + f1(R)`
//! (identically 1 without mirrors). [`oracle`] recomputes the same quantity by
//! direct quadrature of the regularized Wightman function.

pub mod oracle;
pub mod quadrature;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{check_acceleration, BoundaryConfig};

pub use oracle::{response_numeric_oracle, OracleEstimate, OracleSettings};

/// Relative floor below which a Wightman denominator counts as singular.
pub const DENOMINATOR_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WightmanParams {
    pub a: f64,
    pub boundary: BoundaryConfig,
    pub epsilon: f64,
}

impl WightmanParams {
    pub fn new(a: f64, boundary: BoundaryConfig, epsilon: f64) -> Result<Self> {
        check_acceleration(a)?;
        boundary.validate()?;
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidParameter {
                name: "epsilon",
                value: epsilon,
                reason: "regulator must lie in (0, 1)",
            });
        }
        Ok(Self {
            a,
            boundary,
            epsilon,
        })
    }
}

/// Boundary-modified Wightman function at proper-time separation `dtau`,
/// built by the method of images with the `i epsilon` shift inside `sinh`.
pub fn wightman(p: &WightmanParams, dtau: f64) -> Result<Complex64> {
    let a = p.a;
    let z = Complex64::new(0.5 * a * dtau, -p.epsilon);
    let s = z.sinh().powi(2);

    let term = |c2: f64| -> Result<Complex64> {
        let den = s - c2;
        let magnitude = den.norm();
        if magnitude < DENOMINATOR_FLOOR * (1.0 + s.norm() + c2) {
            return Err(Error::Regularization { dtau, magnitude });
        }
        Ok(den.inv())
    };

    let mut sum = term(0.0)?;
    if let BoundaryConfig::TwoPerpendicularMirrors { .. } = p.boundary {
        let [rc, rs, r] = p.boundary.image_distances()?;
        sum -= term((a * rc).powi(2))?;
        sum += term((a * r).powi(2))?;
        sum -= term((a * rs).powi(2))?;
    }
    Ok(sum * (-(a * a) / (16.0 * PI * PI)))
}

// 1 - sin(x)/x without cancellation at small x.
fn one_minus_sinc(x: f64) -> f64 {
    let x = x.abs();
    if x < 0.5 {
        let x2 = x * x;
        let mut term = x2 / 6.0;
        let mut sum: f64 = 0.0;
        let mut n = 1.0;
        while term.abs() > 1e-18 * sum.abs().max(f64::MIN_POSITIVE) {
            sum += term;
            term *= -x2 / ((2.0 * n + 2.0) * (2.0 * n + 3.0));
            n += 1.0;
        }
        sum
    } else {
        1.0 - x.sin() / x
    }
}

// asinh(u) / (u sqrt(1 + u^2))
fn lorentz_envelope(u: f64) -> f64 {
    u.asinh() / (u * u.mul_add(u, 1.0).sqrt())
}

// 1 - lorentz_envelope(u), series sum_n (-1)^(n+1) 4^n (n!)^2 / (2n+1)! u^(2n) for small u.
fn one_minus_envelope(u: f64) -> f64 {
    if u < 0.25 {
        let u2 = u * u;
        let mut coef = 2.0 / 3.0;
        let mut power = u2;
        let mut sum: f64 = 0.0;
        let mut n = 1.0;
        loop {
            let term = coef * power;
            if term.abs() < 1e-18 * sum.abs().max(f64::MIN_POSITIVE) {
                break sum;
            }
            sum += term;
            coef *= 2.0 * (n + 1.0) / (2.0 * n + 3.0);
            power *= -u2;
            n += 1.0;
        }
    } else {
        1.0 - lorentz_envelope(u)
    }
}

/// Single-image response factor `sin[(2 omega/a) asinh(a r)] / (2 r omega sqrt(1 + a^2 r^2))`.
/// Reduces to [`f2`] at `omega = 0`.
pub fn f1(omega: f64, a: f64, r: f64) -> f64 {
    if omega == 0.0 {
        return f2(a, r);
    }
    let u = a * r;
    let phase = 2.0 * omega / a * u.asinh();
    let sinc = if phase == 0.0 {
        1.0
    } else {
        phase.sin() / phase
    };
    sinc * lorentz_envelope(u)
}

/// Zero-frequency limit of [`f1`]: `asinh(a r) / (a r sqrt(1 + a^2 r^2))`.
pub fn f2(a: f64, r: f64) -> f64 {
    lorentz_envelope(a * r)
}

// 1 - f1 with the small-separation cancellation removed.
fn one_minus_f1(omega: f64, a: f64, r: f64) -> f64 {
    let u = a * r;
    let deficit = one_minus_envelope(u);
    if omega == 0.0 {
        return deficit;
    }
    let phase = 2.0 * omega / a * u.asinh();
    deficit + (1.0 - deficit) * one_minus_sinc(phase)
}

/// Boundary bracket `1 - f1(R cos alpha) - f1(R sin alpha) + f1(R)`; 1 when unbounded.
///
/// Evaluated as `(1 - f1(Rc)) + (1 - f1(Rs)) - (1 - f1(R))` so that the
/// vanishing limit `R -> 0` keeps its sign.
pub fn bracket(omega: f64, a: f64, boundary: &BoundaryConfig) -> f64 {
    match boundary.image_distances() {
        Err(_) => 1.0,
        Ok([rc, rs, r]) => {
            one_minus_f1(omega, a, rc) + one_minus_f1(omega, a, rs) - one_minus_f1(omega, a, r)
        }
    }
}

/// Unbounded accelerated response: `omega / (2 pi (1 - exp(-2 pi omega / a)))`,
/// with the analytic value `a / (4 pi^2)` at `omega = 0`.
pub fn planck_factor(omega: f64, a: f64) -> f64 {
    if omega == 0.0 {
        return a / (4.0 * PI * PI);
    }
    let x = 2.0 * PI * omega / a;
    if omega > 0.0 {
        omega / (2.0 * PI * -(-x).exp_m1())
    } else {
        -omega / (2.0 * PI * (-x).exp_m1())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponseValue {
    pub omega: f64,
    pub value: f64,
    /// Boundary bracket entering `value`; 1 when unbounded.
    pub bracket: f64,
}

/// Closed-form detector response `G(omega)`. Negative brackets are reported,
/// not clamped.
pub fn response(a: f64, boundary: &BoundaryConfig, omega: f64) -> Result<ResponseValue> {
    check_acceleration(a)?;
    boundary.validate()?;
    if !omega.is_finite() {
        return Err(Error::InvalidParameter {
            name: "omega",
            value: omega,
            reason: "frequency must be finite",
        });
    }
    let bracket = bracket(omega, a, boundary);
    Ok(ResponseValue {
        omega,
        value: planck_factor(omega, a) * bracket,
        bracket,
    })
}
