//! Quantum Fisher information of the phase `phi` carried by the evolved
//! detector state, and the Cramer-Rao bound it implies.
//!
//! The general route diagonalizes `rho`, differentiates it in `phi` and sums
//! `2 |<i| d rho |j>|^2 / (p_i + p_j)` over the support. The closed forms
//! (`h^2` and the maximal-QFI exponent for mirrors) are cross-checks.
//! Basis order is `{|1>, |0>}` (excited first) with `sigma_z |1> = +|1>`.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{evolve_analytic, BlochState, DecayRates, DetectorParams, BLOCH_SLACK};
use crate::error::{Error, Result};
use crate::field_response::bracket;
use crate::geometry::BoundaryConfig;

pub type DensityMatrix = Matrix2<Complex64>;
pub type Ket = Vector2<Complex64>;

/// Support threshold on `p_i + p_j` in the SLD sum.
pub const SUPPORT_THRESHOLD: f64 = 1e-14;
/// Below this Bloch norm the spectrum is treated as degenerate.
pub const DEGENERACY_THRESHOLD: f64 = 1e-14;
/// Step for the central-difference derivative in `phi`.
pub const FD_STEP: f64 = 1e-6;

pub fn density_from_bloch(s: &BlochState) -> Result<DensityMatrix> {
    let norm = s.norm();
    if !(norm <= 1.0 + BLOCH_SLACK) {
        return Err(Error::OutsideBlochBall { norm });
    }
    Ok(bloch_matrix(s.as_array(), 1.0))
}

// (identity * trace + B . sigma) / 2
fn bloch_matrix(b: [f64; 3], trace: f64) -> DensityMatrix {
    let half = 0.5;
    Matrix2::new(
        Complex64::new(half * (trace + b[2]), 0.0),
        Complex64::new(half * b[0], -half * b[1]),
        Complex64::new(half * b[0], half * b[1]),
        Complex64::new(half * (trace - b[2]), 0.0),
    )
}

/// Detector state at proper time `tau`, prepared as
/// `cos(theta/2)|1> + sin(theta/2) e^{i phi}|0>` at `tau = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub theta: f64,
    pub phi: f64,
    pub tau: f64,
    pub state: BlochState,
}

impl PhaseState {
    pub fn evolve(
        theta: f64,
        phi: f64,
        rates: &DecayRates,
        omega_eff: f64,
        tau: f64,
    ) -> Result<Self> {
        if !(0.0..=PI).contains(&theta) {
            return Err(Error::InvalidParameter {
                name: "theta",
                value: theta,
                reason: "polar angle must lie in [0, pi]",
            });
        }
        for (name, value) in [("phi", phi), ("tau", tau)] {
            if !value.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be finite",
                });
            }
        }
        if tau < 0.0 {
            return Err(Error::InvalidParameter {
                name: "tau",
                value: tau,
                reason: "proper time must be non-negative",
            });
        }
        let initial = BlochState::from_angles(theta, phi);
        Ok(Self {
            theta,
            phi,
            tau,
            state: evolve_analytic(&initial, rates, omega_eff, tau),
        })
    }

    /// Transverse amplitude `h = exp(-(g+ + g- + 4 gz) tau / 2) sin(theta)`.
    pub fn coherence(&self, rates: &DecayRates) -> f64 {
        (-rates.transverse() * self.tau).exp() * self.theta.sin()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    /// Eigenvalues, larger first.
    pub p: [f64; 2],
    pub psi: [Ket; 2],
    /// Set for a maximally mixed state, where any orthonormal basis is valid.
    pub degenerate: bool,
}

impl SpectralDecomposition {
    pub fn projector(&self, i: usize) -> DensityMatrix {
        self.psi[i] * self.psi[i].adjoint()
    }
}

fn normalized_or_ground(v: Ket) -> Ket {
    let n = v.norm();
    if n > 0.0 {
        v / Complex64::from(n)
    } else {
        Ket::new(Complex64::from(0.0), Complex64::from(1.0))
    }
}

/// Eigen-decomposition in closed form: `p = (1 +- |B|)/2` with eigenvectors
/// proportional to `(+-w e^{-i(Omega tau + phi)}, h)`, `w = |B| +- Bz`.
pub fn spectral(ps: &PhaseState, rates: &DecayRates, omega_eff: f64) -> SpectralDecomposition {
    let s = ps.state;
    let norm = s.norm();
    let basis = [
        Ket::new(Complex64::from(1.0), Complex64::from(0.0)),
        Ket::new(Complex64::from(0.0), Complex64::from(1.0)),
    ];
    if norm < DEGENERACY_THRESHOLD {
        return SpectralDecomposition {
            p: [0.5, 0.5],
            psi: basis,
            degenerate: true,
        };
    }
    let h = ps.coherence(rates);
    let t2 = s.bx * s.bx + s.by * s.by;
    // w_plus * w_minus = |B|^2 - Bz^2; take the cancellation-free one directly
    let (w_plus, w_minus) = if s.bz >= 0.0 {
        let w = norm + s.bz;
        (w, t2 / w)
    } else {
        let w = norm - s.bz;
        (t2 / w, w)
    };
    let phase = Complex64::from_polar(1.0, -(omega_eff * ps.tau + ps.phi));
    let h = Complex64::from(h);
    let v1 = normalized_or_ground(Ket::new(phase * w_plus, h));
    let v2 = normalized_or_ground(Ket::new(-phase * w_minus, h));
    SpectralDecomposition {
        p: [0.5 * (1.0 + norm), 0.5 * (1.0 - norm)],
        psi: [v1, v2],
        degenerate: false,
    }
}

/// Eigen-decomposition by a general Hermitian eigensolver, used as an
/// independent check of [`spectral`].
pub fn spectral_generic(rho: &DensityMatrix) -> SpectralDecomposition {
    let eig = rho.symmetric_eigen();
    let (hi, lo) = if eig.eigenvalues[0] >= eig.eigenvalues[1] {
        (0, 1)
    } else {
        (1, 0)
    };
    let p = [eig.eigenvalues[hi], eig.eigenvalues[lo]];
    SpectralDecomposition {
        p,
        psi: [
            eig.eigenvectors.column(hi).into_owned(),
            eig.eigenvectors.column(lo).into_owned(),
        ],
        degenerate: (p[0] - p[1]).abs() < DEGENERACY_THRESHOLD,
    }
}

/// QFI from a spectral decomposition and `d rho / d phi`, summed over pairs
/// with `p_i + p_j` above [`SUPPORT_THRESHOLD`].
pub fn qfi_general(decomp: &SpectralDecomposition, drho: &DensityMatrix) -> f64 {
    let mut f = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let total = decomp.p[i] + decomp.p[j];
            if total > SUPPORT_THRESHOLD {
                let element = (decomp.psi[i].adjoint() * drho * decomp.psi[j])[(0, 0)];
                f += 2.0 * element.norm_sqr() / total;
            }
        }
    }
    f
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeMode {
    #[default]
    Analytic,
    FiniteDifference,
}

/// `d rho / d phi` of the evolved state.
pub fn dphi_rho(
    theta: f64,
    phi: f64,
    rates: &DecayRates,
    omega_eff: f64,
    tau: f64,
    mode: DerivativeMode,
) -> Result<DensityMatrix> {
    match mode {
        DerivativeMode::Analytic => {
            let ps = PhaseState::evolve(theta, phi, rates, omega_eff, tau)?;
            let h = ps.coherence(rates);
            let (sin, cos) = (omega_eff * tau + phi).sin_cos();
            Ok(bloch_matrix([-h * sin, h * cos, 0.0], 0.0))
        }
        DerivativeMode::FiniteDifference => {
            let up = PhaseState::evolve(theta, phi + FD_STEP, rates, omega_eff, tau)?;
            let down = PhaseState::evolve(theta, phi - FD_STEP, rates, omega_eff, tau)?;
            let diff = (density_from_bloch(&up.state)? - density_from_bloch(&down.state)?)
                / Complex64::from(2.0 * FD_STEP);
            Ok(diff)
        }
    }
}

/// `h^2 = exp(-(g+ + g- + 4 gz) tau) sin^2(theta)`.
pub fn qfi_closed_form(theta: f64, rates: &DecayRates, tau: f64) -> f64 {
    (-2.0 * rates.transverse() * tau).exp() * theta.sin().powi(2)
}

/// Maximal (`theta = pi/2`) QFI written directly in terms of the boundary
/// brackets; coincides with the rate pipeline under the halved dephasing
/// convention.
pub fn qfi_max_eq22(d: &DetectorParams, b: &BoundaryConfig, tau: f64) -> Result<f64> {
    d.validate()?;
    b.validate()?;
    let lam2 = d.lambda * d.lambda;
    let coth = (PI * d.omega0 / d.a).tanh().recip();
    let relax = lam2 * d.omega0 * coth * tau / PI * bracket(d.omega0, d.a, b);
    let dephase = lam2 * d.a * tau / (PI * PI) * bracket(0.0, d.a, b);
    Ok((-relax - dephase).exp())
}

/// Phase standard-deviation floor `1/sqrt(M F)` for `M` independent runs.
pub fn cramer_rao(qfi: f64, measurements: u64) -> Result<f64> {
    if measurements == 0 {
        return Err(Error::InvalidParameter {
            name: "measurements",
            value: 0.0,
            reason: "need at least one measurement",
        });
    }
    if !(qfi > 0.0) {
        return Err(Error::UnboundedEstimate);
    }
    Ok((measurements as f64 * qfi).sqrt().recip())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QfiRecord {
    pub tau: f64,
    pub qfi: f64,
    pub qfi_closed: f64,
    pub eigenvalues: [f64; 2],
    pub measurements: u64,
    /// `None` when the QFI vanishes and no finite bound exists.
    pub crb: Option<f64>,
    pub state: BlochState,
}

/// Runs the general QFI route at one proper time.
pub fn qfi_record(
    theta: f64,
    phi: f64,
    rates: &DecayRates,
    omega_eff: f64,
    tau: f64,
    measurements: u64,
) -> Result<QfiRecord> {
    let ps = PhaseState::evolve(theta, phi, rates, omega_eff, tau)?;
    let decomp = spectral(&ps, rates, omega_eff);
    let drho = dphi_rho(theta, phi, rates, omega_eff, tau, DerivativeMode::Analytic)?;
    let qfi = qfi_general(&decomp, &drho);
    let crb = match cramer_rao(qfi, measurements) {
        Ok(v) => Some(v),
        Err(Error::UnboundedEstimate) => None,
        Err(e) => return Err(e),
    };
    Ok(QfiRecord {
        tau,
        qfi,
        qfi_closed: qfi_closed_form(theta, rates, tau),
        eigenvalues: decomp.p,
        measurements,
        crb,
        state: ps.state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{decay_rates, GammaZConvention};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_6};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn reference_rates() -> DecayRates {
        let d = DetectorParams::new(10.0, 1.0, 1.0).unwrap();
        decay_rates(&d, &BoundaryConfig::Unbounded, GammaZConvention::Eq7).unwrap()
    }

    fn max_abs(m: &DensityMatrix) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn density_examples() {
        let mixed = density_from_bloch(&BlochState::new(0.0, 0.0, 0.0).unwrap()).unwrap();
        assert_eq!(
            mixed,
            Matrix2::new(c(0.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.5, 0.0))
        );
        let up = density_from_bloch(&BlochState::new(0.0, 0.0, 1.0).unwrap()).unwrap();
        assert_eq!(
            up,
            Matrix2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0))
        );
        let plus = density_from_bloch(&BlochState::new(1.0, 0.0, 0.0).unwrap()).unwrap();
        assert_eq!(plus[(0, 1)], c(0.5, 0.0));
        assert_eq!(plus[(1, 0)], c(0.5, 0.0));
        let outside = BlochState {
            bx: 1.0,
            by: 1.0,
            bz: 0.0,
        };
        assert!(density_from_bloch(&outside).is_err());
    }

    #[test]
    fn density_matches_initial_ket() {
        let (theta, phi) = (1.1_f64, 0.4);
        let ket = Ket::new(
            c((0.5 * theta).cos(), 0.0),
            Complex64::from_polar((0.5 * theta).sin(), phi),
        );
        let pure = ket * ket.adjoint();
        let rho = density_from_bloch(&BlochState::from_angles(theta, phi)).unwrap();
        assert!(max_abs(&(pure - rho)) < 1e-15);
    }

    #[test]
    fn pure_initial_spectrum() {
        let ps = PhaseState::evolve(FRAC_PI_2, 0.3, &reference_rates(), 10.0, 0.0).unwrap();
        let d = spectral(&ps, &reference_rates(), 10.0);
        assert_relative_eq!(d.p[0], 1.0, epsilon = 1e-15);
        assert!(d.p[1].abs() < 1e-15);
        let rho = density_from_bloch(&ps.state).unwrap();
        assert!(max_abs(&(d.projector(0) - rho)) < 1e-15);
    }

    #[test]
    fn diagonal_state_uses_basis_vectors() {
        let r = reference_rates();
        let ps = PhaseState::evolve(0.0, 0.0, &r, 10.0, 0.2).unwrap();
        let d = spectral(&ps, &r, 10.0);
        assert_relative_eq!(d.psi[0][0].norm(), 1.0, max_relative = 1e-15);
        assert_relative_eq!(d.psi[1][1].norm(), 1.0, max_relative = 1e-15);
        let rho = density_from_bloch(&ps.state).unwrap();
        assert!(rho[(0, 1)].norm() == 0.0);
    }

    #[test]
    fn maximally_mixed_is_flagged() {
        let r = DecayRates::new(1.0, 1.0, 0.0).unwrap();
        let ps = PhaseState::evolve(FRAC_PI_2, 0.0, &r, 1.0, 40.0).unwrap();
        let d = spectral(&ps, &r, 1.0);
        assert!(d.degenerate);
        let drho = dphi_rho(FRAC_PI_2, 0.0, &r, 1.0, 40.0, DerivativeMode::Analytic).unwrap();
        assert!(qfi_general(&d, &drho) < 1e-30);
    }

    #[test]
    fn pure_state_qfi_is_sin_squared() {
        let rates = DecayRates::zero();
        for theta in [0.3, FRAC_PI_4, FRAC_PI_2, 2.5] {
            let ps = PhaseState::evolve(theta, 0.7, &rates, 1.0, 0.0).unwrap();
            let d = spectral(&ps, &rates, 1.0);
            let drho = dphi_rho(theta, 0.7, &rates, 1.0, 0.0, DerivativeMode::Analytic).unwrap();
            // textbook pure-state value 4(<dpsi|dpsi> - |<psi|dpsi>|^2)
            let s2 = (0.5 * theta).sin().powi(2);
            let textbook = 4.0 * (s2 - s2 * s2);
            assert_relative_eq!(qfi_general(&d, &drho), textbook, max_relative = 1e-12);
            assert_relative_eq!(textbook, theta.sin().powi(2), max_relative = 1e-12);
        }
    }

    #[test]
    fn no_dependence_no_information() {
        let ps = PhaseState::evolve(1.0, 0.0, &reference_rates(), 10.0, 0.3).unwrap();
        let d = spectral(&ps, &reference_rates(), 10.0);
        assert_eq!(qfi_general(&d, &DensityMatrix::zeros()), 0.0);
    }

    #[test]
    fn reference_evolved_qfi() {
        let rec = qfi_record(FRAC_PI_2, 0.0, &reference_rates(), 10.0, 0.1, 1).unwrap();
        let h2 = (-(10.0 / PI + 2.0 / (PI * PI)) * 0.1).exp();
        assert_relative_eq!(rec.qfi, h2, max_relative = 1e-12);
        assert_relative_eq!(rec.qfi, 0.71279, max_relative = 1e-4);
        assert_relative_eq!(rec.crb.unwrap(), 1.0 / h2.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn derivative_properties() {
        let r = reference_rates();
        let (theta, phi, tau) = (1.2, 0.4, 0.3);
        let ps = PhaseState::evolve(theta, phi, &r, 10.0, tau).unwrap();
        let h = ps.coherence(&r);
        let (sin, cos) = (10.0 * tau + phi).sin_cos();
        let b = [h * cos, h * sin, ps.state.bz];
        let db = [-h * sin, h * cos, 0.0];
        let dot: f64 = b.iter().zip(&db).map(|(x, y)| x * y).sum();
        assert_eq!(dot, 0.0);

        let an = dphi_rho(theta, phi, &r, 10.0, tau, DerivativeMode::Analytic).unwrap();
        let fd = dphi_rho(theta, phi, &r, 10.0, tau, DerivativeMode::FiniteDifference).unwrap();
        assert!(max_abs(&(an - fd)) < 1e-5);
        assert!(max_abs(&(an - an.adjoint())) == 0.0);
        assert_eq!(an.trace(), c(0.0, 0.0));

        let flat = dphi_rho(0.0, phi, &r, 10.0, tau, DerivativeMode::Analytic).unwrap();
        assert_eq!(max_abs(&flat), 0.0);
    }

    #[test]
    fn closed_form_examples() {
        let r = reference_rates();
        assert_relative_eq!(qfi_closed_form(1.0, &r, 0.0), 1.0_f64.sin().powi(2));
        assert_eq!(qfi_closed_form(FRAC_PI_2, &r, 0.0), 1.0);
        assert_eq!(
            qfi_closed_form(1.0, &DecayRates::zero(), 7.0),
            1.0_f64.sin().powi(2)
        );
        let d = DetectorParams::new(10.0, 1.0, 1.0).unwrap();
        let b = BoundaryConfig::mirrors(1e-4, 0.1 * PI).unwrap();
        let near = decay_rates(&d, &b, GammaZConvention::Eq7).unwrap();
        assert!(qfi_closed_form(FRAC_PI_2, &near, 0.05) > 0.999_999);
    }

    #[test]
    fn eq22_form_at_origin_and_convention_match() {
        let d = DetectorParams::new(10.0, 1.0, 1.0).unwrap();
        let b = BoundaryConfig::mirrors(0.4, 0.1 * PI).unwrap();
        assert_eq!(qfi_max_eq22(&d, &b, 0.0).unwrap(), 1.0);
        let r22 = decay_rates(&d, &b, GammaZConvention::Eq22).unwrap();
        for tau in [0.1, 0.4, 1.0] {
            assert_relative_eq!(
                qfi_max_eq22(&d, &b, tau).unwrap(),
                qfi_closed_form(FRAC_PI_2, &r22, tau),
                max_relative = 1e-10
            );
        }
    }

    #[test]
    fn cramer_rao_examples() {
        assert_eq!(cramer_rao(1.0, 1).unwrap(), 1.0);
        assert_relative_eq!(cramer_rao(1.0, 100).unwrap(), 0.1, max_relative = 1e-15);
        assert_relative_eq!(
            cramer_rao(0.71277, 1).unwrap(),
            1.18447,
            max_relative = 1e-5
        );
        assert_eq!(cramer_rao(0.0, 5), Err(Error::UnboundedEstimate));
        assert!(cramer_rao(1.0, 0).is_err());
    }

    #[test]
    fn zero_qfi_record_has_no_bound() {
        let rec = qfi_record(0.0, 0.0, &reference_rates(), 10.0, 0.5, 10).unwrap();
        assert_eq!(rec.qfi, 0.0);
        assert_eq!(rec.crb, None);
    }

    #[test]
    fn rejects_bad_angles() {
        let r = reference_rates();
        assert!(PhaseState::evolve(-0.1, 0.0, &r, 1.0, 0.0).is_err());
        assert!(PhaseState::evolve(1.0, 0.0, &r, 1.0, -1.0).is_err());
    }

    fn boundary_variants() -> [BoundaryConfig; 2] {
        [
            BoundaryConfig::Unbounded,
            BoundaryConfig::mirrors(0.4, 0.1 * PI).unwrap(),
        ]
    }

    proptest! {
        #[test]
        fn general_route_matches_closed_form_and_eigensolver(
            theta in prop::sample::select(vec![FRAC_PI_6, FRAC_PI_4, FRAC_PI_2]),
            tau in 0.0f64..1.0,
            phi in -PI..PI,
            a in 0.2f64..5.0,
        ) {
            let d = DetectorParams::new(10.0, 1.0, a).unwrap();
            for b in boundary_variants() {
                let r = decay_rates(&d, &b, GammaZConvention::Eq7).unwrap();
                let rec = qfi_record(theta, phi, &r, 10.0, tau, 1).unwrap();
                prop_assert!((rec.qfi - rec.qfi_closed).abs() <= 1e-8 * rec.qfi.max(1e-15));
                prop_assert!(rec.qfi >= 0.0 && rec.qfi <= 1.0 + 1e-12);

                let ps = PhaseState::evolve(theta, phi, &r, 10.0, tau).unwrap();
                let closed = spectral(&ps, &r, 10.0);
                let generic = spectral_generic(&density_from_bloch(&ps.state).unwrap());
                for i in 0..2 {
                    prop_assert!((closed.p[i] - generic.p[i]).abs() <= 1e-12);
                    prop_assert!(max_abs(&(closed.projector(i) - generic.projector(i))) <= 1e-10);
                }
                let overlap = (closed.psi[0].adjoint() * closed.psi[1])[(0, 0)].norm();
                prop_assert!(overlap <= 1e-12);
                for v in &closed.psi {
                    prop_assert!((v.norm() - 1.0).abs() <= 1e-12);
                }
            }
        }

        #[test]
        fn phase_and_gap_covariance(
            phi1 in -PI..PI,
            phi2 in -PI..PI,
            tau in 0.0f64..1.0,
            offset in -0.1f64..0.1,
        ) {
            let r = reference_rates();
            let f1 = qfi_record(1.0, phi1, &r, 10.0, tau, 1).unwrap().qfi;
            let f2 = qfi_record(1.0, phi2, &r, 10.0, tau, 1).unwrap().qfi;
            let f3 = qfi_record(1.0, phi1, &r, 10.0 * (1.0 + offset), tau, 1).unwrap().qfi;
            prop_assert!((f1 - f2).abs() <= 1e-10);
            prop_assert!((f1 - f3).abs() <= 1e-10);
        }

        #[test]
        fn qfi_non_increasing(t1 in 0.0f64..1.0, dt in 0.0f64..1.0, theta in 0.1f64..3.0) {
            let r = reference_rates();
            let f1 = qfi_record(theta, 0.0, &r, 10.0, t1, 1).unwrap().qfi;
            let f2 = qfi_record(theta, 0.0, &r, 10.0, t1 + dt, 1).unwrap().qfi;
            prop_assert!(f2 <= f1 + 1e-12);
        }
    }
}
