//! Lindblad decay rates and Bloch-vector evolution of the detector.
//!
//! In the Bloch representation the master equation is the affine ODE
//! `dB/dtau = U B + v`; transverse components rotate at the effective gap and
//! decay at `(g+ + g- + 4 gz)/2`, while `Bz` relaxes at `g+ + g-` towards
//! `(g+ - g-)/(g+ + g-)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field_response::{response, ResponseValue};
use crate::geometry::{check_acceleration, BoundaryConfig};

/// Coupling-to-gap ratio above which the weak-coupling assumption is flagged.
pub const WEAK_COUPLING_LIMIT: f64 = 0.2;

/// Slack allowed on `|B| <= 1` for rounding.
pub const BLOCH_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorParams {
    pub omega0: f64,
    pub lambda: f64,
    pub a: f64,
}

impl DetectorParams {
    pub fn new(omega0: f64, lambda: f64, a: f64) -> Result<Self> {
        let p = Self { omega0, lambda, a };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [("omega0", self.omega0), ("lambda", self.lambda)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be finite and positive",
                });
            }
            if !(value * value).is_finite() {
                return Err(Error::Overflow { name, value });
            }
        }
        check_acceleration(self.a)
    }

    /// False when `lambda / omega0` exceeds [`WEAK_COUPLING_LIMIT`].
    pub fn is_weak_coupling(&self) -> bool {
        self.lambda / self.omega0 <= WEAK_COUPLING_LIMIT
    }
}

/// How the dephasing rate is obtained from `G(0)`: `Eq7` uses `gz = 2 lambda^2 G(0)`,
/// `Eq22` halves it, which is the value implied by the closed-form maximal QFI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GammaZConvention {
    #[default]
    Eq7,
    Eq22,
}

impl GammaZConvention {
    pub fn factor(self) -> f64 {
        match self {
            Self::Eq7 => 1.0,
            Self::Eq22 => 0.5,
        }
    }
}

impl fmt::Display for GammaZConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Eq7 => "eq7",
            Self::Eq22 => "eq22",
        })
    }
}

impl FromStr for GammaZConvention {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "eq7" => Ok(Self::Eq7),
            "eq22" => Ok(Self::Eq22),
            other => Err(format!(
                "unknown convention `{other}` (expected eq7 or eq22)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayRates {
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    pub gamma_z: f64,
}

impl DecayRates {
    pub fn new(gamma_plus: f64, gamma_minus: f64, gamma_z: f64) -> Result<Self> {
        for (name, value) in [
            ("gamma_plus", gamma_plus),
            ("gamma_minus", gamma_minus),
            ("gamma_z", gamma_z),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "rates must be finite and non-negative",
                });
            }
        }
        Ok(Self {
            gamma_plus,
            gamma_minus,
            gamma_z,
        })
    }

    pub fn zero() -> Self {
        Self {
            gamma_plus: 0.0,
            gamma_minus: 0.0,
            gamma_z: 0.0,
        }
    }

    /// Decay rate of the transverse Bloch components.
    pub fn transverse(&self) -> f64 {
        0.5 * (self.gamma_plus + self.gamma_minus + 4.0 * self.gamma_z)
    }

    /// Relaxation rate of `Bz`.
    pub fn longitudinal(&self) -> f64 {
        self.gamma_plus + self.gamma_minus
    }

    /// Stationary `Bz`; `None` when no population transfer happens at all.
    pub fn stationary_bz(&self) -> Option<f64> {
        let total = self.longitudinal();
        (total > 0.0).then(|| (self.gamma_plus - self.gamma_minus) / total)
    }
}

fn checked_rate(lambda: f64, g: ResponseValue, scale: f64) -> Result<f64> {
    if g.bracket < 0.0 {
        return Err(Error::NegativeRate {
            omega: g.omega,
            bracket: g.bracket,
        });
    }
    let rate = 2.0 * lambda * lambda * g.value * scale;
    if !rate.is_finite() {
        return Err(Error::Overflow {
            name: "rate",
            value: rate,
        });
    }
    Ok(rate)
}

/// Rates `g- = 2 lambda^2 G(omega0)`, `g+ = 2 lambda^2 G(-omega0)` and
/// `gz = 2 lambda^2 G(0)` (halved under [`GammaZConvention::Eq22`]).
pub fn decay_rates(
    d: &DetectorParams,
    b: &BoundaryConfig,
    convention: GammaZConvention,
) -> Result<DecayRates> {
    d.validate()?;
    let minus = checked_rate(d.lambda, response(d.a, b, d.omega0)?, 1.0)?;
    let plus = checked_rate(d.lambda, response(d.a, b, -d.omega0)?, 1.0)?;
    let z = checked_rate(d.lambda, response(d.a, b, 0.0)?, convention.factor())?;
    DecayRates::new(plus, minus, z)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochState {
    pub bx: f64,
    pub by: f64,
    pub bz: f64,
}

impl BlochState {
    pub fn new(bx: f64, by: f64, bz: f64) -> Result<Self> {
        let s = Self { bx, by, bz };
        let norm = s.norm();
        if !(norm <= 1.0 + BLOCH_SLACK) {
            return Err(Error::OutsideBlochBall { norm });
        }
        Ok(s)
    }

    /// Bloch vector of `cos(theta/2)|1> + sin(theta/2) e^{i phi}|0>`.
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Self {
            bx: st * cp,
            by: st * sp,
            bz: ct,
        }
    }

    pub fn norm(&self) -> f64 {
        self.as_array().iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn transverse_norm(&self) -> f64 {
        self.bx.hypot(self.by)
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.bx, self.by, self.bz]
    }

    pub fn from_array(b: [f64; 3]) -> Self {
        Self {
            bx: b[0],
            by: b[1],
            bz: b[2],
        }
    }
}

/// Drift matrix `U` and inhomogeneity `v` of `dB/dtau = U B + v`.
///
/// Despite appearing as a "dynamical map" matrix this is a dissipative
/// generator, not a unitary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorMatrix {
    pub drift: [[f64; 3]; 3],
    pub inhomogeneity: [f64; 3],
}

impl GeneratorMatrix {
    pub fn apply(&self, b: [f64; 3]) -> [f64; 3] {
        let mut out = self.inhomogeneity;
        for (o, row) in out.iter_mut().zip(&self.drift) {
            *o += row.iter().zip(&b).map(|(u, x)| u * x).sum::<f64>();
        }
        out
    }
}

pub fn generator(r: &DecayRates, omega_eff: f64) -> GeneratorMatrix {
    let t = -r.transverse();
    GeneratorMatrix {
        drift: [
            [t, -omega_eff, 0.0],
            [omega_eff, t, 0.0],
            [0.0, 0.0, -r.longitudinal()],
        ],
        inhomogeneity: [0.0, 0.0, r.gamma_plus - r.gamma_minus],
    }
}

/// Closed-form solution of the Bloch equation from an arbitrary initial state.
pub fn evolve_analytic(s0: &BlochState, r: &DecayRates, omega_eff: f64, tau: f64) -> BlochState {
    if tau == 0.0 {
        return *s0;
    }
    let damping = (-r.transverse() * tau).exp();
    let (sin, cos) = (omega_eff * tau).sin_cos();
    let bz = match r.stationary_bz() {
        Some(inf) => inf + (-r.longitudinal() * tau).exp() * (s0.bz - inf),
        None => s0.bz,
    };
    BlochState {
        bx: damping * (cos * s0.bx - sin * s0.by),
        by: damping * (sin * s0.bx + cos * s0.by),
        bz,
    }
}

fn rk4(g: &GeneratorMatrix, s0: [f64; 3], tau: f64, steps: usize) -> [f64; 3] {
    let h = tau / steps as f64;
    let axpy =
        |x: [f64; 3], k: [f64; 3], c: f64| [x[0] + c * k[0], x[1] + c * k[1], x[2] + c * k[2]];
    let mut b = s0;
    for _ in 0..steps {
        let k1 = g.apply(b);
        let k2 = g.apply(axpy(b, k1, 0.5 * h));
        let k3 = g.apply(axpy(b, k2, 0.5 * h));
        let k4 = g.apply(axpy(b, k3, h));
        for i in 0..3 {
            b[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    b
}

#[derive(Debug, Clone, Copy)]
pub struct Rk4Settings {
    pub initial_step: f64,
    pub tolerance: f64,
    pub max_refinements: u32,
}

impl Default for Rk4Settings {
    fn default() -> Self {
        Self {
            initial_step: 0.01,
            tolerance: 1e-9,
            max_refinements: 16,
        }
    }
}

/// Integrates the Bloch equation with classical RK4, halving the step until
/// two successive solutions agree componentwise within the tolerance.
pub fn evolve_numeric_oracle(
    s0: &BlochState,
    g: &GeneratorMatrix,
    tau: f64,
    settings: &Rk4Settings,
) -> Result<BlochState> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "tau",
            value: tau,
            reason: "proper time must be finite and non-negative",
        });
    }
    if !(settings.initial_step > 0.0) {
        return Err(Error::InvalidParameter {
            name: "step",
            value: settings.initial_step,
            reason: "step must be positive",
        });
    }
    if tau == 0.0 {
        return Ok(*s0);
    }
    let mut steps = ((tau / settings.initial_step).ceil() as usize).max(1);
    let mut previous = rk4(g, s0.as_array(), tau, steps);
    let mut change = f64::INFINITY;
    for _ in 0..settings.max_refinements {
        steps *= 2;
        let next = rk4(g, s0.as_array(), tau, steps);
        change = previous
            .iter()
            .zip(&next)
            .map(|(p, n)| (p - n).abs())
            .fold(0.0, f64::max);
        previous = next;
        if change < settings.tolerance {
            return Ok(BlochState::from_array(previous));
        }
    }
    Err(Error::NonConvergence {
        what: "RK4 step halving",
        change,
        tolerance: settings.tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn reference_rates() -> DecayRates {
        let d = DetectorParams::new(10.0, 1.0, 1.0).unwrap();
        decay_rates(&d, &BoundaryConfig::Unbounded, GammaZConvention::Eq7).unwrap()
    }

    #[test]
    fn unbounded_reference_rates() {
        let r = reference_rates();
        assert_relative_eq!(r.gamma_minus, 10.0 / PI, max_relative = 1e-14);
        assert_relative_eq!(r.gamma_minus, 3.18310, max_relative = 1e-5);
        assert!(r.gamma_plus < 1e-25);
        assert_relative_eq!(r.gamma_z, 1.0 / (2.0 * PI * PI), max_relative = 1e-14);
        assert_relative_eq!(r.gamma_z, 0.050661, max_relative = 1e-5);
    }

    #[test]
    fn eq22_convention_halves_dephasing() {
        let d = DetectorParams::new(10.0, 1.0, 1.0).unwrap();
        let r7 = decay_rates(&d, &BoundaryConfig::Unbounded, GammaZConvention::Eq7).unwrap();
        let r22 = decay_rates(&d, &BoundaryConfig::Unbounded, GammaZConvention::Eq22).unwrap();
        assert_eq!(r22.gamma_z, 0.5 * r7.gamma_z);
        assert_eq!(r22.gamma_minus, r7.gamma_minus);
        assert_eq!(
            "EQ22".parse::<GammaZConvention>().unwrap(),
            GammaZConvention::Eq22
        );
        assert!("eq9".parse::<GammaZConvention>().is_err());
    }

    #[test]
    fn infinite_temperature_limit() {
        let d = DetectorParams::new(1.0, 0.1, 1e6).unwrap();
        let r = decay_rates(&d, &BoundaryConfig::Unbounded, GammaZConvention::Eq7).unwrap();
        assert_relative_eq!(r.gamma_plus / r.gamma_minus, 1.0, max_relative = 1e-5);
    }

    #[test]
    fn mirrors_close_to_trajectory_suppress_rates() {
        let d = DetectorParams::new(10.0, 1.0, 1.0).unwrap();
        let b = BoundaryConfig::mirrors(1e-4, 0.25 * PI).unwrap();
        let r = decay_rates(&d, &b, GammaZConvention::Eq7).unwrap();
        assert!(r.gamma_minus < 1e-6 && r.gamma_plus < 1e-6 && r.gamma_z < 1e-6);
    }

    #[test]
    fn negative_bracket_is_an_error() {
        let g = ResponseValue {
            omega: 10.0,
            value: -0.1,
            bracket: -0.05,
        };
        assert_eq!(
            checked_rate(1.0, g, 1.0),
            Err(Error::NegativeRate {
                omega: 10.0,
                bracket: -0.05
            })
        );
        assert!(DecayRates::new(-1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn parameter_validation() {
        assert!(DetectorParams::new(0.0, 1.0, 1.0).is_err());
        assert!(DetectorParams::new(10.0, -1.0, 1.0).is_err());
        assert!(matches!(
            DetectorParams::new(10.0, 1.0, 1e300),
            Err(Error::Overflow { .. })
        ));
        assert!(DetectorParams::new(10.0, 1.0, 1.0)
            .unwrap()
            .is_weak_coupling());
        assert!(!DetectorParams::new(1.0, 0.5, 1.0)
            .unwrap()
            .is_weak_coupling());
    }

    #[test]
    fn closed_system_generator_is_rotation() {
        let g = generator(&DecayRates::zero(), 3.0);
        assert_eq!(
            g.drift,
            [[0.0, -3.0, 0.0], [3.0, 0.0, 0.0], [0.0, 0.0, 0.0]]
        );
        assert_eq!(g.inhomogeneity, [0.0; 3]);
    }

    #[test]
    fn pure_decay_fixed_point() {
        let r = DecayRates::new(0.0, 2.0, 0.0).unwrap();
        let g = generator(&r, 1.0);
        assert_eq!(g.apply([0.0, 0.0, -1.0]), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn reference_generator_diagonal() {
        let g = generator(&reference_rates(), 10.0);
        let transverse = 5.0 / PI + 1.0 / (PI * PI);
        assert_relative_eq!(g.drift[0][0], -transverse, max_relative = 1e-14);
        assert_relative_eq!(g.drift[1][1], -1.69287, max_relative = 1e-5);
        assert_relative_eq!(g.drift[2][2], -3.18310, max_relative = 1e-5);
        assert!(g.drift[0][1] == -g.drift[1][0]);
    }

    #[test]
    fn identity_at_zero_time() {
        let s0 = BlochState::from_angles(1.1, 0.3);
        assert_eq!(evolve_analytic(&s0, &reference_rates(), 10.0, 0.0), s0);
    }

    #[test]
    fn thermal_stationary_state() {
        let r = reference_rates();
        let tau = 100.0 / r.longitudinal();
        let s = evolve_analytic(&BlochState::from_angles(0.4, 0.0), &r, 10.0, tau);
        assert!(s.transverse_norm() < 1e-12);
        assert_relative_eq!(s.bz, -(PI * 10.0_f64).tanh(), epsilon = 1e-10);
    }

    #[test]
    fn reference_transverse_norm() {
        let r = reference_rates();
        let s = evolve_analytic(&BlochState::from_angles(FRAC_PI_2, 0.0), &r, 10.0, 0.1);
        let expected = (-(10.0 / PI + 2.0 / PI.powi(2)) * 0.1).exp();
        assert_relative_eq!(s.bx.powi(2) + s.by.powi(2), expected, max_relative = 1e-14);
        assert_relative_eq!(s.bx.powi(2) + s.by.powi(2), 0.71279, max_relative = 1e-4);
    }

    #[test]
    fn degenerate_branch_keeps_population() {
        let r = DecayRates::new(0.0, 0.0, 0.3).unwrap();
        let s = evolve_analytic(&BlochState::from_angles(0.7, 0.0), &r, 1.0, 2.0);
        assert_eq!(s.bz, 0.7_f64.cos());
    }

    #[test]
    fn rk4_conserves_norm_without_dissipation() {
        let s0 = BlochState::from_angles(0.9, 0.2);
        let g = generator(&DecayRates::zero(), 7.0);
        let s = evolve_numeric_oracle(&s0, &g, 1.0, &Rk4Settings::default()).unwrap();
        assert!((s.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rk4_stationary_point() {
        let r = reference_rates();
        let inf = BlochState::new(0.0, 0.0, r.stationary_bz().unwrap()).unwrap();
        let s = evolve_numeric_oracle(&inf, &generator(&r, 10.0), 1.0, &Rk4Settings::default())
            .unwrap();
        for (x, y) in s.as_array().iter().zip(inf.as_array()) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn rk4_refinement_limit() {
        let settings = Rk4Settings {
            initial_step: 1.0,
            max_refinements: 1,
            ..Rk4Settings::default()
        };
        let g = generator(&reference_rates(), 10.0);
        let r = evolve_numeric_oracle(&BlochState::from_angles(1.0, 0.0), &g, 1.0, &settings);
        assert!(matches!(r, Err(Error::NonConvergence { .. })));
    }

    #[test]
    fn bloch_ball_rejection() {
        assert!(BlochState::new(1.0, 0.1, 0.0).is_err());
        assert!(BlochState::new(0.6, 0.8, 0.0).is_ok());
    }

    fn arb_rates() -> impl Strategy<Value = DecayRates> {
        (0.0f64..3.0, 0.0f64..3.0, 0.0f64..1.0)
            .prop_map(|(p, m, z)| DecayRates::new(p, m, z).unwrap())
    }

    proptest! {
        #[test]
        fn semigroup(
            rates in arb_rates(),
            theta in 0.0f64..PI,
            phi in -PI..PI,
            omega in 0.0f64..20.0,
            t1 in 0.0f64..2.0,
            t2 in 0.0f64..2.0,
        ) {
            let s0 = BlochState::from_angles(theta, phi);
            let split = evolve_analytic(&evolve_analytic(&s0, &rates, omega, t1), &rates, omega, t2);
            let joint = evolve_analytic(&s0, &rates, omega, t1 + t2);
            for (x, y) in split.as_array().iter().zip(joint.as_array()) {
                prop_assert!((x - y).abs() <= 1e-10);
            }
            prop_assert!(joint.norm() <= 1.0 + BLOCH_SLACK);
        }

        #[test]
        fn longitudinal_relaxation_is_monotone(
            rates in arb_rates(),
            theta in 0.0f64..PI,
            t1 in 0.0f64..3.0,
            dt in 0.0f64..3.0,
        ) {
            prop_assume!(rates.longitudinal() > 0.0);
            let inf = rates.stationary_bz().unwrap();
            let s0 = BlochState::from_angles(theta, 0.0);
            let z1 = evolve_analytic(&s0, &rates, 1.0, t1).bz - inf;
            let z2 = evolve_analytic(&s0, &rates, 1.0, t1 + dt).bz - inf;
            prop_assert!(z1 * (theta.cos() - inf) >= 0.0);
            prop_assert!(z2.abs() <= z1.abs() + 1e-15);
        }

        #[test]
        fn transverse_norm_closed_form(
            rates in arb_rates(),
            theta in 0.0f64..PI,
            phi in -PI..PI,
            tau in 0.0f64..2.0,
        ) {
            let s = evolve_analytic(&BlochState::from_angles(theta, phi), &rates, 5.0, tau);
            let expected = (-rates.transverse() * tau).exp() * theta.sin();
            prop_assert!((s.transverse_norm() - expected).abs() <= 1e-14);
        }
    }
}
