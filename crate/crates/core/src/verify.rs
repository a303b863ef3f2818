//! Oracle cross-checks run by the `verify` command.
//!
//! Each check compares a closed form against an independent route and reports
//! the worst discrepancy against a fixed tolerance:
//!
//! 1. response closed form vs numeric Fourier transform of the Wightman function,
//! 2. analytic Bloch evolution vs RK4,
//! 3. general-route QFI vs `h^2`,
//! 4. analytic vs finite-difference `d rho / d phi`,
//! 5. the maximal-QFI bracket formula vs the rate pipeline under both
//!    dephasing conventions.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::dynamics::{
    decay_rates, evolve_analytic, evolve_numeric_oracle, generator, BlochState, DetectorParams,
    GammaZConvention, Rk4Settings,
};
use crate::error::Result;
use crate::field_response::{bracket, response, response_numeric_oracle, OracleSettings};
use crate::geometry::BoundaryConfig;
use crate::metrology::{dphi_rho, qfi_closed_form, qfi_max_eq22, qfi_record, DerivativeMode};
use crate::report::format_value;

pub const RESPONSE_TOLERANCE: f64 = 1e-3;
pub const DYNAMICS_TOLERANCE: f64 = 1e-6;
pub const QFI_TOLERANCE: f64 = 1e-8;
pub const DERIVATIVE_TOLERANCE: f64 = 1e-5;
pub const EQ22_TOLERANCE: f64 = 1e-10;

pub const CHECK_RESPONSE: &str = "response_oracle";
pub const CHECK_DYNAMICS: &str = "dynamics_rk4";
pub const CHECK_QFI: &str = "qfi_general_vs_closed";
pub const CHECK_DERIVATIVE: &str = "dphi_rho_finite_difference";
pub const CHECK_EQ22: &str = "max_qfi_formula_eq22";
pub const CHECK_EQ7_RESIDUAL: &str = "max_qfi_formula_eq7_residual";

#[derive(Debug, Clone, Default)]
pub struct VerifySettings {
    pub oracle: OracleSettings,
    pub rk4: Rk4Settings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub points: usize,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// First error raised while evaluating the check, if any.
    pub failure: Option<String>,
}

impl CheckResult {
    fn from_errors(name: &str, errors: &[f64], tolerance: f64, failure: Option<String>) -> Self {
        let max_error = errors.iter().copied().fold(0.0, f64::max);
        let all_finite = errors.iter().all(|e| e.is_finite());
        Self {
            name: name.to_string(),
            points: errors.len(),
            max_error: if all_finite { max_error } else { f64::INFINITY },
            tolerance,
            passed: failure.is_none() && all_finite && max_error <= tolerance,
            failure,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseRow {
    pub a: f64,
    pub omega: f64,
    pub boundary: BoundaryConfig,
    pub closed_form: f64,
    pub oracle: f64,
    pub rel_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
    pub response_rows: Vec<ResponseRow>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failing(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect()
    }

    pub fn write_checks_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "check,points,max_error,tolerance,status")?;
        for c in &self.checks {
            writeln!(
                out,
                "{},{},{},{},{}",
                c.name,
                c.points,
                format_value(c.max_error),
                format_value(c.tolerance),
                if c.passed { "pass" } else { "fail" }
            )?;
        }
        Ok(())
    }

    /// Columns `a,omega,R,alpha,closed_form,oracle,rel_err`; `R` and `alpha`
    /// are empty for the unbounded vacuum.
    pub fn write_response_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "a,omega,R,alpha,closed_form,oracle,rel_err")?;
        for r in &self.response_rows {
            let (rr, alpha) = match r.boundary {
                BoundaryConfig::Unbounded => (String::new(), String::new()),
                BoundaryConfig::TwoPerpendicularMirrors { r, alpha } => {
                    (format_value(r), format_value(alpha))
                }
            };
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                format_value(r.a),
                format_value(r.omega),
                rr,
                alpha,
                format_value(r.closed_form),
                format_value(r.oracle),
                format_value(r.rel_err)
            )?;
        }
        Ok(())
    }
}

fn mirrors(r: f64, alpha: f64) -> BoundaryConfig {
    BoundaryConfig::TwoPerpendicularMirrors { r, alpha }
}

/// `(a, omega, boundary)` points of the response comparison.
pub fn response_grid() -> Vec<(f64, f64, BoundaryConfig)> {
    let free = BoundaryConfig::Unbounded;
    vec![
        (1.0, 10.0, free),
        (1.0, 1.0, free),
        (2.0, 1.0, free),
        (0.5, 2.0, free),
        (1.0, 0.0, free),
        (2.0, -1.0, free),
        (1.0, -0.5, free),
        (5.0, 3.0, free),
        (1.0, 10.0, mirrors(0.1, 0.1 * PI)),
        (1.0, 10.0, mirrors(0.4, 0.25 * PI)),
        (1.0, 10.0, mirrors(0.4, 0.1 * PI)),
        (2.0, 10.0, mirrors(0.4, 0.1 * PI)),
        (1.0, 10.0, mirrors(100.0, 0.1 * PI)),
        (1.0, 1.0, mirrors(0.5, 0.3)),
        (2.0, 1.0, mirrors(1.0, 0.2 * PI)),
        (0.5, 2.0, mirrors(0.8, 0.4 * PI)),
        (1.0, 0.0, mirrors(0.4, 0.1 * PI)),
        (1.0, 5.0, mirrors(0.2, 0.3 * PI)),
        (3.0, 2.0, mirrors(0.3, 0.15 * PI)),
        (1.0, -1.0, mirrors(0.5, 0.25 * PI)),
        (4.0, -2.0, mirrors(0.5, 0.1 * PI)),
        (1.0, 20.0, mirrors(0.3, 0.2 * PI)),
    ]
}

/// Parameter sets shared by the dynamics, QFI and derivative checks.
pub fn scenario_grid() -> Vec<(DetectorParams, BoundaryConfig)> {
    let d = |a: f64| DetectorParams {
        omega0: 10.0,
        lambda: 1.0,
        a,
    };
    vec![
        (d(1.0), BoundaryConfig::Unbounded),
        (d(2.0), BoundaryConfig::Unbounded),
        (d(1.0), mirrors(0.1, 0.1 * PI)),
        (d(1.0), mirrors(0.4, 0.1 * PI)),
        (d(4.0), mirrors(0.4, 0.3 * PI)),
    ]
}

/// `n` uniform points on `[from, to]` inclusive.
pub fn linspace(from: f64, to: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| from + (to - from) * k as f64 / (n - 1) as f64)
        .collect()
}

pub fn check_response(settings: &OracleSettings) -> (CheckResult, Vec<ResponseRow>) {
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    let mut failure = None;
    for (a, omega, b) in response_grid() {
        let outcome = response(a, &b, omega).and_then(|closed| {
            Ok((
                closed.value,
                response_numeric_oracle(a, &b, omega, settings)?,
            ))
        });
        match outcome {
            Ok((closed, est)) => {
                let rel_err = (closed - est.value).abs() / closed.abs();
                errors.push(rel_err);
                rows.push(ResponseRow {
                    a,
                    omega,
                    boundary: b,
                    closed_form: closed,
                    oracle: est.value,
                    rel_err,
                });
            }
            Err(e) => {
                errors.push(f64::INFINITY);
                failure.get_or_insert_with(|| format!("a={a}, omega={omega}: {e}"));
            }
        }
    }
    (
        CheckResult::from_errors(CHECK_RESPONSE, &errors, RESPONSE_TOLERANCE, failure),
        rows,
    )
}

fn collect_check(
    name: &str,
    tolerance: f64,
    mut point: impl FnMut(DetectorParams, BoundaryConfig, f64, f64) -> Result<f64>,
) -> CheckResult {
    let mut errors = Vec::new();
    let mut failure = None;
    for (d, b) in scenario_grid() {
        for theta in linspace(0.0, PI, 10) {
            for tau in linspace(0.0, 1.0, 10) {
                match point(d, b, theta, tau) {
                    Ok(e) => errors.push(e),
                    Err(e) => {
                        errors.push(f64::INFINITY);
                        failure.get_or_insert_with(|| e.to_string());
                    }
                }
            }
        }
    }
    CheckResult::from_errors(name, &errors, tolerance, failure)
}

pub fn check_dynamics(rk4: &Rk4Settings) -> CheckResult {
    collect_check(CHECK_DYNAMICS, DYNAMICS_TOLERANCE, |d, b, theta, tau| {
        let rates = decay_rates(&d, &b, GammaZConvention::Eq7)?;
        let s0 = BlochState::from_angles(theta, 0.3);
        let exact = evolve_analytic(&s0, &rates, d.omega0, tau);
        let numeric = evolve_numeric_oracle(&s0, &generator(&rates, d.omega0), tau, rk4)?;
        Ok(exact
            .as_array()
            .iter()
            .zip(numeric.as_array())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max))
    })
}

pub fn check_qfi() -> CheckResult {
    collect_check(CHECK_QFI, QFI_TOLERANCE, |d, b, theta, tau| {
        let rates = decay_rates(&d, &b, GammaZConvention::Eq7)?;
        let rec = qfi_record(theta, 0.3, &rates, d.omega0, tau, 1)?;
        Ok((rec.qfi - rec.qfi_closed).abs() / rec.qfi.max(1e-15))
    })
}

pub fn check_derivative() -> CheckResult {
    collect_check(
        CHECK_DERIVATIVE,
        DERIVATIVE_TOLERANCE,
        |d, b, theta, tau| {
            let rates = decay_rates(&d, &b, GammaZConvention::Eq7)?;
            let an = dphi_rho(theta, 0.3, &rates, d.omega0, tau, DerivativeMode::Analytic)?;
            let fd = dphi_rho(
                theta,
                0.3,
                &rates,
                d.omega0,
                tau,
                DerivativeMode::FiniteDifference,
            )?;
            Ok((an - fd).iter().map(|z| z.norm()).fold(0.0, f64::max))
        },
    )
}

fn eq22_grid() -> Vec<(DetectorParams, BoundaryConfig, f64)> {
    let mut grid = Vec::new();
    let d = |a: f64| DetectorParams {
        omega0: 10.0,
        lambda: 1.0,
        a,
    };
    for tau in [0.1, 0.4, 1.0] {
        for a in [0.5, 1.0, 2.0, 4.0] {
            grid.push((d(a), mirrors(0.1, 0.1 * PI), tau));
        }
        for r in [0.001, 0.05, 0.2, 0.4, 100.0] {
            grid.push((d(1.0), mirrors(r, 0.1 * PI), tau));
        }
        for alpha in [0.05 * PI, 0.25 * PI, 0.4 * PI] {
            grid.push((d(1.0), mirrors(0.4, alpha), tau));
        }
        grid.push((d(1.0), BoundaryConfig::Unbounded, tau));
    }
    grid
}

/// Under `eq22` the bracket formula must equal the pipeline; under `eq7` the
/// log-ratio must equal the extra dephasing exponent `-lambda^2 a tau B0 / pi^2`.
pub fn check_eq22() -> [CheckResult; 2] {
    let mut same = Vec::new();
    let mut residual = Vec::new();
    let mut failure = None;
    for (d, b, tau) in eq22_grid() {
        let outcome = (|| -> Result<(f64, f64)> {
            let formula = qfi_max_eq22(&d, &b, tau)?;
            let f22 = qfi_closed_form(
                FRAC_PI_2,
                &decay_rates(&d, &b, GammaZConvention::Eq22)?,
                tau,
            );
            let pipeline22 = qfi_record(
                FRAC_PI_2,
                0.0,
                &decay_rates(&d, &b, GammaZConvention::Eq22)?,
                d.omega0,
                tau,
                1,
            )?
            .qfi;
            let pipeline7 = qfi_record(
                FRAC_PI_2,
                0.0,
                &decay_rates(&d, &b, GammaZConvention::Eq7)?,
                d.omega0,
                tau,
                1,
            )?
            .qfi;
            let predicted = -d.lambda * d.lambda * d.a * tau / (PI * PI) * bracket(0.0, d.a, &b);
            let e1 = ((pipeline22 / formula) - 1.0)
                .abs()
                .max(((f22 / formula) - 1.0).abs());
            let e2 = ((pipeline7.ln() - formula.ln()) - predicted).abs() / predicted.abs().max(1.0);
            Ok((e1, e2))
        })();
        match outcome {
            Ok((e1, e2)) => {
                same.push(e1);
                residual.push(e2);
            }
            Err(e) => {
                same.push(f64::INFINITY);
                residual.push(f64::INFINITY);
                failure.get_or_insert_with(|| e.to_string());
            }
        }
    }
    [
        CheckResult::from_errors(CHECK_EQ22, &same, EQ22_TOLERANCE, failure.clone()),
        CheckResult::from_errors(CHECK_EQ7_RESIDUAL, &residual, EQ22_TOLERANCE, failure),
    ]
}

pub fn run_verification(settings: &VerifySettings) -> VerifyReport {
    let (response_check, response_rows) = check_response(&settings.oracle);
    let [eq22, eq7] = check_eq22();
    VerifyReport {
        checks: vec![
            response_check,
            check_dynamics(&settings.rk4),
            check_qfi(),
            check_derivative(),
            eq22,
            eq7,
        ],
        response_rows,
    }
}
