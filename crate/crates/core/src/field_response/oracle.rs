//! Numeric Fourier transform of the regularized Wightman function.
//!
//! For each regulator in a decreasing schedule the transform is integrated on
//! the real line by adaptive quadrature; the sequence is then extrapolated to
//! a vanishing regulator with Neville's scheme. The real part of the
//! integrand is even in `s`, so only `[0, window]` is integrated.

use std::cell::RefCell;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::quadrature::{integrate, QuadSettings};
use super::{wightman, WightmanParams};
use crate::error::{Error, Result};
use crate::geometry::{check_acceleration, BoundaryConfig};

const TRUNCATION_LIMIT: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct OracleSettings {
    /// Integration half-width; derived from `a` and the mirror distance when absent.
    pub window: Option<f64>,
    /// Strictly decreasing regulators; derived from `omega / a` when absent.
    pub epsilon_schedule: Option<Vec<f64>>,
    pub quad: QuadSettings,
    /// Largest accepted relative change between the last two extrapolants.
    pub tolerance: f64,
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self {
            window: None,
            epsilon_schedule: None,
            quad: QuadSettings::default(),
            tolerance: 1e-5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleEstimate {
    pub value: f64,
    /// `(epsilon, integral)` before extrapolation.
    pub samples: Vec<(f64, f64)>,
    /// Difference between the two highest-order extrapolants.
    pub change: f64,
    pub window: f64,
}

pub fn default_window(a: f64, boundary: &BoundaryConfig) -> f64 {
    let reach = match boundary.image_distances() {
        Ok([_, _, r]) => 2.0 * (a * r).asinh(),
        Err(_) => 0.0,
    };
    (30.0 + reach) / a
}

/// Five halvings starting at `0.125 min(1, a/|omega|)`, which keeps the
/// exponent `2 |omega| epsilon / a` of the regulator bias at or below 0.25.
pub fn default_epsilon_schedule(a: f64, omega: f64) -> Vec<f64> {
    let start = 0.125 * (a / omega.abs()).min(1.0);
    (0..5).map(|k| start / f64::from(1u32 << k)).collect()
}

/// Extrapolates `(x, y)` samples to `x = 0`; returns the final estimate and
/// its difference from the previous diagonal entry.
pub fn neville_to_zero(samples: &[(f64, f64)]) -> (f64, f64) {
    let n = samples.len();
    let mut table: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let mut diagonal = vec![table[0]];
    for j in 1..n {
        for i in (j..n).rev() {
            let xi = samples[i].0;
            let xl = samples[i - j].0;
            table[i] = table[i] + (table[i] - table[i - 1]) * xi / (xl - xi);
        }
        diagonal.push(table[j]);
    }
    let last = diagonal[n - 1];
    let change = if n > 1 {
        (last - diagonal[n - 2]).abs()
    } else {
        f64::INFINITY
    };
    (last, change)
}

fn validate_schedule(schedule: &[f64]) -> Result<()> {
    if schedule.len() < 2 {
        return Err(Error::InvalidParameter {
            name: "epsilon_schedule",
            value: schedule.len() as f64,
            reason: "need at least two regulators to extrapolate",
        });
    }
    for w in schedule.windows(2) {
        if !(w[1] < w[0]) {
            return Err(Error::InvalidParameter {
                name: "epsilon_schedule",
                value: w[1],
                reason: "regulators must be strictly decreasing",
            });
        }
    }
    Ok(())
}

/// Numerically integrates `exp(i omega s) G+(s)` and extrapolates the
/// regulator to zero.
pub fn response_numeric_oracle(
    a: f64,
    boundary: &BoundaryConfig,
    omega: f64,
    settings: &OracleSettings,
) -> Result<OracleEstimate> {
    check_acceleration(a)?;
    boundary.validate()?;
    let window = settings
        .window
        .unwrap_or_else(|| default_window(a, boundary));
    if !((-a * window).exp() < TRUNCATION_LIMIT) {
        return Err(Error::InvalidParameter {
            name: "window",
            value: window,
            reason: "exp(-a * window) must be below 1e-12",
        });
    }
    let schedule = settings
        .epsilon_schedule
        .clone()
        .unwrap_or_else(|| default_epsilon_schedule(a, omega));
    validate_schedule(&schedule)?;

    let mut breakpoints = vec![0.0, window];
    if let Ok(distances) = boundary.image_distances() {
        breakpoints.extend(
            distances
                .iter()
                .map(|r| 2.0 * (a * r).asinh() / a)
                .filter(|s| *s < window),
        );
    }
    let mut panel = 2.0 / a;
    if omega != 0.0 {
        panel = panel.min(std::f64::consts::PI / omega.abs());
    }
    let panels = (window / panel).ceil() as usize;
    breakpoints.extend((1..panels).map(|k| k as f64 * window / panels as f64));
    breakpoints.sort_by(f64::total_cmp);
    breakpoints.dedup();

    let mut samples = Vec::with_capacity(schedule.len());
    for &epsilon in &schedule {
        let p = WightmanParams::new(a, *boundary, epsilon)?;
        let fault = RefCell::new(None);
        let integrand = |s: f64| match wightman(&p, s) {
            Ok(g) => 2.0 * (Complex64::from_polar(1.0, omega * s) * g).re,
            Err(e) => {
                fault.borrow_mut().get_or_insert(e);
                0.0
            }
        };
        let value = integrate(integrand, &breakpoints, &settings.quad)?;
        if let Some(e) = fault.into_inner() {
            return Err(e);
        }
        samples.push((epsilon, value));
    }

    let (value, change) = neville_to_zero(&samples);
    let scale = value.abs().max(1e-9 * (a + omega.abs()));
    if !(change <= settings.tolerance * scale) {
        return Err(Error::NonConvergence {
            what: "regulator extrapolation",
            change,
            tolerance: settings.tolerance * scale,
        });
    }
    Ok(OracleEstimate {
        value,
        samples,
        change,
        window,
    })
}
