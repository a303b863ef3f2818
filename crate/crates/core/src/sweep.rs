//! Parameter sweeps and the three figure presets.
//!
//! Grid points are evaluated on a rayon pool; rows always come back in grid
//! order.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{decay_rates, DecayRates, DetectorParams, GammaZConvention};
use crate::error::{Error, Result};
use crate::geometry::BoundaryConfig;
use crate::metrology::{qfi_record, QfiRecord};

/// Everything needed to evaluate the QFI at one proper time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub detector: DetectorParams,
    pub boundary: BoundaryConfig,
    pub convention: GammaZConvention,
    /// Added to `omega0` to form the effective gap.
    pub omega_offset: f64,
    pub theta: f64,
    pub phi: f64,
    pub tau: f64,
    pub measurements: u64,
}

impl Scenario {
    pub fn new(detector: DetectorParams, boundary: BoundaryConfig) -> Self {
        Self {
            detector,
            boundary,
            convention: GammaZConvention::Eq7,
            omega_offset: 0.0,
            theta: FRAC_PI_2,
            phi: 0.0,
            tau: 0.0,
            measurements: 1,
        }
    }

    pub fn omega_eff(&self) -> f64 {
        self.detector.omega0 + self.omega_offset
    }

    pub fn rates(&self) -> Result<DecayRates> {
        decay_rates(&self.detector, &self.boundary, self.convention)
    }

    pub fn record(&self) -> Result<QfiRecord> {
        self.record_with(&self.rates()?, self.tau)
    }

    pub fn record_with(&self, rates: &DecayRates, tau: f64) -> Result<QfiRecord> {
        qfi_record(
            self.theta,
            self.phi,
            rates,
            self.omega_eff(),
            tau,
            self.measurements,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweptVar {
    A,
    #[serde(rename = "R")]
    R,
    Alpha,
    Tau,
    Theta,
}

impl SweptVar {
    pub fn name(self) -> &'static str {
        match self {
            Self::A => "a",
            Self::R => "R",
            Self::Alpha => "alpha",
            Self::Tau => "tau",
            Self::Theta => "theta",
        }
    }

    /// Returns `base` with this variable replaced by `value`.
    pub fn apply(self, base: &Scenario, value: f64) -> Result<Scenario> {
        let mut s = *base;
        match self {
            Self::A => {
                s.detector = DetectorParams::new(s.detector.omega0, s.detector.lambda, value)?
            }
            Self::R | Self::Alpha => {
                let BoundaryConfig::TwoPerpendicularMirrors { r, alpha } = s.boundary else {
                    return Err(Error::NoImages);
                };
                s.boundary = if self == Self::R {
                    BoundaryConfig::mirrors(value, alpha)?
                } else {
                    BoundaryConfig::mirrors(r, value)?
                };
            }
            Self::Tau => s.tau = value,
            Self::Theta => s.theta = value,
        }
        Ok(s)
    }
}

impl fmt::Display for SweptVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweptVar {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "a" => Ok(Self::A),
            "R" | "r" => Ok(Self::R),
            "alpha" => Ok(Self::Alpha),
            "tau" => Ok(Self::Tau),
            "theta" => Ok(Self::Theta),
            other => Err(format!(
                "cannot sweep `{other}` (expected a, R, alpha, tau or theta)"
            )),
        }
    }
}

/// Uniform grid including both endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub from: f64,
    pub to: f64,
    pub points: usize,
}

impl Grid {
    pub fn new(from: f64, to: f64, points: usize) -> Result<Self> {
        let g = Self { from, to, points };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.from.is_finite() && self.to.is_finite() && self.from < self.to) {
            return Err(Error::InvalidParameter {
                name: "grid",
                value: self.to,
                reason: "need finite bounds with from < to",
            });
        }
        if self.points < 2 {
            return Err(Error::InvalidParameter {
                name: "points",
                value: self.points as f64,
                reason: "need at least two grid points",
            });
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let last = self.points - 1;
        (0..self.points)
            .map(|k| {
                if k == last {
                    self.to
                } else {
                    self.from + (self.to - self.from) * k as f64 / last as f64
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub swept: SweptVar,
    pub grid: Grid,
    pub fixed: Scenario,
}

/// Rectangular numeric output with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }
}

pub const SWEEP_COLUMNS: [&str; 6] = ["bx", "by", "bz", "norm_b", "qfi", "qfi_closed"];

pub fn run_sweep(spec: &SweepSpec) -> Result<Table> {
    spec.grid.validate()?;
    let rows = spec
        .grid
        .values()
        .into_par_iter()
        .map(|v| {
            let s = spec.swept.apply(&spec.fixed, v)?;
            let rec = s.record()?;
            let b = rec.state;
            Ok(vec![v, b.bx, b.by, b.bz, b.norm(), rec.qfi, rec.qfi_closed])
        })
        .collect::<Result<Vec<_>>>()?;
    let mut header = vec![spec.swept.name().to_string()];
    header.extend(SWEEP_COLUMNS.iter().map(|c| c.to_string()));
    Ok(Table { header, rows })
}

/// Column layout of [`run_evolve`].
pub const EVOLVE_HEADER: [&str; 6] = ["tau", "bx", "by", "bz", "norm_b", "qfi"];

/// Trajectory of the Bloch vector and the general-route QFI over a proper-time grid.
pub fn run_evolve(scenario: &Scenario, taus: &Grid) -> Result<Table> {
    taus.validate()?;
    if taus.from < 0.0 {
        return Err(Error::InvalidParameter {
            name: "tau",
            value: taus.from,
            reason: "proper time must be non-negative",
        });
    }
    let rates = scenario.rates()?;
    let rows = taus
        .values()
        .into_par_iter()
        .map(|tau| {
            let rec = scenario.record_with(&rates, tau)?;
            let b = rec.state;
            Ok(vec![tau, b.bx, b.by, b.bz, b.norm(), rec.qfi])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Table {
        header: EVOLVE_HEADER.iter().map(|c| c.to_string()).collect(),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// QFI against proper time for several accelerations.
    Fig2,
    /// QFI against proper time for several mirror distances.
    Fig3,
    /// QFI against the angular position between the mirrors.
    Fig4,
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Fig2 => "fig2",
            Self::Fig3 => "fig3",
            Self::Fig4 => "fig4",
        })
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "fig2" => Ok(Self::Fig2),
            "fig3" => Ok(Self::Fig3),
            "fig4" => Ok(Self::Fig4),
            other => Err(format!(
                "unknown preset `{other}` (expected fig2, fig3 or fig4)"
            )),
        }
    }
}

/// Resolved preset: the base scenario, the row grid and (for fig2/fig3) the
/// values of the per-column parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PresetRun {
    pub preset: Preset,
    pub base: Scenario,
    pub rows: Grid,
    pub columns: Vec<f64>,
}

pub const FIG2_ACCELERATIONS: [f64; 4] = [0.5, 1.0, 2.0, 4.0];
pub const FIG3_DISTANCES: [f64; 6] = [0.001, 0.05, 0.1, 0.2, 0.4, 100.0];

impl Preset {
    /// Caption parameters with the artifact's default grids.
    pub fn default_run(self, convention: GammaZConvention) -> PresetRun {
        let (a, r, alpha, tau) = match self {
            Self::Fig2 => (1.0, 0.1, 0.1 * PI, 0.0),
            Self::Fig3 => (1.0, 0.1, 0.1 * PI, 0.0),
            Self::Fig4 => (1.0, 0.4, 0.25 * PI, 0.4),
        };
        let mut base = Scenario::new(
            DetectorParams {
                omega0: 10.0,
                lambda: 1.0,
                a,
            },
            BoundaryConfig::TwoPerpendicularMirrors { r, alpha },
        );
        base.convention = convention;
        base.tau = tau;
        let tau_grid = Grid {
            from: 0.0,
            to: 1.0,
            points: 101,
        };
        match self {
            Self::Fig2 => PresetRun {
                preset: self,
                base,
                rows: tau_grid,
                columns: FIG2_ACCELERATIONS.to_vec(),
            },
            Self::Fig3 => PresetRun {
                preset: self,
                base,
                rows: tau_grid,
                columns: FIG3_DISTANCES.to_vec(),
            },
            Self::Fig4 => PresetRun {
                preset: self,
                base,
                rows: Grid {
                    from: 0.01 * PI,
                    to: 0.49 * PI,
                    points: 49,
                },
                columns: Vec::new(),
            },
        }
    }

    pub fn column_var(self) -> Option<SweptVar> {
        match self {
            Self::Fig2 => Some(SweptVar::A),
            Self::Fig3 => Some(SweptVar::R),
            Self::Fig4 => None,
        }
    }

    pub fn row_var(self) -> SweptVar {
        match self {
            Self::Fig2 | Self::Fig3 => SweptVar::Tau,
            Self::Fig4 => SweptVar::Alpha,
        }
    }
}

/// Header label for a preset column, e.g. `a=0.5`.
pub fn column_label(var: SweptVar, value: f64) -> String {
    format!("{}={}", var.name(), value)
}

/// Evaluates a preset: maximal QFI (`theta = pi/2`) by the general route.
pub fn run_preset(run: &PresetRun) -> Result<Table> {
    run.rows.validate()?;
    let row_var = run.preset.row_var();
    let rows_values = run.rows.values();
    match run.preset.column_var() {
        None => {
            let rows = rows_values
                .into_par_iter()
                .map(|v| {
                    let s = row_var.apply(&run.base, v)?;
                    Ok(vec![v, s.record()?.qfi])
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Table {
                header: vec![row_var.name().to_string(), "qfi".to_string()],
                rows,
            })
        }
        Some(col_var) => {
            if run.columns.is_empty() {
                return Err(Error::InvalidParameter {
                    name: "columns",
                    value: 0.0,
                    reason: "preset needs at least one column value",
                });
            }
            let setups = run
                .columns
                .iter()
                .map(|&c| {
                    let s = col_var.apply(&run.base, c)?;
                    Ok((s, s.rates()?))
                })
                .collect::<Result<Vec<_>>>()?;
            let rows = rows_values
                .into_par_iter()
                .map(|tau| {
                    let mut row = vec![tau];
                    for (s, rates) in &setups {
                        row.push(s.record_with(rates, tau)?.qfi);
                    }
                    Ok(row)
                })
                .collect::<Result<Vec<_>>>()?;
            let mut header = vec![row_var.name().to_string()];
            header.extend(run.columns.iter().map(|&c| column_label(col_var, c)));
            Ok(Table { header, rows })
        }
    }
}

/// Runs `job` on a dedicated pool of `workers` threads (rayon's global pool when `None`).
pub fn with_workers<T: Send>(workers: Option<usize>, job: impl FnOnce() -> T + Send) -> T {
    match workers.and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()) {
        Some(pool) => pool.install(job),
        None => job(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn grid_is_endpoint_inclusive() {
        let g = Grid::new(0.0, 1.0, 11).unwrap();
        let v = g.values();
        assert_eq!(v.len(), 11);
        assert_eq!(v[0], 0.0);
        assert_eq!(v[10], 1.0);
        assert_relative_eq!(v[3], 0.3, max_relative = 1e-15);
        assert!(Grid::new(1.0, 0.0, 5).is_err());
        assert!(Grid::new(0.0, 1.0, 1).is_err());
    }

    #[test]
    fn presets_match_captions() {
        let f2 = Preset::Fig2.default_run(GammaZConvention::Eq7);
        assert_eq!(
            f2.base.boundary,
            BoundaryConfig::TwoPerpendicularMirrors {
                r: 0.1,
                alpha: 0.1 * PI
            }
        );
        assert_eq!(
            (f2.base.detector.omega0, f2.base.detector.lambda),
            (10.0, 1.0)
        );
        let f3 = Preset::Fig3.default_run(GammaZConvention::Eq7);
        assert_eq!(f3.base.detector.a, 1.0);
        let f4 = Preset::Fig4.default_run(GammaZConvention::Eq7);
        assert_eq!(f4.base.tau, 0.4);
        assert_eq!(
            f4.base.detector,
            DetectorParams {
                omega0: 10.0,
                lambda: 1.0,
                a: 1.0
            }
        );
        assert!(
            matches!(f4.base.boundary, BoundaryConfig::TwoPerpendicularMirrors { r, .. } if r == 0.4)
        );
    }

    #[test]
    fn sweeping_mirror_parameters_needs_mirrors() {
        let s = Scenario::new(
            DetectorParams::new(10.0, 1.0, 1.0).unwrap(),
            BoundaryConfig::Unbounded,
        );
        assert_eq!(SweptVar::R.apply(&s, 0.3), Err(Error::NoImages));
        assert!(SweptVar::A.apply(&s, 2.0).is_ok());
    }

    #[test]
    fn sweep_table_layout() {
        let mut base = Scenario::new(
            DetectorParams::new(10.0, 1.0, 1.0).unwrap(),
            BoundaryConfig::mirrors(0.4, 0.3).unwrap(),
        );
        base.tau = 0.2;
        let spec = SweepSpec {
            swept: SweptVar::Theta,
            grid: Grid::new(0.0, PI, 5).unwrap(),
            fixed: base,
        };
        let t = run_sweep(&spec).unwrap();
        assert_eq!(
            t.header,
            ["theta", "bx", "by", "bz", "norm_b", "qfi", "qfi_closed"]
        );
        assert_eq!(t.rows.len(), 5);
        assert_eq!(t.rows[0][5], 0.0);
    }

    #[test]
    fn evolve_starts_from_initial_information() {
        let mut s = Scenario::new(
            DetectorParams::new(10.0, 1.0, 1.0).unwrap(),
            BoundaryConfig::Unbounded,
        );
        s.theta = 1.0;
        let t = run_evolve(&s, &Grid::new(0.0, 1.0, 21).unwrap()).unwrap();
        assert_eq!(t.rows[0][0], 0.0);
        assert_relative_eq!(t.rows[0][5], 1.0_f64.sin().powi(2), max_relative = 1e-14);
        let qfi = t.column("qfi").unwrap();
        assert!(qfi.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn worker_pool_keeps_order() {
        let run = Preset::Fig3.default_run(GammaZConvention::Eq7);
        let a = with_workers(Some(1), || run_preset(&run)).unwrap();
        let b = with_workers(Some(4), || run_preset(&run)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.header[1], "R=0.001");
    }
}
