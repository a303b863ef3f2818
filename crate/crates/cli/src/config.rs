//! Flag and config-file resolution. Precedence: flags, then the JSON config
//! file, then built-in defaults.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Deserialize;
use unruh_qfi::sweep::Scenario;
use unruh_qfi::{BoundaryConfig, DetectorParams, GammaZConvention};

pub const DEFAULT_OMEGA0: f64 = 10.0;
pub const DEFAULT_LAMBDA: f64 = 1.0;
pub const DEFAULT_A: f64 = 1.0;
pub const DEFAULT_R: f64 = 0.1;
pub const DEFAULT_ALPHA: f64 = 0.1 * PI;
pub const DEFAULT_THETA: f64 = FRAC_PI_2;
pub const DEFAULT_TAU: f64 = 0.4;

/// Parses a real number or a multiple of pi written as `0.1pi`, `pi` or `-pi`.
pub fn parse_angle(text: &str) -> Result<f64, String> {
    let t = text.trim();
    let parsed = match t.strip_suffix("pi") {
        Some(coef) => match coef.trim() {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            c => c
                .trim_end_matches('*')
                .parse::<f64>()
                .map_err(|e| e.to_string()),
        }
        .map(|c| c * PI),
        None => t.parse::<f64>().map_err(|e| e.to_string()),
    };
    parsed.map_err(|e| format!("invalid angle `{text}`: {e}"))
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum AngleValue {
    Number(f64),
    Text(String),
}

impl AngleValue {
    fn radians(&self) -> Result<f64> {
        match self {
            Self::Number(x) => Ok(*x),
            Self::Text(s) => parse_angle(s).map_err(anyhow::Error::msg),
        }
    }
}

/// JSON config file; keys mirror the flag names.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub omega0: Option<f64>,
    pub lambda: Option<f64>,
    pub a: Option<f64>,
    #[serde(rename = "R", alias = "r")]
    pub r: Option<f64>,
    pub alpha: Option<AngleValue>,
    pub theta: Option<AngleValue>,
    pub phi: Option<AngleValue>,
    pub tau: Option<f64>,
    pub unbounded: Option<bool>,
    pub convention: Option<String>,
    #[serde(rename = "omega-offset", alias = "omega_offset")]
    pub omega_offset: Option<f64>,
    pub measurements: Option<u64>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct PhysicsArgs {
    /// Bare energy gap
    #[arg(long)]
    pub omega0: Option<f64>,
    /// Coupling strength
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Proper acceleration
    #[arg(long)]
    pub a: Option<f64>,
    /// Distance to the mirrors' intersection line
    #[arg(long = "R")]
    pub r: Option<f64>,
    /// Angular position between the mirrors (radians or `0.1pi`)
    #[arg(long, value_parser = parse_angle, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    /// Polar angle of the probe state
    #[arg(long, value_parser = parse_angle, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    /// Encoded phase
    #[arg(long, value_parser = parse_angle, allow_hyphen_values = true)]
    pub phi: Option<f64>,
    /// Proper time
    #[arg(long)]
    pub tau: Option<f64>,
    /// Free vacuum without mirrors
    #[arg(long)]
    pub unbounded: bool,
    /// Dephasing-rate convention: eq7 or eq22
    #[arg(long)]
    pub convention: Option<GammaZConvention>,
    /// Shift added to omega0 to form the effective gap
    #[arg(long, allow_hyphen_values = true)]
    pub omega_offset: Option<f64>,
    /// JSON config file
    #[arg(long)]
    pub config: Option<std::path::PathBuf>,
}

impl PhysicsArgs {
    pub fn config(&self) -> Result<ConfigFile> {
        match &self.config {
            Some(p) => ConfigFile::load(p),
            None => Ok(ConfigFile::default()),
        }
    }

    /// Names of the physical parameters fixed on the command line or in the config.
    pub fn supplied(&self, cfg: &ConfigFile) -> Vec<&'static str> {
        let mut out = Vec::new();
        let mut note = |name, flag: bool, file: bool| {
            if flag || file {
                out.push(name);
            }
        };
        note("omega0", self.omega0.is_some(), cfg.omega0.is_some());
        note("lambda", self.lambda.is_some(), cfg.lambda.is_some());
        note("a", self.a.is_some(), cfg.a.is_some());
        note("R", self.r.is_some(), cfg.r.is_some());
        note("alpha", self.alpha.is_some(), cfg.alpha.is_some());
        note("theta", self.theta.is_some(), cfg.theta.is_some());
        note("phi", self.phi.is_some(), cfg.phi.is_some());
        note("tau", self.tau.is_some(), cfg.tau.is_some());
        note("unbounded", self.unbounded, cfg.unbounded.unwrap_or(false));
        out
    }

    pub fn resolve(&self, cfg: &ConfigFile) -> Result<Scenario> {
        let angle = |flag: Option<f64>, file: &Option<AngleValue>, default: f64| -> Result<f64> {
            match (flag, file) {
                (Some(x), _) => Ok(x),
                (None, Some(v)) => v.radians(),
                (None, None) => Ok(default),
            }
        };
        let detector = DetectorParams::new(
            self.omega0.or(cfg.omega0).unwrap_or(DEFAULT_OMEGA0),
            self.lambda.or(cfg.lambda).unwrap_or(DEFAULT_LAMBDA),
            self.a.or(cfg.a).unwrap_or(DEFAULT_A),
        )?;
        let unbounded = self.unbounded || cfg.unbounded.unwrap_or(false);
        let boundary = if unbounded {
            BoundaryConfig::Unbounded
        } else {
            BoundaryConfig::mirrors(
                self.r.or(cfg.r).unwrap_or(DEFAULT_R),
                angle(self.alpha, &cfg.alpha, DEFAULT_ALPHA)?,
            )?
        };
        let convention = match (self.convention, &cfg.convention) {
            (Some(c), _) => c,
            (None, Some(s)) => s.parse().map_err(anyhow::Error::msg)?,
            (None, None) => GammaZConvention::default(),
        };
        let mut s = Scenario::new(detector, boundary);
        s.convention = convention;
        s.omega_offset = self.omega_offset.or(cfg.omega_offset).unwrap_or(0.0);
        s.theta = angle(self.theta, &cfg.theta, DEFAULT_THETA)?;
        s.phi = angle(self.phi, &cfg.phi, 0.0)?;
        s.tau = self.tau.or(cfg.tau).unwrap_or(DEFAULT_TAU);
        s.measurements = cfg.measurements.unwrap_or(1);
        if !s.omega_offset.is_finite() {
            bail!("omega-offset must be finite");
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angles_accept_pi_suffix() {
        assert_eq!(parse_angle("0.1pi").unwrap(), 0.1 * PI);
        assert_eq!(parse_angle("pi").unwrap(), PI);
        assert_eq!(parse_angle("-0.5pi").unwrap(), -0.5 * PI);
        assert_eq!(parse_angle("0.25*pi").unwrap(), 0.25 * PI);
        assert_eq!(parse_angle("1.2").unwrap(), 1.2);
        assert!(parse_angle("0.1tau").is_err());
        assert!(parse_angle("").is_err());
    }

    #[test]
    fn defaults_match_documented_values() {
        let s = PhysicsArgs::default()
            .resolve(&ConfigFile::default())
            .unwrap();
        assert_eq!(s.detector.omega0, 10.0);
        assert_eq!(s.detector.lambda, 1.0);
        assert_eq!(s.detector.a, 1.0);
        assert_eq!(
            s.boundary,
            BoundaryConfig::TwoPerpendicularMirrors {
                r: 0.1,
                alpha: 0.1 * PI
            }
        );
        assert_eq!(s.theta, FRAC_PI_2);
        assert_eq!(s.tau, 0.4);
        assert_eq!(s.convention, GammaZConvention::Eq7);
    }

    #[test]
    fn flags_override_config_override_defaults() {
        let cfg: ConfigFile =
            serde_json::from_str(r#"{"a": 2.0, "R": 0.3, "alpha": "0.2pi", "convention": "eq22"}"#)
                .unwrap();
        let flags = PhysicsArgs {
            a: Some(3.0),
            ..PhysicsArgs::default()
        };
        let s = flags.resolve(&cfg).unwrap();
        assert_eq!(s.detector.a, 3.0);
        assert_eq!(s.convention, GammaZConvention::Eq22);
        assert_eq!(
            s.boundary,
            BoundaryConfig::TwoPerpendicularMirrors {
                r: 0.3,
                alpha: 0.2 * PI
            }
        );
        assert_eq!(s.detector.omega0, DEFAULT_OMEGA0);
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        assert!(serde_json::from_str::<ConfigFile>(r#"{"acceleration": 1}"#).is_err());
    }

    #[test]
    fn invalid_geometry_is_an_error() {
        let flags = PhysicsArgs {
            alpha: Some(FRAC_PI_2),
            ..PhysicsArgs::default()
        };
        assert!(flags.resolve(&ConfigFile::default()).is_err());
    }
}
