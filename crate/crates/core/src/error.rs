use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("parameter `{name}` = {value:e} overflows double precision arithmetic")]
    Overflow { name: &'static str, value: f64 },

    #[error("operation requires mirrors but the boundary is unbounded")]
    NoImages,

    #[error("negative decay rate at omega = {omega}: response bracket = {bracket}")]
    NegativeRate { omega: f64, bracket: f64 },

    #[error("regularization fault at dtau = {dtau}: |denominator| = {magnitude:e} below floor")]
    Regularization { dtau: f64, magnitude: f64 },

    #[error("{what} did not converge: last change {change:e} > tolerance {tolerance:e}")]
    NonConvergence {
        what: &'static str,
        change: f64,
        tolerance: f64,
    },

    #[error("Bloch vector norm {norm} exceeds 1")]
    OutsideBlochBall { norm: f64 },

    #[error("Cramer-Rao bound is unbounded for zero Fisher information")]
    UnboundedEstimate,
}

pub type Result<T> = std::result::Result<T, Error>;
