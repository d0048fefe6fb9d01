use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension must be at least 1")]
    ZeroDimension,

    #[error("stability index alpha = {0} outside the admissible range {1}")]
    AlphaOutOfRange(f64, &'static str),

    #[error("moment order beta = {beta} must satisfy 0 < beta < alpha = {alpha}")]
    BetaOutOfRange { beta: f64, alpha: f64 },

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter { name: &'static str, value: f64, reason: &'static str },

    #[error("radius window [{lo}, {hi}] is empty or leaves the support |z| >= 1")]
    InvalidWindow { lo: f64, hi: f64 },

    #[error("non-finite input to {0}")]
    NonFinite(&'static str),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("no recorded entry for step {step} and beta = {beta}")]
    MissingRecord { step: usize, beta: f64 },

    #[error("regime certificate is not valid; failing conditions: {0}")]
    InvalidCertificate(String),

    #[error("diffusion vanishes at the initial point; g(x0) != 0 is required")]
    DegenerateDiffusion,

    #[error("operation needs isotropic diffusion g(x) = psi(|x|) I")]
    NonIsotropicDiffusion,

    #[error("first-increment radius {0:e} lies below the Pareto support edge 1")]
    ThresholdBelowSupport(f64),

    #[error("{0} requires Pareto-surrogate noise")]
    RequiresPareto(&'static str),
}
