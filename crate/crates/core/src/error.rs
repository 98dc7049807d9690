use thiserror::Error;

use crate::Complex;

/// Which hypothesis of the linearization a fit rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    /// Exponential closeness of the lifted map to the lifted representative.
    Closeness,
    /// Hölder continuity of the representative's derivatives.
    Holder,
    /// Exponential closeness of the derivatives.
    DerivativeCloseness,
    /// The map is not simple at the fixed point.
    Simplicity,
    /// The multiplier does not satisfy the admissibility threshold.
    Threshold,
}

impl Hypothesis {
    pub fn label(self) -> &'static str {
        match self {
            Hypothesis::Closeness => "(a)",
            Hypothesis::Holder => "(b)",
            Hypothesis::DerivativeCloseness => "(c)",
            Hypothesis::Simplicity => "simplicity",
            Hypothesis::Threshold => "threshold",
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("point {z} lies outside the domain of radius {radius}")]
    OutOfDomain { z: Complex, radius: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParameter(String),

    #[error("evaluation within {floor:e} of branch point {point}")]
    BranchPoint { point: Complex, floor: f64 },

    #[error("degenerate derivative at {z}: |f_z| = {fz_abs}, |f_zbar| = {fzbar_abs}")]
    DegenerateDerivative { z: Complex, fz_abs: f64, fzbar_abs: f64 },

    #[error("vanishing Jacobian ({jacobian:e})")]
    VanishingJacobian { jacobian: f64 },

    #[error("winding number computation unstable at radius {radius}")]
    UnstableWinding { radius: f64 },

    #[error("local index {computed} does not match declared index {declared}")]
    IndexMismatch { computed: i64, declared: u32 },

    #[error("negative Jacobian sample {value:e} at {z}")]
    NegativeJacobian { z: Complex, value: f64 },

    #[error("{operation} did not converge: {detail}")]
    NonConvergence { operation: &'static str, detail: String },

    #[error("samples are not monotone: {0}")]
    NonMonotone(String),

    #[error("branch tracking failed near {z}")]
    BranchTracking { z: Complex },

    #[error("map vanishes at {z}")]
    VanishingValue { z: Complex },

    #[error("orbit escaped the half-plane Re z < {log_r} at {z}")]
    DomainEscape { z: Complex, log_r: f64 },

    #[error("hypothesis {} failed: {detail}", .which.label())]
    HypothesisFailed { which: Hypothesis, detail: String },

    #[error("iteration diverged: {0}")]
    Divergence(String),

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("spec parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
