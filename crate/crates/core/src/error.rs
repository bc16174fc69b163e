use thiserror::Error;

/// Errors surfaced by the simulator and the verification harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {constraint}")]
    InvalidParameter { name: String, constraint: String },

    #[error("missing parameter: {0}")]
    MissingParameter(String),

    #[error("lattice mismatch: operands live on different mode sets")]
    LatticeMismatch,

    #[error("mode {0:?} is outside the truncated lattice")]
    ModeOutsideLattice([i32; 2]),

    #[error("duplicate raw coefficient for mode pair containing {0:?}")]
    DuplicateRawMode([i32; 2]),

    #[error(
        "trajectory diverged at step {step} of sample {sample_index}: \
         ||X||_H exceeded the overflow guard (step size is likely too large)"
    )]
    Divergence { sample_index: u64, step: usize },

    #[error("functional `{name}` is unbounded and is admitted only with the nonlinearity disabled")]
    UnboundedFunctional { name: String },

    #[error("functional `{name}` has no positive lower bound; the entropy check requires one")]
    NonPositiveFunctional { name: String },

    #[error("entropy-gradient delta {given} is below the admissible local threshold {minimum}")]
    DeltaBelowThreshold { given: f64, minimum: f64 },

    #[error("outside local radius: ||x-y||_(V_theta) = {distance} exceeds {radius}")]
    OutsideLocalRadius { distance: f64, radius: f64 },

    #[error("alpha must exceed 1, got {0}")]
    AlphaOutOfRange(f64),

    #[error("epsilon {given} exceeds the admissible bound {maximum} for the change of measure")]
    EpsilonTooLarge { given: f64, maximum: f64 },

    #[error("inequality `{inequality}` violated with ratio {ratio}; witness: {witness}")]
    AssumptionViolated {
        inequality: String,
        ratio: f64,
        witness: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
