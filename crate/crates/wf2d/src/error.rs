//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid size {0} is not a power of two")]
    NonPowerOfTwoGrid(usize),

    #[error("field representation `{0}` not populated")]
    MissingRepresentation(&'static str),

    #[error("inverse fractional Laplacian requires a mean-zero field (|c_0| = {c0}, max|c_k| = {cmax})")]
    NotMeanZero { c0: f64, cmax: f64 },

    #[error("component/shape mismatch: {0}")]
    Shape(String),

    #[error("parameter out of range: {0}")]
    Parameter(String),

    #[error("amplitude argument left the admissible stress ball: max|R̊/ρ| = {max_ratio} > 1/2")]
    AmplitudeDomain { max_ratio: f64 },

    #[error("γ² positivity lost: min γ² = {min_sq} below floor {floor}")]
    GammaDomain { min_sq: f64, floor: f64 },

    #[error("strict-mode constraint violated: {0}")]
    Constraint(String),

    #[error("time path too short: {0}")]
    Path(String),

    #[error("unknown verification suite `{0}`")]
    UnknownSuite(String),

    #[error("inadmissible sweep value: {0}")]
    SweepValue(String),

    #[error("config: {0}")]
    Config(String),

    #[error("bad field dump: {0}")]
    Dump(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
