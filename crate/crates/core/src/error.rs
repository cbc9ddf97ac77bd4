use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unsupported ADC resolution: {0} bits is outside the quantizer table")]
    UnsupportedResolution(u32),

    #[error("infeasible ADC budget: minimum power {min_power} W exceeds budget {budget} W")]
    InfeasibleBudget { min_power: f64, budget: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerically singular matrix (condition number {cond:e})")]
    NumericalSingularity { cond: f64 },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
