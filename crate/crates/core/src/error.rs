use thiserror::Error;

/// Errors raised by the simulator and the verification harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid size {0} must be a power of two and at least 8")]
    InvalidGrid(usize),

    #[error("fields live on different grids ({0} vs {1})")]
    GridMismatch(usize, usize),

    #[error("hermitian symmetry violated: defect {defect:.3e} exceeds {tolerance:.1e}")]
    SymmetryViolation { defect: f64, tolerance: f64 },

    #[error("Littlewood-Paley block {j} is above j_max = {j_max} for this grid")]
    BlockAboveNyquist { j: i32, j_max: i32 },

    #[error("multiplier level n = {n} is not resolved on a {m}x{m} grid (oversampling rule)")]
    LevelAboveNyquist { n: u32, m: usize },

    #[error("horizon {horizon} is shorter than the time step {dt}")]
    InvalidHorizon { horizon: f64, dt: f64 },

    #[error("invalid charge parameters: {0}")]
    InvalidCharge(String),

    #[error("regression needs at least 3 points, got {0}")]
    DegenerateRegression(usize),

    #[error("kernel radius must be positive, got {0}")]
    NonpositiveRadius(f64),

    #[error(
        "blow-up at step {step} (t = {time}): exponent {exponent:.3} exceeds threshold {threshold}"
    )]
    BlowUp {
        step: usize,
        time: f64,
        exponent: f64,
        threshold: f64,
    },

    #[error("forcing field is negative ({min:.3e}) at t = {time}")]
    NegativeForcing { time: f64, min: f64 },

    #[error("importance effective sample size {ess:.1} is below the required {required}")]
    EffectiveSampleTooSmall { ess: f64, required: f64 },

    #[error("invalid config: {0}")]
    ConfigInvalid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("snapshot format: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
