use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("wavefunction is not normalized (norm = {norm:.12})")]
    NotNormalized { norm: f64 },

    #[error("wavefunctions live on different grids")]
    GridMismatch,

    #[error("grid overflow: {0}")]
    GridOverflow(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("parameter not estimable: {0}")]
    NotEstimable(String),

    #[error("numerical quality check failed: {0}")]
    NumericalQuality(String),

    #[error("singular post-selection: pre- and post-selected states are orthogonal")]
    SingularPostSelection,

    #[error("degenerate post-selection: success probability {0:e} below 1e-12")]
    DegeneratePostSelection(f64),

    #[error("small-signal guard violated: {0}")]
    SmallSignalViolated(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}
