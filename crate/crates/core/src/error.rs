use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input vector has zero norm")]
    ZeroVector,
    #[error("dimension {0} is too small (need at least 2)")]
    DimensionTooSmall(usize),
    #[error("loader layout expects {expected} angles, got {actual}")]
    LayoutMismatch { expected: usize, actual: usize },
    #[error("width mismatch: circuit has {circuit} qubits, state has {state}")]
    WidthMismatch { circuit: usize, state: usize },
    #[error("full statevector simulation limited to {max} qubits, got {width}")]
    TooWide { width: usize, max: usize },
    #[error("invalid gate on qubits ({0}, {1}) for width {2}")]
    InvalidGate(usize, usize, usize),
    #[error("gates in one timestep overlap on qubit {0}")]
    OverlappingGates(usize),
    #[error("matrix is not orthogonal (defect {defect:.3e})")]
    NotOrthogonal { defect: f64 },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("vector is not unit norm (norm {norm})")]
    NormError { norm: f64 },
    #[error("vector lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("every shot was discarded by post-selection")]
    AllDiscarded,
    #[error("invalid shot plan: {0}")]
    InvalidPlan(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("trace does not match layer: {0}")]
    TraceMismatch(String),
    #[error("non-finite loss at epoch {epoch}, step {step}")]
    NonFiniteLoss { epoch: usize, step: usize },
    #[error("singular value decomposition failed")]
    SvdFailure,
    #[error("QR decomposition failed")]
    QrFailure,
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("row {row}: label {value} is not 0 or 1")]
    NonBinaryLabel { row: usize, value: String },
    #[error("metric needs both classes present")]
    SingleClass,
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
