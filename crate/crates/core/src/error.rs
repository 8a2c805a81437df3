use thiserror::Error;

/// Errors raised by graph construction, operator validation and the
/// equivalence/sampling pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate graph: vertex {0} has no neighbors")]
    IsolatedVertex(usize),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("port {port} out of range for vertex {vertex} (degree {degree})")]
    PortOutOfRange {
        vertex: usize,
        port: usize,
        degree: usize,
    },
    #[error("vertex {0} out of range")]
    VertexOutOfRange(usize),
    #[error("vertices {0} and {1} are not adjacent")]
    NotAdjacent(usize, usize),
    #[error("expected a tuple of {expected} vertices, got {got}")]
    TupleArity { expected: usize, got: usize },
    #[error("unsupported dimension {0}: {1}")]
    UnsupportedDimension(usize, &'static str),
    #[error("coin block for vertex {vertex} violates {condition}")]
    NonUnitaryCoin {
        vertex: usize,
        condition: UnitarityViolation,
    },
    #[error("interaction block for vertex tuple {tuple:?} violates {condition}")]
    NonUnitaryInteraction {
        tuple: Vec<usize>,
        condition: UnitarityViolation,
    },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid shift: {0}")]
    InvalidShift(String),
    #[error("state is not normalized (norm² = {0})")]
    NotNormalized(f64),
    #[error("state of {required} amplitudes exceeds the memory budget of {budget}")]
    MemoryBudget { required: u128, budget: usize },
    #[error("column {column} at t={time} sums to {sum}; operators are not unitary")]
    ColumnSum { time: usize, column: usize, sum: f64 },
    #[error("column {column} at t={time} is not materialized; rebuild with full materialization or a wider halo")]
    ColumnNotMaterialized { time: usize, column: usize },
    #[error("time {time} out of range (horizon {horizon})")]
    TimeOutOfRange { time: usize, horizon: usize },
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

/// The unitarity condition a coin or interaction block failed.
#[derive(Debug, Clone, PartialEq)]
pub enum UnitarityViolation {
    /// Σ_i |w_ik|² = 1 fails for column k.
    ColumnNorm { column: usize, norm_sq: f64 },
    /// Σ_i w*_ij w_ik = 0 fails for distinct columns j, k.
    ColumnOverlap { left: usize, right: usize, magnitude: f64 },
    NotSquare { rows: usize, cols: usize },
}

impl std::fmt::Display for UnitarityViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            UnitarityViolation::ColumnNorm { column, norm_sq } => write!(
                f,
                "column normalization (sum_i |w_ik|^2 = 1): column {column} has squared norm {norm_sq}"
            ),
            UnitarityViolation::ColumnOverlap {
                left,
                right,
                magnitude,
            } => write!(
                f,
                "column orthogonality (sum_i w*_ij w_ik = 0): columns {left} and {right} overlap by {magnitude}"
            ),
            UnitarityViolation::NotSquare { rows, cols } => {
                write!(f, "squareness: block is {rows}x{cols}")
            }
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
