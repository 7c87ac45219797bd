use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// A single violated density-operator invariant with its magnitude.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// max |M − M†| entrywise.
    Hermiticity(f64),
    /// |Tr M − 1|.
    Trace(f64),
    /// |λ_min| for the most negative eigenvalue.
    Positivity(f64),
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::Hermiticity(v) => write!(f, "hermiticity violated by {v:.3e}"),
            Violation::Trace(v) => write!(f, "unit trace violated by {v:.3e}"),
            Violation::Positivity(v) => write!(f, "positivity violated by {v:.3e}"),
        }
    }
}

/// Everything that failed when a matrix was checked as a density operator.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", parts.join("; "))
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dimension {dim} exceeds the dense-operator cap of {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("dimension must be positive")]
    ZeroDimension,

    #[error("entry {index} is not finite")]
    NonFiniteEntry { index: usize },

    #[error("expected {expected} entries, got {got}")]
    EntryCount { expected: usize, got: usize },

    #[error("subsystem dimensions {dims:?} do not factor dimension {dim}")]
    BadFactorization { dims: Vec<usize>, dim: usize },

    #[error("keep set must be a nonempty proper subset of subsystem indices")]
    BadKeepSet,

    #[error("matrix is not Hermitian (max deviation {max_dev:.3e})")]
    NotHermitian { max_dev: f64 },

    #[error("matrix is not unitary (max deviation of U†U from I: {max_dev:.3e})")]
    NotUnitary { max_dev: f64 },

    #[error("not a density operator: {report}")]
    InvalidDensity { report: ValidationReport },

    #[error("state vector is not normalized (|norm - 1| = {dev:.3e})")]
    NotNormalized { dev: f64 },

    #[error("rank {rank} is not in 1..={dim}")]
    InvalidRank { rank: usize, dim: usize },

    #[error("parameter {name} = {value} is outside {range}")]
    ParamRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("shot plan invalid: {reason}")]
    InvalidShotPlan { reason: String },

    #[error("channel has no Kraus operators")]
    EmptyKraus,

    #[error("Kraus operators do not satisfy ΣK†K = I (max deviation {max_dev:.3e})")]
    KrausIncomplete { max_dev: f64 },

    #[error("Choi marginal over the output subsystem deviates from I/d by {dev:.3e}")]
    ChoiMarginal { dev: f64 },

    #[error("capacity criterion applies to qubit channels only (got d = {dim})")]
    CriterionScope { dim: usize },

    #[error("reduced state of the designated qubit is not maximally mixed (deviation {dev:.3e})")]
    MarginalNotMixed { dev: f64 },

    #[error("degenerate embedding: Tr(γI + A) vanishes, cannot form a state")]
    DegenerateEmbedding,

    #[error("spectrum recovery failed: {reason}")]
    SpectrumRecovery { reason: String },

    #[error("unknown channel spec '{spec}'")]
    UnknownChannel { spec: String },

    #[error("power-trace vector invalid: {reason}")]
    InvalidPowerTraces { reason: String },

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
