use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("embedding stream is empty")]
    EmptyStream,

    #[error("line {line}: expected dimension {expected}, found {found}")]
    InconsistentDimension {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("line {line}: non-numeric field {field:?}")]
    NonNumeric { line: usize, field: String },

    #[error("line {line}: non-finite value in embedding for {token:?}")]
    NonFinite { line: usize, token: String },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("cosine similarity undefined for a zero-norm vector")]
    ZeroNorm,

    #[error("unknown word {0:?}")]
    UnknownWord(String),

    #[error("requested {k} neighbours from a vocabulary of {size} words")]
    TooManyNeighbours { k: usize, size: usize },

    #[error("vocabulary needs at least {needed} words, has {found}")]
    VocabularyTooSmall { needed: usize, found: usize },

    #[error("no reduced coordinates for {0:?}")]
    MissingReduction(String),

    #[error("sentence is empty after tokenisation")]
    EmptySentence,

    #[error("sentence does not reduce to s; residue: {residue}")]
    Irreducible { residue: String },

    #[error("unsupported sentence shape: {0}")]
    UnsupportedShape(String),

    #[error("{path}:{line}: {message}")]
    Format {
        path: String,
        line: usize,
        message: String,
    },

    #[error("euler ansatz only defined on a single qubit, register has width {0}")]
    EulerWidth(usize),

    #[error("cup joins registers of widths {0} and {1}")]
    CupWidthMismatch(usize, usize),

    #[error("qubit {qubit} out of range for a {count}-qubit register")]
    QubitOutOfRange { qubit: usize, count: usize },

    #[error("parameter {0} does not resolve")]
    UnresolvedParam(String),

    #[error("invalid parameter reference {0:?}")]
    BadParamRef(String),

    #[error("data length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("zero vector cannot be amplitude encoded")]
    ZeroVector,

    #[error("loss is not finite")]
    NonFiniteLoss,

    #[error("{failed} of {total} batches produced a non-finite loss")]
    LossEpidemic { failed: usize, total: usize },

    #[error("{} corpus problem(s):\n{}", .0.len(), .0.join("\n"))]
    Corpus(Vec<String>),

    #[error("{0} is empty")]
    Empty(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
