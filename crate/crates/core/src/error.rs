use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid spin system: {0}")]
    InvalidSystem(String),

    #[error("degenerate observer transitions {a} and {b} at {freq_hz} Hz")]
    DegenerateTransitions { a: String, b: String, freq_hz: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operator is not unitary (max deviation {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("duplicate factor on spin {0}")]
    DuplicateFactor(usize),

    #[error("spin index {index} out of range for {n_spins} spins")]
    SpinOutOfRange { index: usize, n_spins: usize },

    #[error("invalid basis label {0:?}")]
    InvalidLabel(String),

    #[error("transition {a}-{b} is not a single-quantum line")]
    ForbiddenTransition { a: String, b: String },

    #[error("zero coupling between observer and work qubit {0}")]
    ZeroCoupling(usize),

    #[error("{0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("encoding row {row} does not reproduce its Hadamard sign pattern")]
    EncodingMismatch { row: usize },

    #[error("gate {gate} is not defined for {n_work} work qubits")]
    GateUnsupported { gate: String, n_work: usize },

    #[error("unknown gate {0:?}")]
    UnknownGate(String),

    #[error("gate does not act as a classical permutation on work state {0}")]
    NotPermutation(String),

    #[error("missing decoded series for input {0}")]
    MissingLabel(String),

    #[error("ambiguous correlation row {row}: {peaks} peaks above threshold")]
    AmbiguousRow { row: String, peaks: usize },

    #[error("empty integration band [{lo}, {hi}] Hz")]
    EmptyBand { lo: f64, hi: f64 },

    #[error("frequency axes differ")]
    AxisMismatch,

    #[error("unsupported character {0:?}")]
    UnsupportedChar(char),

    #[error("message needs {needed} slices but the register has {available}")]
    MessageOverflow { needed: usize, available: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: malformed data file ({msg})")]
    Format { path: PathBuf, msg: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
