use thiserror::Error;

#[derive(Debug, Error)]
pub enum TqsError {
    #[error("qubit count mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("system too large for dense computation: {n} qubits exceeds limit {limit}")]
    QubitLimit { n: usize, limit: usize },
    #[error("expectation of a non-canonical Pauli string is complex; canonicalize first")]
    NonCanonical,
    #[error("shot count must be positive")]
    ZeroShots,
    #[error("overlap matrix E is numerically singular: every eigenvalue is below the cutoff")]
    SingularOverlap,
    #[error("required overlap matrix {0} is not present")]
    MissingMatrix(&'static str),
    #[error("internal consistency failure: {0}")]
    Inconsistent(String),
    #[error("parse error{}: {msg}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse { line: Option<usize>, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl TqsError {
    pub fn parse(line: usize, msg: impl Into<String>) -> Self {
        TqsError::Parse {
            line: Some(line),
            msg: msg.into(),
        }
    }

    pub fn parse_nl(msg: impl Into<String>) -> Self {
        TqsError::Parse {
            line: None,
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, TqsError>;
