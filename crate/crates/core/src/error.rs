use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("matrix is rank deficient (rank {rank} < {expected})")]
    RankDeficient { rank: usize, expected: usize },
    #[error("singular matrix")]
    Singular,
    #[error("LP solver exceeded {0} iterations without terminating")]
    CyclingGuard(usize),
    #[error("point is not in the zonotope")]
    NotInZonotope,
    #[error("tie in the tiling LP (variable {variable} has zero reduced cost); redraw the tiling objective")]
    TilingTie { variable: usize },
    #[error("chord LP failed: {0}")]
    Chord(String),
    #[error("numerical breakdown: {0}")]
    Numerical(String),
    #[error("graph is disconnected")]
    Disconnected,
    #[error("enumeration of {count} subsets exceeds the guard of {guard}")]
    EnumerationGuard { count: u128, guard: u128 },
    #[error("undefined statistic: {0}")]
    Undefined(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("io error: {0}")]
    Io(String),
    #[error("empty trace")]
    EmptyTrace,
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
