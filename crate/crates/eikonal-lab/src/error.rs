use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed input at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("value out of range at cell ({i}, {j}): {msg}")]
    Range { i: usize, j: usize, msg: String },
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("invalid grid: {0}")]
    Resolution(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("inconsistent jump: traces differ by {mismatch:e}")]
    InconsistentJump { mismatch: f64 },
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("unbalanced input: masses {mass1} and {mass2}")]
    Unbalanced { mass1: f64, mass2: f64 },
    #[error("potential is not 1-Lipschitz between atoms {i} and {j} (excess {excess:e})")]
    InvalidPotential { i: usize, j: usize, excess: f64 },
    #[error("Lipschitz constant {0} must exceed tan(3pi/8)")]
    InvalidConstant(f64),
    #[error("bookkeeping error: {0}")]
    Bookkeeping(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("missing prerequisite: run `{0}` first")]
    Dependency(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit status: 2 for bad input, 3 for a missing stage, 4 for a
    /// violated invariant.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Dependency(_) => 3,
            Error::Invariant(_)
            | Error::Bookkeeping(_)
            | Error::Unbalanced { .. }
            | Error::InvalidPotential { .. } => 4,
            _ => 2,
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
