use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite entry in {0}")]
    NonFinite(String),

    #[error("{what} failed to converge after {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },

    /// Some eigenvalue of the left coefficient is (numerically) the negative
    /// of an eigenvalue of the right coefficient.
    #[error("singular Sylvester pencil: |λ(C1) + λ(C2)| = {gap:e} below tolerance {tol:e}")]
    SingularPencil { gap: f64, tol: f64 },

    #[error("principal square root undefined: eigenvalue {re}{im:+}i lies on the closed negative real axis")]
    BranchCut { re: f64, im: f64 },

    #[error("matrix is singular or ill-conditioned (condition estimate {cond:e})")]
    IllConditioned { cond: f64 },

    #[error("rank deficient: requested rank {requested}, numerical rank {numerical}")]
    RankDeficient { requested: usize, numerical: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("iterate became non-finite at iteration {iteration}")]
    Divergence { iteration: usize },

    #[error("{step} update failed: {source}")]
    Step {
        step: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("degenerate batch: {0}")]
    DegenerateBatch(String),

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: u64, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn at_step(self, step: &'static str) -> Error {
        Error::Step {
            step,
            source: Box::new(self),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Error {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
