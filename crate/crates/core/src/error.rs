use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("infeasible separation: no center layout after {attempts} attempts")]
    InfeasibleSeparation { attempts: usize },
    #[error("empty dataset")]
    EmptyDataset,
    #[error("more clusters than points (k = {k}, n = {n})")]
    TooManyClusters { k: usize, n: usize },
    #[error("index {index} undefined for k = {k}")]
    IndexUndefined { index: &'static str, k: usize },
    #[error("degenerate dispersion: within-cluster dispersion is zero")]
    DegenerateDispersion,
    #[error("degenerate component {0}: covariance is singular")]
    DegenerateComponent(usize),
    #[error("sweep failed: the clusterer failed for every k")]
    SweepFailed,
    #[error("bad model artifact: {reason} (expected one f32 image input of shape [1, C, H, W] and a detection output [1, N, 5 + classes] or [1, 4 + classes, N])")]
    BadModelArtifact { reason: String },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("all {0} datasets failed")]
    AllFailed(usize),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.to_string(),
        }
    }
}
