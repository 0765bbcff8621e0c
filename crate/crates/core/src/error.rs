use std::fmt;

pub type Result<T> = std::result::Result<T, Error>;

/// Pipeline stage an error originated from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Embedding,
    Rank,
    Dmd,
    Alignment,
    Baseline,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Embedding => "embedding",
            Stage::Rank => "rank",
            Stage::Dmd => "dmd",
            Stage::Alignment => "alignment",
            Stage::Baseline => "baseline",
        };
        f.write_str(name)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("input contains NaN or infinite values")]
    NonFinite,

    #[error("embedding span (mu - 1) * tau + 1 = {span} does not fit in {len} samples")]
    EmbeddingTooLong { span: usize, len: usize },

    #[error("no grid point yields a feasible embedding")]
    NoFeasiblePoint,

    #[error("invalid matrix dimensions {rows}x{cols}")]
    InvalidDimensions { rows: usize, cols: usize },

    #[error("singular value spectrum is empty")]
    EmptySpectrum,

    #[error("rank {rank} exceeds the maximum {max}")]
    RankTooLarge { rank: usize, max: usize },

    #[error("singular value decomposition did not converge")]
    SvdFailure,

    #[error("eigendecomposition did not converge")]
    EigenFailure,

    #[error("kernel Gram matrix has numerical rank {available}, below the requested rank {requested}")]
    SingularGram { requested: usize, available: usize },

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("optimizer diverged at iteration {iteration} (loss {loss:e})")]
    Divergence {
        iteration: usize,
        loss: f64,
        trace: Vec<f64>,
    },

    #[error("Cayley retraction matrix is singular")]
    RetractionSingular,

    #[error("angular distance is undefined for a zero matrix")]
    ZeroMatrix,

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("integration blew up at step {step}")]
    NonFiniteBlowup { step: usize },

    #[error("network activity is spatially uniform; no bump formed")]
    NoBump,

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at(self, stage: Stage) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Strips stage tags and returns the innermost error.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn stage(&self) -> Option<Stage> {
        match self {
            Error::Stage { stage, .. } => Some(*stage),
            _ => None,
        }
    }
}

pub(crate) fn shape_mismatch(expected: (usize, usize), got: (usize, usize)) -> Error {
    Error::ShapeMismatch {
        expected: format!("{}x{}", expected.0, expected.1),
        got: format!("{}x{}", got.0, got.1),
    }
}
