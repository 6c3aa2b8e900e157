use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A matrix claimed to be a rotation failed the orthonormality or
    /// determinant check.
    #[error("not a rotation matrix: orthonormality/determinant residual {residual:.3e} exceeds {tolerance:.1e}")]
    InvalidRotation { residual: f64, tolerance: f64 },

    /// A projected point has nonpositive camera-frame depth.
    #[error("projection degeneracy: point {index} has nonpositive depth {depth:.3e}")]
    ProjectionDegeneracy { index: usize, depth: f64 },

    /// Not enough usable point pairs for the requested operation.
    #[error("too few correspondences: found {found}, need at least {needed}")]
    TooFewCorrespondences { found: usize, needed: usize },

    /// The 3D points span a degenerate configuration (e.g. all collinear).
    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),

    /// Two landmark sets that must share a scheme do not.
    #[error("landmark scheme mismatch: expected {expected}, found {found}")]
    SchemeMismatch { expected: String, found: String },

    /// Mirroring was requested for a scheme with no left/right permutation.
    #[error("scheme {0} has no left/right permutation table")]
    SchemeWithoutPermutation(String),

    /// Source points for a similarity fit are coincident or near-coincident.
    #[error("degenerate similarity: {0}")]
    DegenerateSimilarity(String),

    /// Ground-truth eye corners coincide, so the error normalizer is zero.
    #[error("degenerate ground truth: inter-ocular distance is zero")]
    ZeroInterOcular,

    /// An aggregate was requested over an empty collection.
    #[error("empty input: {0}")]
    EmptyInput(String),

    /// Training produced a non-finite loss.
    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Divergence { epoch: usize },

    /// A value failed validation against its documented invariants.
    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidValue(msg.into())
    }
}
