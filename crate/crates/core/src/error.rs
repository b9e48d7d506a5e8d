//! Error type shared across the registration pipeline.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Warping with a transform whose determinant is (near-)zero.
    #[error("non-invertible affine")]
    NonInvertibleAffine,

    /// Inverting a transform with |det| below the singularity threshold.
    #[error("singular")]
    Singular,

    /// K-means asked for more clusters than there are distinct intensities.
    #[error("degenerate clustering")]
    DegenerateClustering,

    #[error("zero feature vector")]
    ZeroFeatureVector,

    /// Contrastive loss needs at least two samples per batch.
    #[error("need negatives")]
    NeedNegatives,

    #[error("border keypoint")]
    BorderKeypoint,

    #[error("insufficient matches")]
    InsufficientMatches,

    #[error("degenerate configuration")]
    DegenerateConfiguration,

    #[error("no foreground")]
    NoForeground,

    #[error("rank-deficient fit")]
    RankDeficientFit,

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("image error: {0}")]
    Image(#[from] image::ImageError),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
