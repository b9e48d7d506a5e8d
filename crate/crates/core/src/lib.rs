//! Two-dimensional multimodal affine registration of SHG (second-harmonic
//! generation) microscopy onto bright-field histology.
//!
//! The pipeline has three stages:
//!
//! 1. [`contrastive`] — a small shared convolutional encoder trained with a
//!    batch-wise contrastive loss maps both modalities into a common feature
//!    space.
//! 2. [`prealign`] — keypoints detected on the feature maps are described,
//!    matched, and fed to RANSAC for an initial affine estimate.
//! 3. [`instopt`] — per-pair instance optimization: coarse-to-fine cost-volume
//!    displacement assignment with Gaussian regularization and Adam refinement
//!    under a combined LNCC + mutual-information fidelity, followed by an
//!    intensity-weighted least-squares affine fit of the resulting field.
//!
//! Transform convention: every [`AffineTransform2D`] stored, returned, or
//! serialized by this crate forward-maps *moving* coordinates to *fixed*
//! coordinates, so `warp_landmarks(moving_landmarks, t)` lands on the fixed
//! landmarks. Resampling the moving image onto the fixed grid therefore uses
//! the inverse: `warp_affine(moving, &t.invert()?, ..)`.

pub mod config;
pub mod contrastive;
pub mod error;
pub mod field;
pub mod grid;
pub mod instopt;
pub mod io;
pub mod landmarks;
pub mod optim;
pub mod pipeline;
pub mod prealign;
pub mod pyramid;
mod rand_util;
pub mod report;
pub mod similarity;
pub mod synth;
pub mod transform;
pub mod warp;

// pub use config::PipelineConfig;
pub use contrastive::{BnceConfig, EncoderBundle, FeatureMap, PatchBatch, TinyEncoder};
pub use error::{Error, Result};
pub use field::DisplacementField;
pub use grid::ImageGrid;
// pub use instopt::{CostVolume, InstOptConfig, SparseDisplacements};
pub use landmarks::{LandmarkSet, TreSummary};
// pub use prealign::{Descriptor, Keypoint, MatchSet, PrealignConfig};
pub use pyramid::Pyramid;
// pub use report::RegistrationReport;
pub use similarity::{FidelityConfig, HistogramTable, LevelSetLabeling};
// pub use synth::{SynthConfig, SynthPair};
pub use transform::AffineTransform2D;
pub use warp::Interp;

/// Version tag written into every JSON artifact.
pub const PIPELINE_VERSION: &str = "shgreg-v1";
/// Version tag of the encoder checkpoint format.
pub const ENCODER_VERSION: &str = "shgreg-enc-v1";
