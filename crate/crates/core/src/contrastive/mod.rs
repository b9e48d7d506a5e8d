//! Contrastive feature mapping: a small shared encoder trained with the
//! batch-wise contrastive loss so both modalities land in a common feature
//! space.

mod checkpoint;
pub mod conv;
mod encoder;
mod features;
mod loss;
mod train;

pub use checkpoint::EncoderBundle;
pub use encoder::{encode, EncoderTrace, TinyEncoder, DEFAULT_CHANNELS};
pub use features::FeatureMap;
pub use loss::{bnce_loss, cosine_sim, gather_position_vectors, BnceConfig, BnceOutput, PatchBatch, NORM_GUARD};
pub use train::{train_encoder, TrainOutcome};
