//! Similarity metrics: LNCC, K-means level sets, histogram entropies, the
//! cross mutual information function, and the combined fidelity score.

mod fidelity;
mod kmeans;
mod lncc;
mod mi;
mod soft_mi;

pub use fidelity::{fidelity, fidelity_features, FidelityConfig, FIDELITY_KMEANS_SEED};
pub use kmeans::{kmeans_levels, LevelSetLabeling};
pub use lncc::lncc;
pub use mi::{cmif, entropies, joint_histogram, Entropies, HistogramTable};
pub use soft_mi::{soft_mi_with_grad_b, soft_mutual_information, SoftBins};

pub(crate) use lncc::{box_sum, lncc_mean, lncc_mean_and_grad_b};
