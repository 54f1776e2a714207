//! Classifiers, resampling, cross-validation and metrics.

mod cv;
mod dataset;
mod matrix;
mod metrics;
pub mod models;
mod resample;

pub use cv::{evaluate, fit_final, stratified_kfold, EvalOptions, FittedModel, Fold, Imbalance};
pub use dataset::Dataset;
pub use matrix::Matrix;
pub use metrics::{roc_curve, ClassMetrics, ConfusionMatrix, EvalReport, FoldSummary, RocCurve, RocPoint};
pub use models::{fit, ClassWeight, Model, ModelKind, ModelSpec};
pub use resample::{smote, smote_with, undersample, undersample_rows, SMOTE_NEIGHBORS};

/// Derives an independent seed for stream `stream` (fold, estimator, ...)
/// from a base seed using the splitmix64 finalizer.
pub fn sub_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Index of the largest value; ties go to the smaller index.
pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}
