//! Born-machine generative modeling on matrix product states.
//!
//! This crate trains an MPS over categorical event tables, scores rows by
//! negative log-likelihood for anomaly detection, samples synthetic rows, and
//! explains what the model learned through reduced density matrices: per
//! feature marginals, conditionals, Von Neumann entropies, feature
//! importance, and mutual information.
//!
//! ```
//! use bornmps::mps::{Configuration, MpsModel};
//!
//! let model = MpsModel::init_random(&[2, 2, 2], 2, 7).unwrap();
//! let p: f64 = (0..8)
//!     .map(|i| {
//!         let v = Configuration(vec![i & 1, (i >> 1) & 1, (i >> 2) & 1]);
//!         model.probability(&v).unwrap()
//!     })
//!     .sum();
//! assert!((p - 1.0).abs() < 1e-10);
//! ```

pub mod explain;
pub mod mps;
pub mod pipeline;
pub mod report;
pub mod storage;
pub mod tensor;
pub mod trainer;

mod parallel;
#[cfg(test)]
mod testutil;

pub use explain::{FeatureImportanceTable, Rdm};
pub use mps::{Configuration, ModelError, MpsModel};
pub use pipeline::{
    DetectionMetrics, EncodedDataset, FeatureVocabulary, PipelineError, RawTable, RowExplanation,
    SynthSpec, ThresholdSweepResult,
};
pub use storage::{ModelFile, StorageError};
pub use tensor::{contract, svd_split, DenseTensor, SvdSplit, TensorError};
pub use trainer::{train, BatchSize, TrainConfig, TrainError, TrainReport};
