//! Measuring class imbalance in multi-label datasets, training an
//! encoder/decoder oversampler, generating synthetic minority instances, and
//! evaluating the effect with built-in classifiers and metrics.
//!
//! Modules, bottom-up:
//! - [`dataset`], [`arff`], [`csvio`]: dataset container, splits, scaling,
//!   and the ARFF/CSV/MULAN-XML formats.
//! - [`imbalance`]: IRlbl/ImR/MeanIR/CVIR statistics and minority sets.
//! - [`nn`]: dense layers, Adam, and gradient checking.
//! - [`aemlo`]: the joint-embedding oversampling model and its training.
//! - [`sampler`]: synthetic generation plus MLROS/MLRUS/MLSMOTE baselines.
//! - [`eval`]: binary relevance, MLkNN, and the three evaluation metrics.
//!
//! All stochastic components draw from named sub-streams of one root seed
//! (see [`seeds::derive_seed`]), so runs are reproducible end to end.

pub mod aemlo;
pub mod arff;
pub mod csvio;
pub mod dataset;
pub mod eval;
pub mod imbalance;
pub mod nn;
pub mod sampler;
pub mod seeds;

pub use csvio::DatasetFormat;
pub use dataset::{DataError, DatasetSplit, FeatureScaler, MultiLabelDataset};
