//! Gradient tree boosting whose tree size and ensemble size are chosen by an
//! information criterion instead of tuned hyperparameters.
//!
//! Every candidate split is judged by its training-loss reduction plus an
//! estimate of the optimism that greedy split profiling induces. Trees grow
//! while splits are expected to reduce generalization loss, and boosting stops
//! as soon as a new tree is not.
//!
//! ```no_run
//! use icboost::{train, Dataset, LossKind, LossSpec, TrainConfig};
//!
//! let data = Dataset::from_csv_path("train.csv", Some("y")).unwrap();
//! let model = train(&data, LossSpec::simple(LossKind::Mse).unwrap(), &TrainConfig::default()).unwrap();
//! let predictions = model.predict(&data).unwrap();
//! # let _ = predictions;
//! ```

pub mod criterion;
pub mod data;
pub mod ensemble;
pub mod error;
pub mod losses;
pub mod metrics;
pub mod numeric;
pub mod persist;
pub mod splitting;
pub mod synthetic;
pub mod tree;
pub mod validation;

pub use data::Dataset;
pub use ensemble::{train, train_with, EnsembleModel, IterationRecord, Termination, TrainConfig};
pub use error::{Error, Result};
pub use losses::{GradHessBuffer, LossKind, LossSpec};
pub use tree::{GrowthMode, Tree};
