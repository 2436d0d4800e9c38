//! One-layer GNN training under full-graph and mini-batch regimes, with the
//! structural train/test distance, convergence metrics, and a cost model.
#![no_std]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod adj;
pub mod distance;
pub mod error;
pub mod generate;
pub mod graph;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod sampling;
pub mod simulator;
pub mod trainer;
pub mod transport;

pub use adj::{normalized_rows_full, AdjRows, Provenance, SparseRow};
pub use error::{Error, Result};
pub use graph::{split_train_test, DegreeInfo, Graph};
pub use linalg::Matrix;
pub use model::{ActivationScale, LossKind, ModelParams};
pub use sampling::{Normalization, SamplerConfig};
pub use trainer::{train, TrainConfig, TrainMode, Trajectory};
