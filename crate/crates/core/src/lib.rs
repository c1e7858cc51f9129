//! Optimal certification and steering for a content platform: the screening
//! model, its optimal mechanism, restricted benchmarks and comparative statics.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod benchmarks;
pub mod error;
pub mod mechanism;
pub mod model;
pub mod oracle;
pub mod quadrature;
pub mod search;

pub use error::{Error, Result};
pub use mechanism::{MechanismSolution, PooledMechanism};
pub use model::{AttentionSpec, CostSpec, GridConfig, ModelConfig, TypeDistribution};
