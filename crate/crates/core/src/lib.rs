//! Short-term load forecasting with LOF-based data repair, Shapley feature
//! selection over an RBF support-vector regressor, and a patch-wise GRU
//! network with residual projection and softmax gating, trained with an
//! error-weighted adaptive loss.

pub mod anomaly;
pub mod attrib;
pub mod data;
pub mod error;
pub mod loss;
pub mod metrics;
pub mod model;
pub mod numerics;
pub mod pipeline;
pub mod rng;
pub mod train;

pub use error::{Error, Result};
