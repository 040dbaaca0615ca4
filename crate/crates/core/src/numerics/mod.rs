//! Dense numerics shared by every learnable component: tensors, activations,
//! Adam, finite-difference checking and parameter snapshots.

pub mod activation;
pub mod adam;
pub mod gradcheck;
pub mod snapshot;
mod tensor;

pub use activation::{sigmoid, softmax};
pub use adam::{AdamConfig, AdamState};
pub use gradcheck::grad_check;
pub use tensor::{dot, matvec_acc, matvec_t_acc, outer_acc, Tensor};
