//! The forecasting network.

mod checkpoint;
mod config;
mod gru;
mod network;
mod patch;

pub use checkpoint::{load_checkpoint, save_checkpoint, Manifest};
pub use config::{Head, ModelConfig};
pub use gru::{GruCache, GruLayer};
pub use network::{ForwardTrace, Mode, PatchCache, PifNet, PifNetParams};
pub use patch::{patch_count, patchify, PatchSet};
