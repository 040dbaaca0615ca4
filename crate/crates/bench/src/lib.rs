//! Fixtures shared by the kernel benchmarks.

use pifnet_core::attrib::{train_svr, SvrModel, SvrParams};
use pifnet_core::model::{ModelConfig, PifNet};
use pifnet_core::rng::{seeded, Rng};

/// `n` uniform points in `[0, 1)^dim`, row-major.
pub fn random_points(n: usize, dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = seeded(seed);
    (0..n * dim).map(|_| rng.random::<f64>()).collect()
}

/// Network with the default shape and `dims` input channels, plus one
/// matching input window.
pub fn default_net(dims: usize, seed: u64) -> (PifNet, Vec<f64>) {
    let cfg = ModelConfig {
        dims,
        ..ModelConfig::default()
    };
    let window = random_points(cfg.lookback, dims, seed + 1);
    (PifNet::new(cfg, seed).expect("default config is valid"), window)
}

/// SVR fitted to a smooth function of `features` inputs on `rows` points.
pub fn fitted_svr(rows: usize, features: usize, seed: u64) -> (SvrModel, Vec<f64>) {
    let x = random_points(rows, features, seed);
    let y: Vec<f64> = x
        .chunks_exact(features)
        .map(|r| r.iter().enumerate().map(|(i, v)| (v * (i + 1) as f64).sin()).sum())
        .collect();
    let model = train_svr(&x, features, &y, &SvrParams::default()).expect("SVR fit");
    (model, x)
}
