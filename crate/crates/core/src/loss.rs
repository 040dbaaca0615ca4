//! Error-Weighted Adaptive Loss and the MSE/MAE baselines.
//!
//! Errors are `e = y - ŷ`; every gradient is with respect to the
//! predictions `ŷ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the batch error spread σ is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaMode {
    /// Population standard deviation (mean removed).
    #[default]
    Population,
    /// Root mean square of the errors.
    Rms,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EwalConfig {
    pub c: f64,
    pub eps: f64,
    pub sigma: SigmaMode,
}

impl Default for EwalConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            eps: 1e-8,
            sigma: SigmaMode::Population,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossResult {
    pub value: f64,
    pub grad_wrt_pred: Vec<f64>,
    /// σ of the batch errors (zero for MSE/MAE).
    pub batch_sigma: f64,
    /// Per-element ω (empty for MSE/MAE).
    pub weights: Vec<f64>,
}

/// Rational-quadratic penalty `e² / (1 + (e/c)²)`.
pub fn rq_loss(e: f64, c: f64) -> f64 {
    let r = e / c;
    e * e / (1.0 + r * r)
}

/// d/de of [`rq_loss`]: `2e / (1 + (e/c)²)²`.
pub fn rq_grad(e: f64, c: f64) -> f64 {
    let r = e / c;
    let q = 1.0 + r * r;
    2.0 * e / (q * q)
}

/// Logarithmic penalty `ln(1 + |e|/c)`.
pub fn log_loss(e: f64, c: f64) -> f64 {
    (e.abs() / c).ln_1p()
}

/// d/de of [`log_loss`], zero at e = 0.
pub fn log_grad(e: f64, c: f64) -> f64 {
    if e == 0.0 {
        0.0
    } else {
        e.signum() / (c + e.abs())
    }
}

fn check_lengths(y: &[f64], y_hat: &[f64]) -> Result<()> {
    if y.len() != y_hat.len() || y.is_empty() {
        return Err(Error::Contract(format!(
            "loss needs equal non-empty lengths, got {} and {}",
            y.len(),
            y_hat.len()
        )));
    }
    Ok(())
}

pub fn batch_sigma(errors: &[f64], mode: SigmaMode) -> f64 {
    let n = errors.len() as f64;
    match mode {
        SigmaMode::Population => {
            let mean = errors.iter().sum::<f64>() / n;
            (errors.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / n).sqrt()
        }
        SigmaMode::Rms => (errors.iter().map(|e| e * e).sum::<f64>() / n).sqrt(),
    }
}

/// EWAL over a flattened batch. ω and σ are treated as constants of the
/// batch when differentiating.
pub fn ewal(y: &[f64], y_hat: &[f64], cfg: &EwalConfig) -> Result<LossResult> {
    check_lengths(y, y_hat)?;
    if !(cfg.c > 0.0) || !(cfg.eps > 0.0) {
        return Err(Error::Parameter(format!("EWAL needs c > 0 and eps > 0, got c={} eps={}", cfg.c, cfg.eps)));
    }
    let errors: Vec<f64> = y.iter().zip(y_hat).map(|(a, b)| a - b).collect();
    let sigma = batch_sigma(&errors, cfg.sigma);
    let weights: Vec<f64> = errors.iter().map(|e| (-e.abs() / (sigma + cfg.eps)).exp()).collect();
    Ok(ewal_with_weights(&errors, &weights, cfg.c, sigma))
}

/// EWAL value and gradient for fixed per-element weights.
pub fn ewal_with_weights(errors: &[f64], weights: &[f64], c: f64, sigma: f64) -> LossResult {
    let n = errors.len() as f64;
    let mut value = 0.0;
    let mut grad = Vec::with_capacity(errors.len());
    for (&e, &w) in errors.iter().zip(weights) {
        value += w * rq_loss(e, c) + (1.0 - w) * log_loss(e, c);
        grad.push(-(w * rq_grad(e, c) + (1.0 - w) * log_grad(e, c)) / n);
    }
    LossResult {
        value: value / n,
        grad_wrt_pred: grad,
        batch_sigma: sigma,
        weights: weights.to_vec(),
    }
}

pub fn mse_loss(y: &[f64], y_hat: &[f64]) -> Result<LossResult> {
    check_lengths(y, y_hat)?;
    let n = y.len() as f64;
    let mut value = 0.0;
    let mut grad = Vec::with_capacity(y.len());
    for (a, b) in y.iter().zip(y_hat) {
        let e = a - b;
        value += e * e;
        grad.push(-2.0 * e / n);
    }
    Ok(LossResult {
        value: value / n,
        grad_wrt_pred: grad,
        batch_sigma: 0.0,
        weights: Vec::new(),
    })
}

pub fn mae_loss(y: &[f64], y_hat: &[f64]) -> Result<LossResult> {
    check_lengths(y, y_hat)?;
    let n = y.len() as f64;
    let mut value = 0.0;
    let mut grad = Vec::with_capacity(y.len());
    for (a, b) in y.iter().zip(y_hat) {
        let e = a - b;
        value += e.abs();
        grad.push(if e == 0.0 { 0.0 } else { -e.signum() / n });
    }
    Ok(LossResult {
        value: value / n,
        grad_wrt_pred: grad,
        batch_sigma: 0.0,
        weights: Vec::new(),
    })
}

/// Training objective selector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossKind {
    Ewal(EwalConfig),
    Mse,
    Mae,
}

impl LossKind {
    pub fn evaluate(&self, y: &[f64], y_hat: &[f64]) -> Result<LossResult> {
        match self {
            LossKind::Ewal(cfg) => ewal(y, y_hat, cfg),
            LossKind::Mse => mse_loss(y, y_hat),
            LossKind::Mae => mae_loss(y, y_hat),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LossKind::Ewal(_) => "ewal",
            LossKind::Mse => "mse",
            LossKind::Mae => "mae",
        }
    }
}
