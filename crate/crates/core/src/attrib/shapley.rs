//! Exact Shapley attribution by coalition enumeration.
//!
//! The value of a coalition S for a sample x is the mean model output over
//! the background rows with the features in S fixed to x (marginal
//! expectation). All `2^F` coalition values are computed once per sample;
//! each feature's attribution is then the weighted sum of its marginal
//! contributions `v(S ∪ {i}) - v(S)` over the `2^(F-1)` coalitions without i.

use rayon::prelude::*;

use crate::error::{Error, Result};

pub const MAX_EXACT_FEATURES: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct ShapleyAttribution {
    /// Row-major `N x F`.
    pub phi: Vec<f64>,
    pub features: usize,
    /// Model output averaged over the background.
    pub baseline: f64,
    pub global_importance: Vec<f64>,
    /// Model output at each explained sample.
    pub outputs: Vec<f64>,
}

impl ShapleyAttribution {
    pub fn row(&self, j: usize) -> &[f64] {
        &self.phi[j * self.features..(j + 1) * self.features]
    }

    pub fn samples(&self) -> usize {
        self.outputs.len()
    }

    /// Largest |Σφ - (M(x) - baseline)| over samples.
    pub fn efficiency_gap(&self) -> f64 {
        (0..self.samples())
            .map(|j| (self.row(j).iter().sum::<f64>() - (self.outputs[j] - self.baseline)).abs())
            .fold(0.0, f64::max)
    }
}

/// `|S|! (F - |S| - 1)! / F!` indexed by `|S|`.
fn coalition_weights(f: usize) -> Vec<f64> {
    let fact = |n: usize| (1..=n).map(|v| v as f64).product::<f64>();
    let total = fact(f);
    (0..f).map(|s| fact(s) * fact(f - s - 1) / total).collect()
}

fn check(f: usize, sample: &[f64], background: &[f64]) -> Result<usize> {
    if f > MAX_EXACT_FEATURES {
        return Err(Error::Intractable(f));
    }
    if f == 0 || sample.len() != f || background.is_empty() || background.len() % f != 0 {
        return Err(Error::Contract(format!(
            "Shapley: sample of {} values, background of {} values, F={f}",
            sample.len(),
            background.len()
        )));
    }
    Ok(background.len() / f)
}

/// `v(S)` for every coalition mask `S` (bit i set = feature i taken from the sample).
pub fn coalition_values<M>(model: &M, sample: &[f64], background: &[f64]) -> Result<Vec<f64>>
where
    M: Fn(&[f64]) -> f64,
{
    let f = sample.len();
    let b = check(f, sample, background)?;
    let mut point = vec![0.0; f];
    let values = (0..1usize << f)
        .map(|mask| {
            let mut acc = 0.0;
            for row in background.chunks_exact(f) {
                for k in 0..f {
                    point[k] = if mask >> k & 1 == 1 { sample[k] } else { row[k] };
                }
                acc += model(&point);
            }
            acc / b as f64
        })
        .collect();
    Ok(values)
}

pub fn shapley_from_values(values: &[f64], f: usize) -> Vec<f64> {
    let w = coalition_weights(f);
    (0..f)
        .map(|i| {
            let bit = 1usize << i;
            (0..1usize << f)
                .filter(|m| m & bit == 0)
                .map(|m| w[m.count_ones() as usize] * (values[m | bit] - values[m]))
                .sum()
        })
        .collect()
}

/// Attribution of one sample.
pub fn shapley_values<M>(model: &M, sample: &[f64], background: &[f64]) -> Result<Vec<f64>>
where
    M: Fn(&[f64]) -> f64,
{
    let values = coalition_values(model, sample, background)?;
    Ok(shapley_from_values(&values, sample.len()))
}

/// `I_i = mean_j |φ_i^(j)|` over a row-major `N x F` matrix.
pub fn global_importance(phi: &[f64], features: usize) -> Vec<f64> {
    let n = phi.len() / features.max(1);
    let mut out = vec![0.0; features];
    if n == 0 {
        return out;
    }
    for row in phi.chunks_exact(features) {
        for (o, v) in out.iter_mut().zip(row) {
            *o += v.abs();
        }
    }
    out.iter_mut().for_each(|o| *o /= n as f64);
    out
}

/// Attributes every row of `samples` (row-major `N x F`).
pub fn explain<M>(model: &M, samples: &[f64], background: &[f64], features: usize) -> Result<ShapleyAttribution>
where
    M: Fn(&[f64]) -> f64 + Sync,
{
    if features == 0 || samples.len() % features != 0 {
        return Err(Error::Contract("Shapley: ragged sample matrix".into()));
    }
    let rows: Vec<&[f64]> = samples.chunks_exact(features).collect();
    let per_sample: Vec<(Vec<f64>, f64, f64)> = rows
        .par_iter()
        .map(|x| {
            let values = coalition_values(model, x, background)?;
            let full = values[(1 << features) - 1];
            let empty = values[0];
            Ok((shapley_from_values(&values, features), full, empty))
        })
        .collect::<Result<_>>()?;

    let baseline = match per_sample.first() {
        Some(p) => p.2,
        None => {
            check(features, &vec![0.0; features], background)?;
            let b = background.len() / features;
            background.chunks_exact(features).map(model).sum::<f64>() / b as f64
        }
    };
    let mut phi = Vec::with_capacity(samples.len());
    let mut outputs = Vec::with_capacity(rows.len());
    for (p, full, _) in per_sample {
        phi.extend(p);
        outputs.push(full);
    }
    let global_importance = global_importance(&phi, features);
    Ok(ShapleyAttribution {
        phi,
        features,
        baseline,
        global_importance,
        outputs,
    })
}
