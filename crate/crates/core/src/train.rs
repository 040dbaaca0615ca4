//! Mini-batch Adam training of [`PifNet`].

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::data::WindowSet;
use crate::error::{Error, Result};
use crate::loss::LossKind;
use crate::model::{ForwardTrace, Mode, PifNet, PifNetParams};
use crate::numerics::{AdamConfig, AdamState};
use crate::rng::{streams, substream, Rng};

/// Samples per parallel work unit. Gradients are summed within a chunk and
/// then across chunks in index order, so results do not depend on the
/// thread count.
const CHUNK: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub max_epoch: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Stop after this many epochs without a lower epoch loss.
    pub patience: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            max_epoch: 300,
            batch_size: 64,
            seed: 0,
            patience: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    /// Mean training objective over batches, weighted by batch size.
    pub loss: f64,
    /// Mean squared error of the train-mode predictions.
    pub mse: f64,
}

impl EpochLog {
    pub const CSV_HEADER: &'static str = "epoch,loss,mse";

    pub fn csv_row(&self) -> String {
        format!("{},{:e},{:e}", self.epoch, self.loss, self.mse)
    }
}

/// Training stopped on a non-finite loss. `net` holds the parameters from
/// the end of the last finite epoch.
#[derive(Debug)]
pub struct Divergence {
    pub error: Error,
    pub log: Vec<EpochLog>,
}

/// Trains `net` in place on the windows listed in `indices`.
///
/// On a non-finite loss or parameter update the parameters are rolled back
/// to the last completed epoch and a [`Divergence`] is returned.
pub fn train(
    net: &mut PifNet,
    windows: &WindowSet,
    indices: &[usize],
    loss: &LossKind,
    cfg: &TrainConfig,
) -> std::result::Result<Vec<EpochLog>, Box<Divergence>> {
    train_with(net, windows, indices, loss, cfg, |_| {})
}

/// As [`train`], calling `on_epoch` after each completed epoch.
pub fn train_with<F: FnMut(&EpochLog)>(
    net: &mut PifNet,
    windows: &WindowSet,
    indices: &[usize],
    loss: &LossKind,
    cfg: &TrainConfig,
    mut on_epoch: F,
) -> std::result::Result<Vec<EpochLog>, Box<Divergence>> {
    let fail = |error, log| Err(Box::new(Divergence { error, log }));
    if indices.is_empty() || cfg.batch_size == 0 {
        return fail(Error::InsufficientData("no training windows".into()), Vec::new());
    }
    if !(cfg.lr > 0.0 && cfg.lr.is_finite()) {
        return fail(Error::Parameter(format!("learning rate {} must be positive", cfg.lr)), Vec::new());
    }
    let mut adam = AdamState::new(
        AdamConfig {
            lr: cfg.lr,
            ..AdamConfig::default()
        },
        net.params.tensors(),
    );
    let mut shuffle_rng = substream(cfg.seed, streams::SHUFFLE);
    let mut dropout_rng = substream(cfg.seed, streams::DROPOUT);
    let mut order = indices.to_vec();
    let mut log = Vec::with_capacity(cfg.max_epoch);
    let mut last_good = net.params.clone();
    let mut best = f64::INFINITY;
    let mut stale = 0;

    for epoch in 1..=cfg.max_epoch {
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        let mut sq_sum = 0.0;
        let mut count = 0usize;
        let mut diverged = false;
        for batch in order.chunks(cfg.batch_size) {
            let seeds: Vec<u64> = batch.iter().map(|_| dropout_rng.random()).collect();
            match step(net, &mut adam, windows, batch, &seeds, loss) {
                Ok((value, sq)) if value.is_finite() && net.params.is_finite() => {
                    loss_sum += value * batch.len() as f64;
                    sq_sum += sq;
                    count += batch.len();
                }
                _ => {
                    diverged = true;
                    break;
                }
            }
        }
        if diverged {
            net.params = last_good;
            return fail(Error::Diverged { epoch }, log);
        }
        let entry = EpochLog {
            epoch,
            loss: loss_sum / count as f64,
            mse: sq_sum / (count * windows.horizon) as f64,
        };
        on_epoch(&entry);
        log.push(entry);
        last_good.clone_from(&net.params);
        if let Some(patience) = cfg.patience {
            if entry.loss < best {
                best = entry.loss;
                stale = 0;
            } else {
                stale += 1;
                if stale >= patience {
                    break;
                }
            }
        }
    }
    Ok(log)
}

/// One optimiser step on `batch`. Returns the objective and the summed
/// squared error.
fn step(
    net: &mut PifNet,
    adam: &mut AdamState,
    windows: &WindowSet,
    batch: &[usize],
    seeds: &[u64],
    loss: &LossKind,
) -> Result<(f64, f64)> {
    let model = &*net;
    let dropout = model.config.dropout > 0.0;
    let traces: Vec<ForwardTrace> = batch
        .par_iter()
        .zip(seeds)
        .map(|(&i, &seed)| {
            let mode = if dropout { Mode::Train { seed } } else { Mode::Eval };
            model.forward(windows.input(i), mode)
        })
        .collect::<Result<_>>()?;
    let horizon = windows.horizon;
    let y: Vec<f64> = batch.iter().flat_map(|&i| windows.target(i).iter().copied()).collect();
    let y_hat: Vec<f64> = traces.iter().flat_map(|t| t.y_hat.iter().copied()).collect();
    let res = loss.evaluate(&y, &y_hat)?;
    let sq: f64 = y.iter().zip(&y_hat).map(|(a, b)| (a - b).powi(2)).sum();

    let partials: Vec<PifNetParams> = traces
        .par_chunks(CHUNK)
        .zip(res.grad_wrt_pred.par_chunks(CHUNK * horizon))
        .map(|(ts, gs)| {
            let mut g = model.params.zeros_like();
            for (t, d) in ts.iter().zip(gs.chunks(horizon)) {
                model.backward(t, d, &mut g)?;
            }
            Ok(g)
        })
        .collect::<Result<_>>()?;
    let mut iter = partials.into_iter();
    let mut grads = iter.next().expect("non-empty batch");
    for g in iter {
        grads.add_assign(&g);
    }
    let grad_refs = grads.tensors();
    adam.step(&mut net.params.tensors_mut(), &grad_refs)?;
    Ok((res.value, sq))
}

/// Eval-mode forecasts for `indices`, flattened `len x T`.
pub fn predict(net: &PifNet, windows: &WindowSet, indices: &[usize]) -> Result<Vec<f64>> {
    let per: Vec<Vec<f64>> = indices.par_iter().map(|&i| net.forecast(windows.input(i))).collect::<Result<_>>()?;
    Ok(per.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;

    fn sine_windows() -> WindowSet {
        let data: Vec<f64> = (0..400).map(|t| (t as f64 * std::f64::consts::TAU / 24.0).sin()).collect();
        WindowSet::from_matrix(&data, 1, 24, 1).unwrap()
    }

    fn small() -> ModelConfig {
        ModelConfig {
            hidden: 8,
            layers: 1,
            dropout: 0.0,
            ..ModelConfig::default()
        }
    }

    #[test]
    fn learns_a_noiseless_sinusoid() {
        let w = sine_windows();
        let idx: Vec<usize> = (0..w.len()).collect();
        let mut net = PifNet::new(small(), 0).unwrap();
        let cfg = TrainConfig {
            lr: 1e-2,
            max_epoch: 50,
            batch_size: 32,
            ..TrainConfig::default()
        };
        let log = train(&mut net, &w, &idx, &LossKind::Mse, &cfg).unwrap();
        assert_eq!(log.len(), 50);
        let p = predict(&net, &w, &idx).unwrap();
        let mse: f64 = idx.iter().map(|&i| (p[i] - w.target(i)[0]).powi(2)).sum::<f64>() / idx.len() as f64;
        assert!(mse < 1e-2, "mse {mse}");
    }

    #[test]
    fn same_seed_same_log_and_params() {
        let w = sine_windows();
        let idx: Vec<usize> = (0..w.len()).collect();
        let cfg = TrainConfig {
            max_epoch: 3,
            batch_size: 16,
            seed: 4,
            ..TrainConfig::default()
        };
        let model = ModelConfig {
            layers: 2,
            dropout: 0.2,
            ..small()
        };
        let run = || {
            let mut net = PifNet::new(model.clone(), 1).unwrap();
            let log = train(&mut net, &w, &idx, &LossKind::Ewal(Default::default()), &cfg).unwrap();
            (log, net.params)
        };
        let (a, pa) = run();
        let (b, pb) = run();
        assert_eq!(a, b);
        assert_eq!(pa, pb);
    }

    #[test]
    fn divergence_restores_last_good_parameters() {
        let w = sine_windows();
        let idx: Vec<usize> = (0..w.len()).collect();
        let mut net = PifNet::new(small(), 0).unwrap();
        let cfg = TrainConfig {
            lr: 1e300,
            max_epoch: 5,
            batch_size: 400,
            ..TrainConfig::default()
        };
        let start = net.params.clone();
        let err = train(&mut net, &w, &idx, &LossKind::Mse, &cfg).unwrap_err();
        assert!(matches!(err.error, Error::Diverged { .. }));
        assert!(net.params.is_finite());
        if err.log.is_empty() {
            assert_eq!(net.params, start);
        }
    }
}
