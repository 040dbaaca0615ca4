//! Multi-run protocols: the stage ablation and the one-at-a-time
//! hyperparameter sweeps.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metrics::{format_table, sensitivity_std, MetricsReport, METRIC_NAMES};

use super::config::RunConfig;
use super::stages::{prepare_run_dir, run_evaluate, run_preprocess, run_select_features, run_train, write, CORRECTED_CSV, SELECTED_TXT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Full,
    NoDataCorrection,
    NoFeatureSelection,
    NoPatching,
    NoGating,
    NoLoss,
    /// Single patch, uniform pooling, no residual projection, MSE loss.
    PlainGru,
}

impl Variant {
    pub const ALL: [Variant; 7] = [
        Variant::Full,
        Variant::NoDataCorrection,
        Variant::NoFeatureSelection,
        Variant::NoPatching,
        Variant::NoGating,
        Variant::NoLoss,
        Variant::PlainGru,
    ];

    /// The full model and the five single-stage removals.
    pub const ABLATION: [Variant; 6] = [
        Variant::Full,
        Variant::NoDataCorrection,
        Variant::NoFeatureSelection,
        Variant::NoPatching,
        Variant::NoGating,
        Variant::NoLoss,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::NoDataCorrection => "no_data_correction",
            Variant::NoFeatureSelection => "no_feature_selection",
            Variant::NoPatching => "no_patching",
            Variant::NoGating => "no_gating",
            Variant::NoLoss => "no_loss",
            Variant::PlainGru => "plain_gru",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Variant::Full => "PIF-Net",
            Variant::NoDataCorrection => "w/o Data Correction",
            Variant::NoFeatureSelection => "w/o Feature Selection",
            Variant::NoPatching => "w/o Patch Processing",
            Variant::NoGating => "w/o Gating Mechanism",
            Variant::NoLoss => "w/o Loss function",
            Variant::PlainGru => "GRU baseline",
        }
    }

    pub fn from_key(key: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.key() == key)
            .ok_or_else(|| Error::Config(format!("unknown ablation variant `{key}`")))
    }

    /// `base` with this variant's switches applied on top.
    pub fn apply(self, base: &RunConfig) -> RunConfig {
        let mut c = base.clone();
        let a = &mut c.ablation;
        match self {
            Variant::Full => {}
            Variant::NoDataCorrection => a.data_correction = false,
            Variant::NoFeatureSelection => a.feature_selection = false,
            Variant::NoPatching => a.patching = false,
            Variant::NoGating => a.gating = false,
            Variant::NoLoss => a.ewal = false,
            Variant::PlainGru => {
                a.patching = false;
                a.gating = false;
                a.ewal = false;
                c.model.residual = false;
            }
        }
        c
    }
}

/// Median of each metric over the successful runs.
pub fn median_metrics(reports: &[&MetricsReport]) -> Option<[f64; 7]> {
    if reports.is_empty() {
        return None;
    }
    let mut out = [0.0; 7];
    for (m, slot) in out.iter_mut().enumerate() {
        let mut v: Vec<f64> = reports.iter().map(|r| r.values()[m]).collect();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        *slot = if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) };
    }
    Some(out)
}

#[derive(Debug, Clone)]
pub struct AblationRun {
    pub variant: Variant,
    pub seed: u64,
    pub outcome: std::result::Result<MetricsReport, String>,
}

#[derive(Debug, Clone)]
pub struct AblationReport {
    pub runs: Vec<AblationRun>,
    /// Per variant, median metrics over successful seeds.
    pub medians: Vec<(Variant, Option<[f64; 7]>)>,
}

impl AblationReport {
    pub fn median(&self, v: Variant) -> Option<[f64; 7]> {
        self.medians.iter().find(|m| m.0 == v).and_then(|m| m.1)
    }

    pub fn metrics(&self, v: Variant) -> Vec<(u64, &MetricsReport)> {
        self.runs
            .iter()
            .filter(|r| r.variant == v)
            .filter_map(|r| r.outcome.as_ref().ok().map(|m| (r.seed, m)))
            .collect()
    }
}

fn copy_into(from: &Path, to: &Path, name: &str) -> Result<()> {
    let src = from.join(name);
    let dst = to.join(name);
    fs::copy(&src, &dst).map(|_| ()).map_err(|e| Error::io(&src, e))
}

/// Preprocess and feature selection once in `dir`.
fn shared_stages(cfg: &RunConfig) -> Result<()> {
    run_preprocess(cfg)?;
    run_select_features(cfg)?;
    Ok(())
}

/// Train and evaluate in `cfg.out_dir`, reusing the shared stage outputs
/// from `shared`.
fn train_eval(cfg: &RunConfig, shared: &Path) -> Result<MetricsReport> {
    let dir = prepare_run_dir(cfg)?;
    copy_into(shared, &dir, CORRECTED_CSV)?;
    copy_into(shared, &dir, SELECTED_TXT)?;
    run_train(cfg)?;
    Ok(run_evaluate(cfg, None)?.model)
}

fn metric_cells(values: &[f64; 7]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

/// Every configured variant over every seed, under `out_dir/ablation`.
/// A failing run is recorded and does not stop the others.
pub fn run_ablation(cfg: &RunConfig) -> Result<AblationReport> {
    let root = prepare_run_dir(cfg)?.join("ablation");
    let variants: Vec<Variant> = cfg.ablation.variants.iter().map(|k| Variant::from_key(k)).collect::<Result<_>>()?;

    let shared: Vec<(Variant, std::result::Result<(), String>)> = variants
        .par_iter()
        .map(|&v| {
            let mut c = v.apply(cfg);
            c.out_dir = root.join(v.key());
            (v, shared_stages(&c).map_err(|e| e.to_string()))
        })
        .collect();

    let jobs: Vec<(Variant, u64)> = variants
        .iter()
        .flat_map(|&v| cfg.ablation.seeds.iter().map(move |&s| (v, s)))
        .collect();
    let runs: Vec<AblationRun> = jobs
        .par_iter()
        .map(|&(variant, seed)| {
            let base = root.join(variant.key());
            let prior = &shared.iter().find(|s| s.0 == variant).expect("one entry per variant").1;
            let outcome = match prior {
                Err(e) => Err(e.clone()),
                Ok(()) => {
                    let mut c = variant.apply(cfg);
                    c.train.seed = seed;
                    c.out_dir = base.join(format!("seed{seed}"));
                    train_eval(&c, &base).map_err(|e| e.to_string())
                }
            };
            AblationRun { variant, seed, outcome }
        })
        .collect();

    let medians: Vec<(Variant, Option<[f64; 7]>)> = variants
        .iter()
        .map(|&v| {
            let ok: Vec<&MetricsReport> = runs
                .iter()
                .filter(|r| r.variant == v)
                .filter_map(|r| r.outcome.as_ref().ok())
                .collect();
            (v, median_metrics(&ok))
        })
        .collect();

    let header = METRIC_NAMES.join(",");
    let mut csv = format!("variant,seed,status,{header}\n");
    for r in &runs {
        match &r.outcome {
            Ok(m) => {
                let _ = writeln!(csv, "{},{},ok,{}", r.variant.key(), r.seed, metric_cells(&m.values()));
            }
            Err(e) => {
                let _ = writeln!(csv, "{},{},\"error: {}\",{}", r.variant.key(), r.seed, e.replace('"', "'"), ",".repeat(6));
            }
        }
    }
    write(&root.join("runs.csv"), csv)?;

    let mut summary = format!("variant,label,runs,{header}\n");
    let mut table = Vec::new();
    for (v, m) in &medians {
        let n = runs.iter().filter(|r| r.variant == *v && r.outcome.is_ok()).count();
        match m {
            Some(vals) => {
                let _ = writeln!(summary, "{},{},{n},{}", v.key(), v.label(), metric_cells(vals));
                table.push((v.label().to_string(), report_from(vals)));
            }
            None => {
                let _ = writeln!(summary, "{},{},0,{}", v.key(), v.label(), ",".repeat(6));
            }
        }
    }
    write(&root.join("summary.csv"), summary)?;
    write(&root.join("summary.txt"), format_table(&table))?;
    Ok(AblationReport { runs, medians })
}

fn report_from(v: &[f64; 7]) -> MetricsReport {
    MetricsReport {
        mae: v[0],
        mse: v[1],
        rmse: v[2],
        mape_percent: v[3],
        r2: v[4],
        ia: v[5],
        u1: v[6],
        n: 0,
        mape_excluded: 0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sweep {
    MaxEpoch,
    Lookback,
    BatchSize,
}

impl Sweep {
    pub const ALL: [Sweep; 3] = [Sweep::MaxEpoch, Sweep::Lookback, Sweep::BatchSize];

    pub fn key(self) -> &'static str {
        match self {
            Sweep::MaxEpoch => "max_epoch",
            Sweep::Lookback => "lookback",
            Sweep::BatchSize => "batch_size",
        }
    }

    fn grid(self, cfg: &RunConfig) -> &[usize] {
        match self {
            Sweep::MaxEpoch => &cfg.sensitivity.max_epoch,
            Sweep::Lookback => &cfg.sensitivity.lookback,
            Sweep::BatchSize => &cfg.sensitivity.batch_size,
        }
    }

    fn apply(self, cfg: &RunConfig, value: usize) -> RunConfig {
        let mut c = cfg.clone();
        match self {
            Sweep::MaxEpoch => c.train.max_epoch = value,
            Sweep::Lookback => c.model.lookback = value,
            Sweep::BatchSize => c.train.batch_size = value,
        }
        c
    }
}

#[derive(Debug, Clone)]
pub struct SensitivityCell {
    pub sweep: Sweep,
    pub value: usize,
    pub outcome: std::result::Result<MetricsReport, String>,
}

#[derive(Debug, Clone)]
pub struct SensitivityReport {
    pub cells: Vec<SensitivityCell>,
    /// Population STD of each metric across a sweep's successful cells.
    pub spread: Vec<(Sweep, [f64; 7])>,
}

/// Varies one hyperparameter at a time with the others held at their
/// configured values, under `out_dir/sensitivity`.
pub fn run_sensitivity(cfg: &RunConfig) -> Result<SensitivityReport> {
    let root = prepare_run_dir(cfg)?.join("sensitivity");
    let mut base = cfg.clone();
    base.out_dir = root.join("base");
    shared_stages(&base)?;

    let jobs: Vec<(Sweep, usize)> = Sweep::ALL
        .iter()
        .flat_map(|&s| s.grid(cfg).iter().map(move |&v| (s, v)))
        .collect();
    let cells: Vec<SensitivityCell> = jobs
        .par_iter()
        .map(|&(sweep, value)| {
            let mut c = sweep.apply(cfg, value);
            c.out_dir = root.join(format!("{}_{value}", sweep.key()));
            let outcome = train_eval(&c, &base.out_dir).map_err(|e| e.to_string());
            SensitivityCell { sweep, value, outcome }
        })
        .collect();

    let spread: Vec<(Sweep, [f64; 7])> = Sweep::ALL
        .iter()
        .map(|&s| {
            let ok: Vec<[f64; 7]> = cells
                .iter()
                .filter(|c| c.sweep == s)
                .filter_map(|c| c.outcome.as_ref().ok().map(|m| m.values()))
                .collect();
            let mut out = [0.0; 7];
            for (m, slot) in out.iter_mut().enumerate() {
                *slot = sensitivity_std(&ok.iter().map(|v| v[m]).collect::<Vec<_>>());
            }
            (s, out)
        })
        .collect();

    let header = METRIC_NAMES.join(",");
    let mut csv = format!("sweep,value,status,{header}\n");
    for c in &cells {
        match &c.outcome {
            Ok(m) => {
                let _ = writeln!(csv, "{},{},ok,{}", c.sweep.key(), c.value, metric_cells(&m.values()));
            }
            Err(e) => {
                let _ = writeln!(csv, "{},{},\"error: {}\",{}", c.sweep.key(), c.value, e.replace('"', "'"), ",".repeat(6));
            }
        }
    }
    write(&root.join("cells.csv"), csv)?;
    let mut std_csv = format!("sweep,{header}\n");
    let mut table = Vec::new();
    for (s, v) in &spread {
        let _ = writeln!(std_csv, "{},{}", s.key(), metric_cells(v));
        table.push((format!("STD {}", s.key()), report_from(v)));
    }
    write(&root.join("std.csv"), std_csv)?;
    write(&root.join("std.txt"), format_table(&table))?;
    Ok(SensitivityReport { cells, spread })
}
