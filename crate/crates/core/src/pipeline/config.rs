//! Run configuration: TOML with one table per stage. Every field has a
//! default, unknown keys are rejected, and [`RunConfig::validate`] runs
//! before any stage touches data.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::anomaly::Embedding;
use crate::attrib::{SelectionRule, SvrParams};
use crate::data::SynthSpec;
use crate::error::{Error, Result};
use crate::loss::{EwalConfig, LossKind, SigmaMode};
use crate::model::{Head, ModelConfig};
use crate::train::TrainConfig;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub out_dir: PathBuf,
    pub data: DataConfig,
    pub lof: LofConfig,
    pub svr: SvrConfig,
    pub shap: ShapConfig,
    pub model: ModelSection,
    pub loss: LossSection,
    pub train: TrainSection,
    pub ablation: AblationConfig,
    pub sensitivity: SensitivityConfig,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    #[default]
    Csv,
    Synthetic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub source: Source,
    pub path: Option<PathBuf>,
    /// Separate covariate file, left-joined on the timestamp.
    pub features_path: Option<PathBuf>,
    pub features_timestamp_col: String,
    pub timestamp_col: String,
    pub load_col: String,
    /// Covariates to read; absent means every other column.
    pub feature_cols: Option<Vec<String>>,
    /// Training rows; absent means everything before the test rows.
    pub train_rows: Option<usize>,
    pub test_rows: usize,
    pub synthetic: SyntheticConfig,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            source: Source::Csv,
            path: None,
            features_path: None,
            features_timestamp_col: "timestamp".into(),
            timestamp_col: "timestamp".into(),
            load_col: "load".into(),
            feature_cols: None,
            train_rows: None,
            test_rows: 100,
            synthetic: SyntheticConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub n: usize,
    pub offset: f64,
    pub daily_amplitude: f64,
    pub noise_std: f64,
    pub spike_count: usize,
    pub spike_magnitude: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        let s = SynthSpec::default();
        Self {
            n: s.n,
            offset: s.offset,
            daily_amplitude: s.daily_amplitude,
            noise_std: s.noise_std,
            spike_count: s.spike_count,
            spike_magnitude: s.spike_magnitude,
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    pub fn spec(&self) -> SynthSpec {
        SynthSpec {
            n: self.n,
            offset: self.offset,
            daily_amplitude: self.daily_amplitude,
            noise_std: self.noise_std,
            spike_count: self.spike_count,
            spike_magnitude: self.spike_magnitude,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LofConfig {
    pub k: usize,
    pub contamination: f64,
    pub embed: Embedding,
}

impl Default for LofConfig {
    fn default() -> Self {
        Self {
            k: 10,
            contamination: 0.05,
            embed: Embedding::Value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvrConfig {
    pub c: f64,
    pub epsilon: f64,
    pub gamma: Option<f64>,
    pub tol: f64,
    pub max_iter: Option<usize>,
    /// Training rows are subsampled to at most this many.
    pub max_train_rows: usize,
}

impl Default for SvrConfig {
    fn default() -> Self {
        let p = SvrParams::default();
        Self {
            c: p.c,
            epsilon: p.epsilon,
            gamma: p.gamma,
            tol: p.tol,
            max_iter: p.max_iter,
            max_train_rows: 1000,
        }
    }
}

impl SvrConfig {
    pub fn params(&self) -> SvrParams {
        SvrParams {
            c: self.c,
            epsilon: self.epsilon,
            gamma: self.gamma,
            tol: self.tol,
            max_iter: self.max_iter,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    #[default]
    Cumulative,
    TopM,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShapConfig {
    pub background: usize,
    /// Rows explained; the global importance averages over them.
    pub max_samples: usize,
    pub rule: RuleKind,
    pub tau: f64,
    pub top_m: usize,
    /// Seed for subsampling SVR rows, background and explained rows.
    pub seed: u64,
}

impl Default for ShapConfig {
    fn default() -> Self {
        Self {
            background: 64,
            max_samples: 256,
            rule: RuleKind::Cumulative,
            tau: 0.9,
            top_m: 3,
            seed: 0,
        }
    }
}

impl ShapConfig {
    pub fn rule(&self) -> SelectionRule {
        match self.rule {
            RuleKind::Cumulative => SelectionRule::Cumulative(self.tau),
            RuleKind::TopM => SelectionRule::TopM(self.top_m),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub lookback: usize,
    pub horizon: usize,
    pub patch_len: usize,
    pub stride: usize,
    pub hidden: usize,
    pub layers: usize,
    pub dropout: f64,
    pub head: Head,
    pub residual: bool,
}

impl Default for ModelSection {
    fn default() -> Self {
        let m = ModelConfig::default();
        Self {
            lookback: m.lookback,
            horizon: m.horizon,
            patch_len: m.patch_len,
            stride: m.stride,
            hidden: m.hidden,
            layers: m.layers,
            dropout: m.dropout,
            head: m.head,
            residual: m.residual,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossName {
    #[default]
    Ewal,
    Mse,
    Mae,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossSection {
    pub kind: LossName,
    pub c: f64,
    pub eps: f64,
    pub sigma: SigmaMode,
}

impl Default for LossSection {
    fn default() -> Self {
        let e = EwalConfig::default();
        Self {
            kind: LossName::Ewal,
            c: e.c,
            eps: e.eps,
            sigma: e.sigma,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub lr: f64,
    pub max_epoch: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub patience: Option<usize>,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            lr: t.lr,
            max_epoch: t.max_epoch,
            batch_size: t.batch_size,
            seed: t.seed,
            patience: t.patience,
        }
    }
}

/// Stage switches. Each `false` reproduces one "w/o" variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblationConfig {
    pub data_correction: bool,
    pub feature_selection: bool,
    pub patching: bool,
    pub gating: bool,
    pub ewal: bool,
    pub seeds: Vec<u64>,
    /// Variants run by `ablate`; see [`Variant`](super::Variant).
    pub variants: Vec<String>,
}

impl Default for AblationConfig {
    fn default() -> Self {
        Self {
            data_correction: true,
            feature_selection: true,
            patching: true,
            gating: true,
            ewal: true,
            seeds: vec![0, 1, 2, 3, 4],
            variants: super::Variant::ALL.iter().map(|v| v.key().to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensitivityConfig {
    pub max_epoch: Vec<usize>,
    pub lookback: Vec<usize>,
    pub batch_size: Vec<usize>,
}

impl Default for SensitivityConfig {
    fn default() -> Self {
        Self {
            max_epoch: vec![100, 200, 300, 400],
            lookback: vec![12, 24, 48, 96],
            batch_size: vec![32, 64, 128, 256],
        }
    }
}

impl RunConfig {
    /// Parses TOML text. Relative data paths resolve against `base`.
    pub fn from_toml(text: &str, base: Option<&Path>) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(base) = base {
            for p in [&mut cfg.data.path, &mut cfg.data.features_path].into_iter().flatten() {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        if cfg.out_dir.as_os_str().is_empty() {
            cfg.out_dir = PathBuf::from("run");
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text, path.parent()).map_err(|e| e.in_file(path))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serialisable")
    }

    /// Model shape for `dims` input channels, with ablation toggles applied.
    pub fn model_config(&self, dims: usize) -> ModelConfig {
        let m = &self.model;
        let (patch_len, stride) = if self.ablation.patching {
            (m.patch_len, m.stride)
        } else {
            (m.lookback, m.lookback)
        };
        ModelConfig {
            lookback: m.lookback,
            horizon: m.horizon,
            patch_len,
            stride,
            hidden: m.hidden,
            layers: m.layers,
            dropout: m.dropout,
            dims,
            head: m.head,
            gating: self.ablation.gating,
            residual: m.residual,
        }
    }

    /// Training objective with the `ewal` toggle applied.
    pub fn loss_kind(&self) -> LossKind {
        match (self.loss.kind, self.ablation.ewal) {
            (LossName::Ewal, true) => LossKind::Ewal(EwalConfig {
                c: self.loss.c,
                eps: self.loss.eps,
                sigma: self.loss.sigma,
            }),
            (LossName::Ewal, false) | (LossName::Mse, _) => LossKind::Mse,
            (LossName::Mae, _) => LossKind::Mae,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            lr: self.train.lr,
            max_epoch: self.train.max_epoch,
            batch_size: self.train.batch_size,
            seed: self.train.seed,
            patience: self.train.patience,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        match self.data.source {
            Source::Csv if self.data.path.is_none() => return bad("data.path is required for csv input".into()),
            Source::Synthetic if self.data.synthetic.n == 0 => return bad("data.synthetic.n must be positive".into()),
            _ => {}
        }
        if self.data.test_rows == 0 {
            return bad("data.test_rows must be positive".into());
        }
        if self.lof.k == 0 {
            return bad("lof.k must be positive".into());
        }
        if !(self.lof.contamination > 0.0 && self.lof.contamination < 0.5) {
            return bad(format!("lof.contamination {} outside (0, 0.5)", self.lof.contamination));
        }
        if !(self.svr.c > 0.0 && self.svr.epsilon >= 0.0 && self.svr.tol > 0.0) {
            return bad("svr.c and svr.tol must be positive, svr.epsilon non-negative".into());
        }
        if self.svr.gamma.is_some_and(|g| !(g > 0.0)) {
            return bad("svr.gamma must be positive".into());
        }
        if self.svr.max_train_rows < 2 || self.shap.background == 0 || self.shap.max_samples == 0 {
            return bad("svr.max_train_rows, shap.background and shap.max_samples must be positive".into());
        }
        match self.shap.rule() {
            SelectionRule::Cumulative(t) if !(t > 0.0 && t <= 1.0) => {
                return bad(format!("shap.tau {t} outside (0, 1]"));
            }
            _ => {}
        }
        self.model_config(1).validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.model.horizon > self.data.test_rows {
            return bad("model.horizon exceeds data.test_rows".into());
        }
        if !(self.loss.c > 0.0 && self.loss.eps > 0.0) {
            return bad("loss.c and loss.eps must be positive".into());
        }
        if !(self.train.lr > 0.0) || self.train.max_epoch == 0 || self.train.batch_size == 0 {
            return bad("train.lr, train.max_epoch and train.batch_size must be positive".into());
        }
        if self.ablation.seeds.is_empty() {
            return bad("ablation.seeds must not be empty".into());
        }
        for v in &self.ablation.variants {
            super::Variant::from_key(v)?;
        }
        let s = &self.sensitivity;
        if s.max_epoch.contains(&0) || s.batch_size.contains(&0) || s.lookback.iter().any(|&l| l < self.model.patch_len) {
            return bad("sensitivity grids need positive epochs and batch sizes, and look-backs of at least one patch".into());
        }
        Ok(())
    }
}
