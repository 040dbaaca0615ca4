//! Checkpoints: a binary tensor snapshot plus a `key=value` manifest that
//! pins the shapes the snapshot was trained for.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::numerics::snapshot;

use super::config::ModelConfig;
use super::network::{PifNet, PifNetParams};

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub config: ModelConfig,
    pub load: String,
    pub features: Vec<String>,
}

impl Manifest {
    pub fn to_text(&self) -> String {
        let c = &self.config;
        let mut s = String::new();
        let _ = writeln!(s, "lookback={}", c.lookback);
        let _ = writeln!(s, "horizon={}", c.horizon);
        let _ = writeln!(s, "patch_len={}", c.patch_len);
        let _ = writeln!(s, "stride={}", c.stride);
        let _ = writeln!(s, "hidden={}", c.hidden);
        let _ = writeln!(s, "layers={}", c.layers);
        let _ = writeln!(s, "dropout={}", c.dropout);
        let _ = writeln!(s, "dims={}", c.dims);
        let _ = writeln!(s, "head={}", c.head);
        let _ = writeln!(s, "gating={}", c.gating);
        let _ = writeln!(s, "residual={}", c.residual);
        let _ = writeln!(s, "load={}", self.load);
        let _ = writeln!(s, "features={}", self.features.join(","));
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut kv = HashMap::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("manifest: expected key=value, got `{line}`")))?;
            kv.insert(k.trim(), v.trim());
        }
        let get = |k: &str| kv.get(k).copied().ok_or_else(|| Error::Format(format!("manifest: missing `{k}`")));
        fn parse<T: std::str::FromStr>(k: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| Error::Format(format!("manifest: bad value `{v}` for `{k}`")))
        }
        let p = |k: &str| -> Result<usize> { parse(k, get(k)?) };
        let b = |k: &str| -> Result<bool> { parse(k, get(k)?) };
        let config = ModelConfig {
            lookback: p("lookback")?,
            horizon: p("horizon")?,
            patch_len: p("patch_len")?,
            stride: p("stride")?,
            hidden: p("hidden")?,
            layers: p("layers")?,
            dropout: parse("dropout", get("dropout")?)?,
            dims: p("dims")?,
            head: get("head")?.parse()?,
            gating: b("gating")?,
            residual: b("residual")?,
        };
        let features = get("features")?;
        Ok(Self {
            config,
            load: get("load")?.to_string(),
            features: if features.is_empty() {
                Vec::new()
            } else {
                features.split(',').map(str::to_string).collect()
            },
        })
    }
}

fn manifest_path(bin: &Path) -> PathBuf {
    bin.with_extension("manifest")
}

/// Writes `path` (tensors) and `path.with_extension("manifest")`.
pub fn save_checkpoint(path: &Path, net: &PifNet, load: &str, features: &[String]) -> Result<()> {
    let manifest = Manifest {
        config: net.config.clone(),
        load: load.to_string(),
        features: features.to_vec(),
    };
    let named = net.params.named();
    let refs: Vec<(&str, &crate::numerics::Tensor)> = named.iter().map(|(n, t)| (n.as_str(), *t)).collect();
    snapshot::write(path, &refs)?;
    let mp = manifest_path(path);
    std::fs::write(&mp, manifest.to_text()).map_err(|e| Error::io(&mp, e))
}

/// Loads a checkpoint. Shape or name disagreement between manifest and
/// snapshot is a contract error.
pub fn load_checkpoint(path: &Path) -> Result<(PifNet, Manifest)> {
    let mp = manifest_path(path);
    let text = std::fs::read_to_string(&mp).map_err(|e| Error::io(&mp, e))?;
    let manifest = Manifest::from_text(&text).map_err(|e| e.in_file(&mp))?;
    let tensors = snapshot::read(path)?;
    let mut params = PifNetParams::zeros(&manifest.config);
    let expected: Vec<(String, Vec<usize>)> = params
        .named()
        .into_iter()
        .map(|(n, t)| (n, t.shape().to_vec()))
        .collect();
    if expected.len() != tensors.len() {
        return Err(Error::Contract(format!(
            "checkpoint has {} arrays, manifest implies {}",
            tensors.len(),
            expected.len()
        )));
    }
    for ((en, es), (name, t)) in expected.iter().zip(&tensors) {
        if en != name || es.as_slice() != t.shape() {
            return Err(Error::Contract(format!(
                "checkpoint array `{name}` {:?} does not match `{en}` {es:?}",
                t.shape()
            )));
        }
    }
    for (dst, (_, src)) in params.tensors_mut().into_iter().zip(tensors) {
        *dst = src;
    }
    if !params.is_finite() {
        return Err(Error::NonFinite("checkpoint parameters".into()));
    }
    Ok((PifNet::from_params(manifest.config.clone(), params)?, manifest))
}
