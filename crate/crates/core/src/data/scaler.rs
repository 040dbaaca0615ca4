//! Per-column z-scoring fitted on training rows.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Scaler {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    /// Columns whose training variance was zero; their std is stored as 1.
    pub zero_variance: Vec<bool>,
}

impl Scaler {
    /// Fits on a row-major `rows x dims` matrix (population std).
    pub fn fit(train: &[f64], dims: usize) -> Result<Self> {
        let n = train.len() / dims.max(1);
        if n == 0 || dims == 0 {
            return Err(Error::InsufficientData("scaler needs at least one training row".into()));
        }
        let mut means = vec![0.0; dims];
        for row in train.chunks_exact(dims) {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= n as f64);
        let mut vars = vec![0.0; dims];
        for row in train.chunks_exact(dims) {
            for ((s, v), m) in vars.iter_mut().zip(row).zip(&means) {
                *s += (v - m) * (v - m);
            }
        }
        let mut stds = Vec::with_capacity(dims);
        let mut zero_variance = Vec::with_capacity(dims);
        for v in vars {
            let sd = (v / n as f64).sqrt();
            let flat = !(sd > 0.0) || !sd.is_finite();
            zero_variance.push(flat);
            stds.push(if flat { 1.0 } else { sd });
        }
        Ok(Self {
            means,
            stds,
            zero_variance,
        })
    }

    pub fn dims(&self) -> usize {
        self.means.len()
    }

    pub fn apply(&self, rows: &[f64]) -> Vec<f64> {
        let d = self.dims();
        rows.iter()
            .enumerate()
            .map(|(i, v)| (v - self.means[i % d]) / self.stds[i % d])
            .collect()
    }

    pub fn invert(&self, rows: &[f64]) -> Vec<f64> {
        let d = self.dims();
        rows.iter()
            .enumerate()
            .map(|(i, v)| v * self.stds[i % d] + self.means[i % d])
            .collect()
    }

    pub fn invert_value(&self, col: usize, v: f64) -> f64 {
        v * self.stds[col] + self.means[col]
    }

    pub fn apply_value(&self, col: usize, v: f64) -> f64 {
        (v - self.means[col]) / self.stds[col]
    }

    /// Plain-text `key=value` sidecar.
    pub fn to_text(&self) -> String {
        let mut s = format!("columns={}\n", self.dims());
        for i in 0..self.dims() {
            let _ = writeln!(s, "mean.{i}={}", self.means[i]);
            let _ = writeln!(s, "std.{i}={}", self.stds[i]);
            let _ = writeln!(s, "zero_variance.{i}={}", self.zero_variance[i]);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut kv = std::collections::HashMap::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("scaler: expected key=value, got `{line}`")))?;
            kv.insert(k.trim().to_string(), v.trim().to_string());
        }
        let get = |k: &str| {
            kv.get(k)
                .ok_or_else(|| Error::Format(format!("scaler: missing key `{k}`")))
        };
        let num = |k: &str| -> Result<f64> {
            get(k)?
                .parse()
                .map_err(|_| Error::Format(format!("scaler: bad number for `{k}`")))
        };
        let d: usize = get("columns")?
            .parse()
            .map_err(|_| Error::Format("scaler: bad column count".into()))?;
        let mut s = Self {
            means: Vec::with_capacity(d),
            stds: Vec::with_capacity(d),
            zero_variance: Vec::with_capacity(d),
        };
        for i in 0..d {
            s.means.push(num(&format!("mean.{i}"))?);
            s.stds.push(num(&format!("std.{i}"))?);
            s.zero_variance.push(get(&format!("zero_variance.{i}"))? == "true");
        }
        Ok(s)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text).map_err(|e| e.in_file(path))
    }
}

/// Fits on `train_rows`, returns the fitted scaler and all rows scaled.
pub fn fit_apply_scaler(train_rows: &[f64], all_rows: &[f64], dims: usize) -> Result<(Scaler, Vec<f64>)> {
    let s = Scaler::fit(train_rows, dims)?;
    let scaled = s.apply(all_rows);
    Ok((s, scaled))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{seeded, Rng};

    #[test]
    fn hand_z_score() {
        let (s, out) = fit_apply_scaler(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0], 1).unwrap();
        assert!((s.means[0] - 2.0).abs() < 1e-15);
        assert!((s.stds[0] - 0.816496580927726).abs() < 1e-12);
        let expect = [-1.224744871391589, 0.0, 1.224744871391589];
        for (a, b) in out.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_column_is_flagged() {
        let (s, out) = fit_apply_scaler(&[5.0, 1.0, 5.0, 2.0], &[5.0, 1.0, 5.0, 2.0], 2).unwrap();
        assert_eq!(s.zero_variance, vec![true, false]);
        assert_eq!(out[0], 0.0);
        assert_eq!(out[2], 0.0);
    }

    #[test]
    fn round_trip() {
        let mut rng = seeded(11);
        let m: Vec<f64> = (0..500).map(|_| rng.random_range(-10.0..10.0)).collect();
        let s = Scaler::fit(&m[..250], 5).unwrap();
        let back = s.invert(&s.apply(&m));
        let err = m.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn uses_training_rows_only() {
        let (s, _) = fit_apply_scaler(&[0.0, 2.0], &[0.0, 2.0, 100.0], 1).unwrap();
        assert_eq!(s.means[0], 1.0);
    }

    #[test]
    fn sidecar_round_trip() {
        let s = Scaler::fit(&[0.1, 3.0, 0.7, 3.0, -2.5, 3.0], 2).unwrap();
        assert_eq!(Scaler::from_text(&s.to_text()).unwrap(), s);
        assert!(Scaler::from_text("columns=1\nmean.0=1\n").is_err());
    }
}
