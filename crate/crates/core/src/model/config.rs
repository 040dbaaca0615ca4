use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// What maps the fused representation to the forecast.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Head {
    /// `ŷ = W C + b`.
    #[default]
    Linear,
    /// A second GRU reads `[u_i ‖ C]` for every patch; its final state
    /// feeds the linear layer.
    DecoderGru,
}

impl fmt::Display for Head {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Head::Linear => "linear",
            Head::DecoderGru => "decoder_gru",
        })
    }
}

impl FromStr for Head {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Head::Linear),
            "decoder_gru" => Ok(Head::DecoderGru),
            other => Err(Error::Config(format!("unknown head `{other}` (linear | decoder_gru)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub lookback: usize,
    pub horizon: usize,
    pub patch_len: usize,
    pub stride: usize,
    pub hidden: usize,
    pub layers: usize,
    pub dropout: f64,
    /// Input channels per time step (load plus covariates).
    pub dims: usize,
    pub head: Head,
    /// `false` replaces the learned gate by uniform average pooling.
    pub gating: bool,
    /// `false` drops the projected raw-patch shortcut (`u_i = h_i`).
    pub residual: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            lookback: 24,
            horizon: 1,
            patch_len: 4,
            stride: 2,
            hidden: 64,
            layers: 2,
            dropout: 0.2,
            dims: 1,
            head: Head::Linear,
            gating: true,
            residual: true,
        }
    }
}

impl ModelConfig {
    pub fn patch_count(&self) -> usize {
        (self.lookback - self.patch_len) / self.stride + 1
    }

    pub fn flat_patch(&self) -> usize {
        self.patch_len * self.dims
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Parameter(m));
        if self.lookback == 0 || self.horizon == 0 || self.hidden == 0 || self.dims == 0 {
            return bad("lookback, horizon, hidden and dims must be positive".into());
        }
        if self.patch_len == 0 || self.patch_len > self.lookback {
            return bad(format!(
                "patch length {} must lie in 1..={}",
                self.patch_len, self.lookback
            ));
        }
        if self.stride == 0 {
            return bad("stride must be positive".into());
        }
        if self.layers == 0 {
            return bad("at least one GRU layer is required".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} outside [0, 1)", self.dropout));
        }
        Ok(())
    }
}
