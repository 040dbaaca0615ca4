//! Patch-wise GRU encoder with residual projection, softmax gating and a
//! forecasting head.

use crate::error::{Error, Result};
use crate::numerics::{dot, matvec_acc, matvec_t_acc, outer_acc, softmax, Tensor};
use crate::rng::{streams, substream, Rng, SeededRng};

use super::config::{Head, ModelConfig};
use super::gru::{GruCache, GruLayer};
use super::patch::patchify;

#[derive(Debug, Clone, PartialEq)]
pub struct PifNetParams {
    pub gru: Vec<GruLayer>,
    /// `H x (P_L D)`
    pub w_res: Tensor,
    pub b_res: Tensor,
    /// `1 x H`
    pub w_g: Tensor,
    /// Single element.
    pub b_g: Tensor,
    /// `T x H`
    pub head_w: Tensor,
    pub head_b: Tensor,
    /// Decoder GRU reading `[u_i ‖ C]`, present for [`Head::DecoderGru`].
    pub decoder: Option<GruLayer>,
}

impl PifNetParams {
    pub fn zeros(config: &ModelConfig) -> Self {
        let h = config.hidden;
        let gru = (0..config.layers)
            .map(|l| GruLayer::zeros(if l == 0 { config.dims } else { h }, h))
            .collect();
        Self {
            gru,
            w_res: Tensor::zeros(&[h, config.flat_patch()]),
            b_res: Tensor::zeros(&[h]),
            w_g: Tensor::zeros(&[1, h]),
            b_g: Tensor::zeros(&[1]),
            head_w: Tensor::zeros(&[config.horizon, h]),
            head_b: Tensor::zeros(&[config.horizon]),
            decoder: (config.head == Head::DecoderGru).then(|| GruLayer::zeros(2 * h, h)),
        }
    }

    /// Uniform fan-in initialisation from the `INIT` sub-stream of `seed`.
    pub fn init(config: &ModelConfig, seed: u64) -> Self {
        let mut rng = substream(seed, streams::INIT);
        let h = config.hidden;
        let flat = config.flat_patch();
        let gru = (0..config.layers)
            .map(|l| GruLayer::init(if l == 0 { config.dims } else { h }, h, &mut rng))
            .collect();
        let w_res = Tensor::uniform_fan_in(&[h, flat], flat, &mut rng);
        let b_res = Tensor::uniform_fan_in(&[h], flat, &mut rng);
        let w_g = Tensor::uniform_fan_in(&[1, h], h, &mut rng);
        let b_g = Tensor::uniform_fan_in(&[1], h, &mut rng);
        let head_w = Tensor::uniform_fan_in(&[config.horizon, h], h, &mut rng);
        let head_b = Tensor::uniform_fan_in(&[config.horizon], h, &mut rng);
        let decoder = (config.head == Head::DecoderGru).then(|| GruLayer::init(2 * h, h, &mut rng));
        Self {
            gru,
            w_res,
            b_res,
            w_g,
            b_g,
            head_w,
            head_b,
            decoder,
        }
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.tensors_mut().into_iter().for_each(|t| t.fill(0.0));
        z
    }

    /// Every array with its checkpoint name, in a fixed order.
    pub fn named(&self) -> Vec<(String, &Tensor)> {
        let mut out = Vec::new();
        for (l, g) in self.gru.iter().enumerate() {
            out.push((format!("gru.{l}.w"), &g.w));
            out.push((format!("gru.{l}.u"), &g.u));
            out.push((format!("gru.{l}.b"), &g.b));
        }
        out.push(("res.w".into(), &self.w_res));
        out.push(("res.b".into(), &self.b_res));
        out.push(("gate.w".into(), &self.w_g));
        out.push(("gate.b".into(), &self.b_g));
        out.push(("head.w".into(), &self.head_w));
        out.push(("head.b".into(), &self.head_b));
        if let Some(d) = &self.decoder {
            out.push(("dec.w".into(), &d.w));
            out.push(("dec.u".into(), &d.u));
            out.push(("dec.b".into(), &d.b));
        }
        out
    }

    pub fn tensors(&self) -> Vec<&Tensor> {
        self.named().into_iter().map(|(_, t)| t).collect()
    }

    /// Same order as [`named`](Self::named).
    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = Vec::new();
        for g in &mut self.gru {
            out.extend([&mut g.w, &mut g.u, &mut g.b]);
        }
        out.extend([
            &mut self.w_res,
            &mut self.b_res,
            &mut self.w_g,
            &mut self.b_g,
            &mut self.head_w,
            &mut self.head_b,
        ]);
        if let Some(d) = &mut self.decoder {
            out.extend([&mut d.w, &mut d.u, &mut d.b]);
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.is_finite())
    }

    pub fn add_assign(&mut self, other: &PifNetParams) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            a.add_scaled(b, 1.0);
        }
    }

    /// All parameters concatenated in [`named`](Self::named) order.
    pub fn flatten(&self) -> Vec<f64> {
        self.tensors().iter().flat_map(|t| t.data().iter().copied()).collect()
    }

    /// Inverse of [`flatten`](Self::flatten).
    pub fn assign_flat(&mut self, flat: &[f64]) -> Result<()> {
        let total: usize = self.tensors().iter().map(|t| t.len()).sum();
        if flat.len() != total {
            return Err(Error::Contract(format!("expected {total} parameters, got {}", flat.len())));
        }
        let mut at = 0;
        for t in self.tensors_mut() {
            let n = t.len();
            t.data_mut().copy_from_slice(&flat[at..at + n]);
            at += n;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Eval,
    /// Dropout active, masks drawn from the `DROPOUT` sub-stream of `seed`.
    Train { seed: u64 },
}

/// Encoder intermediates for a single patch.
#[derive(Debug, Clone)]
pub struct PatchCache {
    pub layers: Vec<GruCache>,
    /// Inverted-dropout multipliers applied to the outputs of layer `l`
    /// before layer `l + 1`, one `P_L x H` block per boundary.
    pub masks: Vec<Vec<f64>>,
    pub flat: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// Per-patch top-layer final states.
    pub h: Vec<Vec<f64>>,
    pub u: Vec<Vec<f64>>,
    /// Gate scores `W_g u_i + b_g`.
    pub e: Vec<f64>,
    pub alpha: Vec<f64>,
    pub c: Vec<f64>,
    pub y_hat: Vec<f64>,
    patches: Vec<PatchCache>,
    decoder: Option<GruCache>,
}

impl ForwardTrace {
    pub fn patch_caches(&self) -> &[PatchCache] {
        &self.patches
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PifNet {
    pub config: ModelConfig,
    pub params: PifNetParams,
}

impl PifNet {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let params = PifNetParams::init(&config, seed);
        Ok(Self { config, params })
    }

    pub fn from_params(config: ModelConfig, params: PifNetParams) -> Result<Self> {
        config.validate()?;
        let expected = PifNetParams::zeros(&config);
        let a = expected.named();
        let b = params.named();
        if a.len() != b.len() || a.iter().zip(&b).any(|((na, ta), (nb, tb))| na != nb || ta.shape() != tb.shape()) {
            return Err(Error::Contract("parameter shapes do not match the configuration".into()));
        }
        Ok(Self { config, params })
    }

    /// Forecast for one `L x D` row-major window.
    pub fn forecast(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(x, Mode::Eval)?.y_hat)
    }

    pub fn forward(&self, x: &[f64], mode: Mode) -> Result<ForwardTrace> {
        let cfg = &self.config;
        let p = &self.params;
        if x.len() != cfg.lookback * cfg.dims {
            return Err(Error::Contract(format!(
                "window has {} values, expected {} x {}",
                x.len(),
                cfg.lookback,
                cfg.dims
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("input window".into()));
        }
        let set = patchify(x, cfg.dims, cfg.patch_len, cfg.stride)?;
        let hidden = cfg.hidden;
        let mut rng = match mode {
            Mode::Train { seed } if cfg.dropout > 0.0 && cfg.layers > 1 => Some(substream(seed, streams::DROPOUT)),
            _ => None,
        };

        let mut hs = Vec::with_capacity(set.count);
        let mut us = Vec::with_capacity(set.count);
        let mut patches = Vec::with_capacity(set.count);
        for i in 0..set.count {
            let flat = set.patch(i).to_vec();
            let (h, cache) = self.encode_patch(&flat, rng.as_mut());
            let mut u = h.clone();
            if cfg.residual {
                for (uk, bk) in u.iter_mut().zip(p.b_res.data()) {
                    *uk += bk;
                }
                matvec_acc(p.w_res.data(), flat.len(), &flat, &mut u);
            }
            hs.push(h);
            us.push(u);
            patches.push(PatchCache { flat, ..cache });
        }

        let scores: Vec<f64> = us.iter().map(|u| dot(p.w_g.data(), u)).collect();
        let e: Vec<f64> = scores.iter().map(|s| s + p.b_g.data()[0]).collect();
        // b_g is common to every score and cancels inside the softmax, so it
        // is left out to keep the weights independent of it bit-for-bit.
        let alpha = if cfg.gating {
            softmax(&scores)
        } else {
            vec![1.0 / set.count as f64; set.count]
        };
        let mut c = vec![0.0; hidden];
        for (a, u) in alpha.iter().zip(&us) {
            for (ck, uk) in c.iter_mut().zip(u) {
                *ck += a * uk;
            }
        }

        let (top, decoder) = match &p.decoder {
            Some(dec) => {
                let mut seq = Vec::with_capacity(set.count * 2 * hidden);
                for u in &us {
                    seq.extend_from_slice(u);
                    seq.extend_from_slice(&c);
                }
                let cache = dec.forward(&seq);
                (cache.last().to_vec(), Some(cache))
            }
            None => (c.clone(), None),
        };
        let mut y_hat = p.head_b.data().to_vec();
        matvec_acc(p.head_w.data(), hidden, &top, &mut y_hat);

        Ok(ForwardTrace {
            h: hs,
            u: us,
            e,
            alpha,
            c,
            y_hat,
            patches,
            decoder,
        })
    }

    fn encode_patch(&self, flat: &[f64], mut rng: Option<&mut SeededRng>) -> (Vec<f64>, PatchCache) {
        let keep = 1.0 - self.config.dropout;
        let mut layers = Vec::with_capacity(self.params.gru.len());
        let mut masks = Vec::new();
        let mut input = flat.to_vec();
        for (l, layer) in self.params.gru.iter().enumerate() {
            if l > 0 {
                if let Some(rng) = rng.as_deref_mut() {
                    let mask: Vec<f64> = (0..input.len())
                        .map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
                        .collect();
                    for (v, m) in input.iter_mut().zip(&mask) {
                        *v *= m;
                    }
                    masks.push(mask);
                }
            }
            let cache = layer.forward(&input);
            input = cache.outputs().to_vec();
            layers.push(cache);
        }
        let h = layers.last().expect("at least one layer").last().to_vec();
        (
            h,
            PatchCache {
                layers,
                masks,
                flat: Vec::new(),
            },
        )
    }

    /// Accumulates `dL/dθ` into `grads` for a trace produced by
    /// [`forward`](Self::forward) and the loss gradient `dl_dy`.
    pub fn backward(&self, trace: &ForwardTrace, dl_dy: &[f64], grads: &mut PifNetParams) -> Result<()> {
        let cfg = &self.config;
        let p = &self.params;
        let hidden = cfg.hidden;
        let count = trace.u.len();
        if dl_dy.len() != cfg.horizon {
            return Err(Error::Contract(format!("dL/dy has {} entries, horizon is {}", dl_dy.len(), cfg.horizon)));
        }
        if trace.patches.len() != count || count == 0 {
            return Err(Error::Contract("forward trace is missing its cache".into()));
        }

        let top = match &trace.decoder {
            Some(cache) => cache.last(),
            None => &trace.c[..],
        };
        outer_acc(grads.head_w.data_mut(), dl_dy, top);
        for (g, d) in grads.head_b.data_mut().iter_mut().zip(dl_dy) {
            *g += d;
        }
        let mut d_top = vec![0.0; hidden];
        matvec_t_acc(p.head_w.data(), hidden, dl_dy, &mut d_top);

        let mut du = vec![vec![0.0; hidden]; count];
        let d_c = match (&trace.decoder, &p.decoder, grads.decoder.as_mut()) {
            (Some(cache), Some(dec), Some(gdec)) => {
                let mut dh_out = vec![0.0; count * hidden];
                dh_out[(count - 1) * hidden..].copy_from_slice(&d_top);
                let dx = dec.backward(cache, &dh_out, gdec, true).expect("requested");
                let mut d_c = vec![0.0; hidden];
                for (i, dui) in du.iter_mut().enumerate() {
                    let row = &dx[i * 2 * hidden..(i + 1) * 2 * hidden];
                    for k in 0..hidden {
                        dui[k] += row[k];
                        d_c[k] += row[hidden + k];
                    }
                }
                d_c
            }
            (None, None, None) => d_top,
            _ => return Err(Error::Contract("decoder cache and parameters disagree".into())),
        };

        for (i, dui) in du.iter_mut().enumerate() {
            for (d, c) in dui.iter_mut().zip(&d_c) {
                *d += trace.alpha[i] * c;
            }
        }
        if cfg.gating {
            let d_alpha: Vec<f64> = trace.u.iter().map(|u| dot(&d_c, u)).collect();
            let mean = dot(&trace.alpha, &d_alpha);
            let gw = grads.w_g.data_mut();
            for i in 0..count {
                let ds = trace.alpha[i] * (d_alpha[i] - mean);
                for k in 0..hidden {
                    gw[k] += ds * trace.u[i][k];
                    du[i][k] += ds * p.w_g.data()[k];
                }
            }
        }

        for (i, dui) in du.iter().enumerate() {
            let pc = &trace.patches[i];
            if cfg.residual {
                outer_acc(grads.w_res.data_mut(), dui, &pc.flat);
                for (g, d) in grads.b_res.data_mut().iter_mut().zip(dui) {
                    *g += d;
                }
            }
            self.backward_patch(pc, dui, grads);
        }
        Ok(())
    }

    fn backward_patch(&self, pc: &PatchCache, dh: &[f64], grads: &mut PifNetParams) {
        let hidden = self.config.hidden;
        let steps = self.config.patch_len;
        let mut dh_out = vec![0.0; steps * hidden];
        dh_out[(steps - 1) * hidden..].copy_from_slice(dh);
        for l in (0..self.params.gru.len()).rev() {
            let dx = self.params.gru[l].backward(&pc.layers[l], &dh_out, &mut grads.gru[l], l > 0);
            if let Some(mut dx) = dx {
                if let Some(mask) = pc.masks.get(l - 1) {
                    for (d, m) in dx.iter_mut().zip(mask) {
                        *d *= m;
                    }
                }
                dh_out = dx;
            }
        }
    }
}
