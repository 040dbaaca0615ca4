//! Single GRU layer with cached forward pass and backpropagation through
//! time.
//!
//! Gate rows are stacked `[update z; reset r; candidate]`, each `H` rows:
//!
//! ```text
//! z  = σ(W_z x + U_z h + b_z)
//! r  = σ(W_r x + U_r h + b_r)
//! h~ = tanh(W_h x + U_h (r ⊙ h) + b_h)
//! h' = (1 - z) ⊙ h + z ⊙ h~
//! ```

use crate::numerics::{matvec_acc, matvec_t_acc, outer_acc, sigmoid, Tensor};
use crate::rng::SeededRng;

#[derive(Debug, Clone, PartialEq)]
pub struct GruLayer {
    /// `3H x input`
    pub w: Tensor,
    /// `3H x H`
    pub u: Tensor,
    /// `3H`
    pub b: Tensor,
}

/// Intermediates of one sequence pass, all row-major by step.
#[derive(Debug, Clone)]
pub struct GruCache {
    pub steps: usize,
    pub input: usize,
    pub hidden: usize,
    /// `steps x input`
    pub xs: Vec<f64>,
    /// `(steps + 1) x H`, row 0 is the zero initial state.
    pub hs: Vec<f64>,
    pub z: Vec<f64>,
    pub r: Vec<f64>,
    pub cand: Vec<f64>,
}

impl GruCache {
    /// Hidden state after step `t` (0-based).
    pub fn output(&self, t: usize) -> &[f64] {
        &self.hs[(t + 1) * self.hidden..(t + 2) * self.hidden]
    }

    pub fn last(&self) -> &[f64] {
        self.output(self.steps - 1)
    }

    /// `steps x H` outputs.
    pub fn outputs(&self) -> &[f64] {
        &self.hs[self.hidden..]
    }
}

impl GruLayer {
    pub fn init(input: usize, hidden: usize, rng: &mut SeededRng) -> Self {
        Self {
            w: Tensor::uniform_fan_in(&[3 * hidden, input], input, rng),
            u: Tensor::uniform_fan_in(&[3 * hidden, hidden], hidden, rng),
            b: Tensor::uniform_fan_in(&[3 * hidden], hidden, rng),
        }
    }

    pub fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            w: Tensor::zeros(&[3 * hidden, input]),
            u: Tensor::zeros(&[3 * hidden, hidden]),
            b: Tensor::zeros(&[3 * hidden]),
        }
    }

    pub fn hidden(&self) -> usize {
        self.u.shape()[1]
    }

    pub fn input(&self) -> usize {
        self.w.shape()[1]
    }

    /// Runs the recurrence over `xs` (`steps x input`) from a zero state.
    pub fn forward(&self, xs: &[f64]) -> GruCache {
        let (h, inp) = (self.hidden(), self.input());
        let steps = xs.len() / inp;
        let mut cache = GruCache {
            steps,
            input: inp,
            hidden: h,
            xs: xs.to_vec(),
            hs: vec![0.0; (steps + 1) * h],
            z: vec![0.0; steps * h],
            r: vec![0.0; steps * h],
            cand: vec![0.0; steps * h],
        };
        let (w, u, b) = (self.w.data(), self.u.data(), self.b.data());
        let mut a = vec![0.0; 3 * h];
        let mut rh = vec![0.0; h];
        for t in 0..steps {
            let x = &xs[t * inp..(t + 1) * inp];
            a.copy_from_slice(b);
            matvec_acc(w, inp, x, &mut a);
            let (prev, rest) = cache.hs.split_at_mut((t + 1) * h);
            let h_prev = &prev[t * h..];
            matvec_acc(&u[..2 * h * h], h, h_prev, &mut a[..2 * h]);
            let z = &mut cache.z[t * h..(t + 1) * h];
            let r = &mut cache.r[t * h..(t + 1) * h];
            for k in 0..h {
                z[k] = sigmoid(a[k]);
                r[k] = sigmoid(a[h + k]);
                rh[k] = r[k] * h_prev[k];
            }
            matvec_acc(&u[2 * h * h..], h, &rh, &mut a[2 * h..]);
            let cand = &mut cache.cand[t * h..(t + 1) * h];
            let h_new = &mut rest[..h];
            for k in 0..h {
                cand[k] = a[2 * h + k].tanh();
                h_new[k] = (1.0 - z[k]) * h_prev[k] + z[k] * cand[k];
            }
        }
        cache
    }

    /// Accumulates parameter gradients into `grads` given `dh_out`, the loss
    /// gradient with respect to each step's output (`steps x H`). Returns the
    /// gradient with respect to the inputs (`steps x input`) when asked.
    pub fn backward(&self, cache: &GruCache, dh_out: &[f64], grads: &mut GruLayer, want_dx: bool) -> Option<Vec<f64>> {
        let (h, inp, steps) = (cache.hidden, cache.input, cache.steps);
        let (w, u) = (self.w.data(), self.u.data());
        let mut dx = want_dx.then(|| vec![0.0; steps * inp]);
        let mut dh_next = vec![0.0; h];
        let mut da = vec![0.0; 3 * h];
        let mut d_rh = vec![0.0; h];
        let mut rh = vec![0.0; h];
        for t in (0..steps).rev() {
            let x = &cache.xs[t * inp..(t + 1) * inp];
            let h_prev = &cache.hs[t * h..(t + 1) * h];
            let z = &cache.z[t * h..(t + 1) * h];
            let r = &cache.r[t * h..(t + 1) * h];
            let cand = &cache.cand[t * h..(t + 1) * h];
            let mut dh_prev = vec![0.0; h];
            for k in 0..h {
                let dh = dh_out[t * h + k] + dh_next[k];
                let dz = dh * (cand[k] - h_prev[k]);
                let dcand = dh * z[k];
                dh_prev[k] = dh * (1.0 - z[k]);
                da[k] = dz * z[k] * (1.0 - z[k]);
                da[2 * h + k] = dcand * (1.0 - cand[k] * cand[k]);
                rh[k] = r[k] * h_prev[k];
            }
            d_rh.fill(0.0);
            matvec_t_acc(&u[2 * h * h..], h, &da[2 * h..], &mut d_rh);
            for k in 0..h {
                let dr = d_rh[k] * h_prev[k];
                dh_prev[k] += d_rh[k] * r[k];
                da[h + k] = dr * r[k] * (1.0 - r[k]);
            }

            outer_acc(grads.w.data_mut(), &da, x);
            for (gb, d) in grads.b.data_mut().iter_mut().zip(&da) {
                *gb += d;
            }
            {
                let gu = grads.u.data_mut();
                outer_acc(&mut gu[..2 * h * h], &da[..2 * h], h_prev);
                outer_acc(&mut gu[2 * h * h..], &da[2 * h..], &rh);
            }
            matvec_t_acc(&u[..2 * h * h], h, &da[..2 * h], &mut dh_prev);
            if let Some(dx) = dx.as_mut() {
                matvec_t_acc(w, inp, &da, &mut dx[t * inp..(t + 1) * inp]);
            }
            dh_next = dh_prev;
        }
        dx
    }
}
