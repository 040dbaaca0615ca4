//! Seeded synthetic hourly load for desk-scale experiments.

use rand::seq::index::sample;
use rand_distr::{Distribution, Normal};

use crate::data::SeriesFrame;
use crate::rng::{seeded, SeededRng};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n: usize,
    pub offset: f64,
    pub daily_amplitude: f64,
    pub noise_std: f64,
    pub spike_count: usize,
    pub spike_magnitude: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n: 2000,
            offset: 10.0,
            daily_amplitude: 2.0,
            noise_std: 0.1,
            spike_count: 10,
            spike_magnitude: 3.0,
        }
    }
}

/// 2017-01-01T00:00:00 UTC
const START: i64 = 1_483_228_800;

fn normal(std: f64) -> Normal<f64> {
    Normal::new(0.0, std.max(0.0)).expect("finite non-negative std")
}

fn phase(t: usize) -> f64 {
    (2.0 * std::f64::consts::PI * t as f64 / 24.0).sin()
}

/// Synthetic series plus the sorted indices of the injected spikes.
///
/// Load is `offset + amplitude * sin(2πt/24) + noise`, with `spike_count`
/// distinct rows multiplied by `spike_magnitude`. Covariates: `temperature`
/// tracks the daily cycle, `dew_point` tracks temperature, `noise` is pure
/// Gaussian noise.
pub fn synth_series_with_spikes(spec: &SynthSpec, seed: u64) -> (SeriesFrame, Vec<usize>) {
    let mut rng: SeededRng = seeded(seed);
    let n = spec.n;
    let load_noise = normal(spec.noise_std);
    let temp_noise = normal(0.3);
    let dew_noise = normal(0.5);
    let unit = normal(1.0);

    let mut load = Vec::with_capacity(n);
    let mut temperature = Vec::with_capacity(n);
    let mut dew = Vec::with_capacity(n);
    let mut noise = Vec::with_capacity(n);
    for t in 0..n {
        let s = phase(t);
        let eps = if spec.noise_std > 0.0 {
            load_noise.sample(&mut rng)
        } else {
            0.0
        };
        load.push(spec.offset + spec.daily_amplitude * s + eps);
        let temp = 15.0 + 8.0 * s + temp_noise.sample(&mut rng);
        temperature.push(temp);
        dew.push(0.7 * temp + 2.0 + dew_noise.sample(&mut rng));
        noise.push(unit.sample(&mut rng));
    }

    let mut spikes: Vec<usize> = sample(&mut rng, n, spec.spike_count.min(n)).into_vec();
    spikes.sort_unstable();
    for &i in &spikes {
        load[i] *= spec.spike_magnitude;
    }

    let frame = SeriesFrame {
        timestamps: (0..n as i64).map(|i| START + 3600 * i).collect(),
        load,
        load_name: "load".into(),
        features: vec![temperature, dew, noise],
        feature_names: vec!["temperature".into(), "dew_point".into(), "noise".into()],
    };
    (frame, spikes)
}

pub fn synth_series(spec: &SynthSpec, seed: u64) -> SeriesFrame {
    synth_series_with_spikes(spec, seed).0
}
