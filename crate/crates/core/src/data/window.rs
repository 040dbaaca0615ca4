use crate::data::SeriesFrame;
use crate::error::{Error, Result};

/// Stride-1 supervised pairs: look-back block `L x D` and the next `T` loads.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSet {
    inputs: Vec<f64>,
    targets: Vec<f64>,
    pub lookback: usize,
    pub horizon: usize,
    pub dims: usize,
}

impl WindowSet {
    /// Windows over a row-major `N x dims` matrix whose column 0 is the target.
    pub fn from_matrix(data: &[f64], dims: usize, lookback: usize, horizon: usize) -> Result<Self> {
        if dims == 0 || lookback == 0 || horizon == 0 {
            return Err(Error::Parameter(
                "window lookback, horizon and dims must be positive".into(),
            ));
        }
        let n = data.len() / dims;
        if n < lookback + horizon {
            return Err(Error::InsufficientData(format!(
                "{n} rows cannot fill a look-back of {lookback} plus horizon {horizon}"
            )));
        }
        let count = n - lookback - horizon + 1;
        let mut inputs = Vec::with_capacity(count * lookback * dims);
        let mut targets = Vec::with_capacity(count * horizon);
        for i in 0..count {
            inputs.extend_from_slice(&data[i * dims..(i + lookback) * dims]);
            targets.extend((i + lookback..i + lookback + horizon).map(|r| data[r * dims]));
        }
        Ok(Self {
            inputs,
            targets,
            lookback,
            horizon,
            dims,
        })
    }

    pub fn len(&self) -> usize {
        self.targets.len() / self.horizon
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Row-major `L x D` block of window `i`.
    pub fn input(&self, i: usize) -> &[f64] {
        let sz = self.lookback * self.dims;
        &self.inputs[i * sz..(i + 1) * sz]
    }

    pub fn target(&self, i: usize) -> &[f64] {
        &self.targets[i * self.horizon..(i + 1) * self.horizon]
    }

    /// Source row of the first target of window `i`.
    pub fn target_row(&self, i: usize) -> usize {
        i + self.lookback
    }
}

pub fn make_windows(frame: &SeriesFrame, lookback: usize, horizon: usize) -> Result<WindowSet> {
    WindowSet::from_matrix(&frame.to_matrix(), frame.dims(), lookback, horizon)
}
