//! ε-support vector regression with an RBF kernel, trained by SMO.
//!
//! The dual is the usual 2N-variable form: for i < N the variable is α_i
//! with label +1 and linear term ε - y_i, for i >= N it is α*_i with label
//! -1 and linear term ε + y_i. Working pairs are chosen by maximal gain
//! using second-order information (Fan, Chen & Lin 2005); the pair update
//! and bias computation follow LIBSVM.

use crate::error::{Error, Result};

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SvrParams {
    pub c: f64,
    pub epsilon: f64,
    /// RBF width; `None` means `1 / F`.
    pub gamma: Option<f64>,
    /// Stopping tolerance on the maximal KKT violation.
    pub tol: f64,
    /// `None` means `max(100_000, 200 N)`.
    pub max_iter: Option<usize>,
}

impl Default for SvrParams {
    fn default() -> Self {
        Self {
            c: 10.0,
            epsilon: 0.1,
            gamma: None,
            tol: 1e-3,
            max_iter: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvrModel {
    /// Row-major `S x F`.
    pub support_vectors: Vec<f64>,
    pub features: usize,
    /// α_i - α*_i for each support vector.
    pub dual_coeffs: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
    pub c: f64,
    pub epsilon: f64,
}

/// Solver diagnostics.
#[derive(Debug, Clone, Default)]
pub struct SmoTrace {
    pub iterations: usize,
    pub final_violation: f64,
    /// Dual objective (maximisation form) after each iteration.
    pub objective: Vec<f64>,
}

#[inline]
pub fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

impl SvrModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .chunks_exact(self.features.max(1))
            .zip(&self.dual_coeffs)
            .map(|(sv, a)| a * rbf(sv, x, self.gamma))
            .sum::<f64>()
            + self.bias
    }

    pub fn predict_rows(&self, x: &[f64]) -> Vec<f64> {
        x.chunks_exact(self.features).map(|r| self.predict(r)).collect()
    }

    pub fn support_count(&self) -> usize {
        self.dual_coeffs.len()
    }
}

pub fn train_svr(x: &[f64], features: usize, y: &[f64], params: &SvrParams) -> Result<SvrModel> {
    train_svr_traced(x, features, y, params, false).map(|(m, _)| m)
}

/// Trains and optionally records the dual objective after every iteration.
pub fn train_svr_traced(
    x: &[f64],
    features: usize,
    y: &[f64],
    params: &SvrParams,
    record_objective: bool,
) -> Result<(SvrModel, SmoTrace)> {
    let l = y.len();
    if l == 0 || features == 0 || x.len() != l * features {
        return Err(Error::InsufficientData(format!(
            "SVR needs a non-empty N x F design ({} values for {l} targets, F={features})",
            x.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("SVR training data".into()));
    }
    let gamma = params.gamma.unwrap_or(1.0 / features as f64);
    if !(params.c > 0.0) || !(params.epsilon >= 0.0) || !(gamma > 0.0) || !(params.tol > 0.0) {
        return Err(Error::Parameter(format!(
            "SVR needs C > 0, epsilon >= 0, gamma > 0 (got C={}, epsilon={}, gamma={gamma})",
            params.c, params.epsilon
        )));
    }
    let c = params.c;
    let max_iter = params.max_iter.unwrap_or_else(|| 100_000.max(200 * l));

    let rows: Vec<&[f64]> = x.chunks_exact(features).collect();
    let mut kernel = vec![0.0; l * l];
    for i in 0..l {
        kernel[i * l + i] = 1.0;
        for j in 0..i {
            let k = rbf(rows[i], rows[j], gamma);
            kernel[i * l + j] = k;
            kernel[j * l + i] = k;
        }
    }
    let k = |a: usize, b: usize| kernel[(a % l) * l + (b % l)];

    let n = 2 * l;
    let sign: Vec<f64> = (0..n).map(|t| if t < l { 1.0 } else { -1.0 }).collect();
    let lin: Vec<f64> = (0..n)
        .map(|t| {
            if t < l {
                params.epsilon - y[t]
            } else {
                params.epsilon + y[t - l]
            }
        })
        .collect();
    let mut alpha = vec![0.0; n];
    let mut grad = lin.clone();
    let upper = |a: f64| a >= c;
    let lower = |a: f64| a <= 0.0;

    let mut trace = SmoTrace::default();
    let objective = |alpha: &[f64], grad: &[f64]| -> f64 {
        -0.5 * alpha
            .iter()
            .zip(grad.iter().zip(&lin))
            .map(|(a, (g, p))| a * (g + p))
            .sum::<f64>()
    };

    let mut iter = 0;
    loop {
        // first index: maximal violator in I_up
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            if sign[t] > 0.0 {
                if !upper(alpha[t]) && -grad[t] >= gmax {
                    gmax = -grad[t];
                    i_sel = Some(t);
                }
            } else if !lower(alpha[t]) && grad[t] >= gmax {
                gmax = grad[t];
                i_sel = Some(t);
            }
        }
        // second index: best second-order gain in I_low
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = None;
        let mut best = f64::INFINITY;
        if let Some(i) = i_sel {
            for t in 0..n {
                let (viol, in_low) = if sign[t] > 0.0 {
                    (grad[t], !lower(alpha[t]))
                } else {
                    (-grad[t], !upper(alpha[t]))
                };
                if !in_low {
                    continue;
                }
                gmax2 = gmax2.max(viol);
                let diff = gmax + viol;
                if diff > 0.0 {
                    let quad = k(i, i) + k(t, t) - 2.0 * k(i, t);
                    let gain = -(diff * diff) / if quad > 0.0 { quad } else { TAU };
                    if gain <= best {
                        best = gain;
                        j_sel = Some(t);
                    }
                }
            }
        }
        let violation = gmax + gmax2;
        trace.final_violation = violation.max(0.0);
        let (i, j) = match (i_sel, j_sel) {
            (Some(i), Some(j)) if violation >= params.tol => (i, j),
            _ => break,
        };
        if iter >= max_iter {
            return Err(Error::Convergence {
                iterations: iter,
                violation,
            });
        }
        iter += 1;

        let qij = sign[i] * sign[j] * k(i, j);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if sign[i] != sign[j] {
            let quad = (k(i, i) + k(j, j) + 2.0 * qij).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (k(i, i) + k(j, j) - 2.0 * qij).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += sign[t] * (sign[i] * k(t, i) * di + sign[j] * k(t, j) * dj);
        }
        if record_objective {
            trace.objective.push(objective(&alpha, &grad));
        }
    }
    trace.iterations = iter;

    // bias
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut free_sum) = (0usize, 0.0);
    for t in 0..n {
        let yg = sign[t] * grad[t];
        if upper(alpha[t]) {
            if sign[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if lower(alpha[t]) {
            if sign[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    let rho = if free > 0 {
        free_sum / free as f64
    } else {
        (ub + lb) / 2.0
    };

    let mut support_vectors = Vec::new();
    let mut dual_coeffs = Vec::new();
    for i in 0..l {
        let coef = alpha[i] - alpha[i + l];
        if coef != 0.0 {
            support_vectors.extend_from_slice(rows[i]);
            dual_coeffs.push(coef);
        }
    }
    Ok((
        SvrModel {
            support_vectors,
            features,
            dual_coeffs,
            bias: -rho,
            gamma,
            c,
            epsilon: params.epsilon,
        },
        trace,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{seeded, Rng};

    #[test]
    fn one_point_fit() {
        let m = train_svr(&[0.3, -1.0], 2, &[4.2], &SvrParams::default()).unwrap();
        assert_eq!(m.support_count(), 0);
        assert!((m.bias - 4.2).abs() < 1e-12);
        assert!((m.predict(&[0.3, -1.0]) - 4.2).abs() < 1e-12);
    }

    #[test]
    fn linear_target_stays_in_tube() {
        let x: Vec<f64> = (0..50).map(|i| -1.0 + 2.0 * i as f64 / 49.0).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let params = SvrParams {
            c: 100.0,
            epsilon: 0.01,
            gamma: Some(0.1),
            ..Default::default()
        };
        let m = train_svr(&x, 1, &y, &params).unwrap();
        let inside = x
            .iter()
            .zip(&y)
            .filter(|(xi, yi)| (m.predict(&[**xi]) - **yi).abs() <= params.epsilon + 1e-3)
            .count();
        assert!(inside >= 45, "{inside}/50 inside the tube");
    }

    #[test]
    fn xor_pattern() {
        let x = [0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0];
        let y = [0.0, 1.0, 1.0, 0.0];
        let params = SvrParams {
            c: 100.0,
            epsilon: 0.01,
            gamma: Some(1.0),
            ..Default::default()
        };
        let m = train_svr(&x, 2, &y, &params).unwrap();
        let mse: f64 = m
            .predict_rows(&x)
            .iter()
            .zip(y)
            .map(|(p, t)| (p - t).powi(2))
            .sum::<f64>()
            / 4.0;
        assert!(mse < 1e-2, "{mse}");
    }

    #[test]
    fn box_constraint_and_kkt() {
        let mut rng = seeded(2);
        let x: Vec<f64> = (0..120).map(|_| rng.random_range(-2.0..2.0)).collect();
        let y: Vec<f64> = x
            .chunks(2)
            .map(|r| (r[0]).sin() + 0.5 * r[1] + rng.random_range(-0.2..0.2))
            .collect();
        let params = SvrParams {
            c: 5.0,
            epsilon: 0.1,
            gamma: Some(0.5),
            ..Default::default()
        };
        let (m, trace) = train_svr_traced(&x, 2, &y, &params, true).unwrap();
        assert!(trace.final_violation < params.tol);
        assert!(m.dual_coeffs.iter().all(|a| a.abs() <= params.c + 1e-12));
        // points well inside the tube carry no dual weight
        let sv_rows: Vec<&[f64]> = m.support_vectors.chunks(2).collect();
        for (row, t) in x.chunks(2).zip(&y) {
            let r = (m.predict(row) - t).abs();
            if r < params.epsilon - 2.0 * params.tol {
                let coef = sv_rows
                    .iter()
                    .position(|s| *s == row)
                    .map(|p| m.dual_coeffs[p])
                    .unwrap_or(0.0);
                assert!(coef.abs() < 1e-6, "inside-tube point has coef {coef}");
            }
        }
        // dual objective never decreases
        for w in trace.objective.windows(2) {
            assert!(w[1] >= w[0] - 1e-12, "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn zero_coefficients_predict_bias() {
        let m = SvrModel {
            support_vectors: vec![1.0, 2.0],
            features: 1,
            dual_coeffs: vec![0.0, 0.0],
            bias: -3.5,
            gamma: 1.0,
            c: 1.0,
            epsilon: 0.1,
        };
        assert_eq!(m.predict(&[7.0]), -3.5);
    }

    #[test]
    fn narrow_kernel_limit() {
        let m = SvrModel {
            support_vectors: vec![0.0, 5.0],
            features: 1,
            dual_coeffs: vec![1.5, -2.0],
            bias: 0.25,
            gamma: 1e6,
            c: 10.0,
            epsilon: 0.1,
        };
        assert!((m.predict(&[0.0]) - 1.75).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_finite() {
        let e = train_svr(&[f64::NAN, 1.0], 1, &[1.0, 2.0], &SvrParams::default()).unwrap_err();
        assert_eq!(e.kind(), "non_finite");
    }

    #[test]
    fn iteration_cap_reports_violation() {
        let x: Vec<f64> = (0..30).map(|i| i as f64 / 10.0).collect();
        let y: Vec<f64> = x.iter().map(|v| v.sin()).collect();
        let params = SvrParams {
            max_iter: Some(1),
            epsilon: 0.0,
            ..Default::default()
        };
        match train_svr(&x, 1, &y, &params) {
            Err(Error::Convergence { violation, .. }) => assert!(violation > 0.0),
            other => panic!("expected convergence error, got {other:?}"),
        }
    }
}
