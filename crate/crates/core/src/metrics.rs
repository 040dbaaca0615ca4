//! Point-forecast scores and the sensitivity spread.

use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub mae: f64,
    pub mse: f64,
    pub rmse: f64,
    pub mape_percent: f64,
    pub r2: f64,
    pub ia: f64,
    pub u1: f64,
    pub n: usize,
    /// Targets equal to zero, left out of the MAPE average.
    pub mape_excluded: usize,
}

/// Column order used in every report.
pub const METRIC_NAMES: [&str; 7] = ["MAE", "MSE", "RMSE", "MAPE", "R2", "IA", "U1"];

impl MetricsReport {
    pub fn values(&self) -> [f64; 7] {
        [self.mae, self.mse, self.rmse, self.mape_percent, self.r2, self.ia, self.u1]
    }

    pub fn csv_header() -> String {
        format!("{},n,mape_excluded", METRIC_NAMES.join(","))
    }

    pub fn csv_row(&self) -> String {
        let mut s = self.values().iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
        let _ = write!(s, ",{},{}", self.n, self.mape_excluded);
        s
    }
}

/// Scores `y_hat` against `y`.
pub fn evaluate(y: &[f64], y_hat: &[f64]) -> Result<MetricsReport> {
    if y.len() != y_hat.len() {
        return Err(Error::Contract(format!("{} targets vs {} predictions", y.len(), y_hat.len())));
    }
    let n = y.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!("metrics need n >= 2, got {n}")));
    }
    let nf = n as f64;
    let mean = y.iter().sum::<f64>() / nf;

    let mut abs_sum = 0.0;
    let mut sq_sum = 0.0;
    let mut ape_sum = 0.0;
    let mut ape_n = 0usize;
    let mut ss_tot = 0.0;
    let mut ia_den = 0.0;
    let mut y_sq = 0.0;
    let mut p_sq = 0.0;
    for (&a, &p) in y.iter().zip(y_hat) {
        let e = a - p;
        abs_sum += e.abs();
        sq_sum += e * e;
        if a != 0.0 {
            ape_sum += (e / a).abs();
            ape_n += 1;
        }
        ss_tot += (a - mean) * (a - mean);
        let agree = (p - mean).abs() + (a - mean).abs();
        ia_den += agree * agree;
        y_sq += a * a;
        p_sq += p * p;
    }
    if ape_n == 0 {
        return Err(Error::InsufficientData("MAPE undefined: every target is zero".into()));
    }
    let mse = sq_sum / nf;
    let rmse = mse.sqrt();
    let ratio = |num: f64, den: f64| if num == 0.0 { 0.0 } else { num / den };
    Ok(MetricsReport {
        mae: abs_sum / nf,
        mse,
        rmse,
        mape_percent: 100.0 * ape_sum / ape_n as f64,
        r2: 1.0 - ratio(sq_sum, ss_tot),
        ia: 1.0 - ratio(sq_sum, ia_den),
        u1: ratio(rmse, (y_sq / nf).sqrt() + (p_sq / nf).sqrt()),
        n,
        mape_excluded: n - ape_n,
    })
}

/// Population standard deviation.
pub fn sensitivity_std(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt()
}

/// Aligned text table, one row per labelled report, columns in
/// [`METRIC_NAMES`] order.
pub fn format_table(rows: &[(String, MetricsReport)]) -> String {
    let label_w = rows.iter().map(|r| r.0.len()).max().unwrap_or(0).max(5);
    let mut s = format!("{:<label_w$}", "model");
    for m in METRIC_NAMES {
        let _ = write!(s, " {m:>10}");
    }
    s.push('\n');
    for (label, r) in rows {
        let _ = write!(s, "{label:<label_w$}");
        for v in r.values() {
            let _ = write!(s, " {v:>10.4}");
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{seeded, Rng};

    #[test]
    fn perfect_prediction() {
        let y = [1.0, 4.0, 2.0, 8.0];
        let m = evaluate(&y, &y).unwrap();
        assert_eq!((m.mae, m.mse, m.rmse, m.u1, m.mape_percent), (0.0, 0.0, 0.0, 0.0, 0.0));
        assert_eq!((m.r2, m.ia), (1.0, 1.0));
    }

    #[test]
    fn mean_predictor_has_zero_r2() {
        let y = [1.0, 4.0, 2.0, 9.0];
        let m = evaluate(&y, &[4.0; 4]).unwrap();
        assert_eq!(m.r2, 0.0);
    }

    #[test]
    fn hand_case() {
        let m = evaluate(&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]).unwrap();
        assert!((m.mae - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.mse - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.rmse - 0.816496580927726).abs() < 1e-12);
        assert!((m.mape_percent - 400.0 / 9.0).abs() < 1e-12);
        assert!(m.r2.abs() < 1e-12);
        assert!(m.ia.abs() < 1e-12);
        let u1 = (2.0f64 / 3.0).sqrt() / ((14.0f64 / 3.0).sqrt() + 2.0);
        assert!((m.u1 - u1).abs() < 1e-12);
        assert!((m.u1 - 0.1963).abs() < 1e-4);
    }

    #[test]
    fn zero_targets_excluded_from_mape() {
        let m = evaluate(&[0.0, 2.0, 4.0], &[1.0, 1.0, 5.0]).unwrap();
        assert_eq!(m.mape_excluded, 1);
        assert!((m.mape_percent - 100.0 * (0.5 + 0.25) / 2.0).abs() < 1e-12);
        assert!(evaluate(&[0.0, 0.0], &[1.0, 1.0]).is_err());
        assert!(evaluate(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn std_cases() {
        assert_eq!(sensitivity_std(&[1.0, 1.0, 1.0]), 0.0);
        assert_eq!(sensitivity_std(&[0.0, 2.0]), 1.0);
    }

    /// Written without sharing any code with `evaluate`.
    fn r2_reference(y: &[f64], p: &[f64]) -> f64 {
        let ybar: f64 = y.iter().sum::<f64>() / y.len() as f64;
        let num: f64 = (0..y.len()).map(|i| (y[i] - p[i]).powi(2)).sum();
        let den: f64 = (0..y.len()).map(|i| (y[i] - ybar).powi(2)).sum();
        1.0 - num / den
    }

    #[test]
    fn r2_under_common_shift_matches_reference() {
        let mut rng = seeded(8);
        for _ in 0..50 {
            let y: Vec<f64> = (0..40).map(|_| rng.random_range(0.0..10.0)).collect();
            let p: Vec<f64> = y.iter().map(|v| v + rng.random_range(-1.0..1.0)).collect();
            let shift = rng.random_range(-5.0..5.0);
            let ys: Vec<f64> = y.iter().map(|v| v + shift).collect();
            let ps: Vec<f64> = p.iter().map(|v| v + shift).collect();
            let got = evaluate(&ys, &ps).unwrap().r2;
            assert!((got - r2_reference(&ys, &ps)).abs() < 1e-12);
            let m = evaluate(&y, &p).unwrap();
            assert!((m.rmse * m.rmse - m.mse).abs() < 1e-12);
            assert!((0.0..=1.0).contains(&m.u1) && (0.0..=1.0).contains(&m.ia));
        }
    }

    #[test]
    fn table_layout() {
        let m = evaluate(&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]).unwrap();
        let t = format_table(&[("PIF-Net".into(), m)]);
        let header: Vec<&str> = t.lines().next().unwrap().split_whitespace().collect();
        assert_eq!(header, ["model", "MAE", "MSE", "RMSE", "MAPE", "R2", "IA", "U1"]);
    }
}
