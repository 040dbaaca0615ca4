//! Local Outlier Factor scoring, contamination-quantile flagging and
//! neighbour-average repair of flagged load values.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Local reachability density assigned when every reach-distance is zero
/// (a point inside an exact-duplicate clique).
pub const DUPLICATE_LRD: f64 = 1.0 / 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LofResult {
    pub scores: Vec<f64>,
    pub k: usize,
    pub flagged: Vec<usize>,
}

/// How a univariate load series is embedded as LOF points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Embedding {
    /// One coordinate: the load value.
    #[default]
    Value,
    /// Load value plus hour of day (0..24).
    ValueHour,
}

/// Builds row-major points (and their dimension) from a load series.
pub fn embed(load: &[f64], timestamps: &[i64], embedding: Embedding) -> (Vec<f64>, usize) {
    match embedding {
        Embedding::Value => (load.to_vec(), 1),
        Embedding::ValueHour => {
            let mut pts = Vec::with_capacity(load.len() * 2);
            for (v, t) in load.iter().zip(timestamps) {
                pts.push(*v);
                pts.push(t.rem_euclid(86_400) as f64 / 3600.0);
            }
            (pts, 2)
        }
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

struct Neighbourhood {
    k_distance: f64,
    /// (index, distance), every point within k_distance, ties included.
    members: Vec<(usize, f64)>,
}

fn neighbourhood(points: &[f64], dim: usize, p: usize, k: usize) -> Neighbourhood {
    let n = points.len() / dim;
    let xp = &points[p * dim..(p + 1) * dim];
    let all: Vec<(usize, f64)> = (0..n)
        .filter(|&o| o != p)
        .map(|o| (o, dist(xp, &points[o * dim..(o + 1) * dim])))
        .collect();
    let mut ds: Vec<f64> = all.iter().map(|x| x.1).collect();
    let (_, kth, _) = ds.select_nth_unstable_by(k - 1, f64::total_cmp);
    let k_distance = *kth;
    let members = all.into_iter().filter(|&(_, d)| d <= k_distance).collect();
    Neighbourhood {
        k_distance,
        members,
    }
}

/// LOF score of every point (row-major `N x dim`).
pub fn lof_scores(points: &[f64], dim: usize, k: usize) -> Result<Vec<f64>> {
    if dim == 0 || points.len() % dim != 0 {
        return Err(Error::Parameter(format!(
            "{} coordinates do not form points of dimension {dim}",
            points.len()
        )));
    }
    let n = points.len() / dim;
    if k == 0 || n <= k {
        return Err(Error::Parameter(format!("LOF needs N > k >= 1 (N={n}, k={k})")));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("LOF input contains NaN or infinity".into()));
    }

    let hoods: Vec<Neighbourhood> = (0..n)
        .into_par_iter()
        .map(|p| neighbourhood(points, dim, p, k))
        .collect();

    let lrd: Vec<f64> = hoods
        .iter()
        .map(|h| {
            let sum: f64 = h
                .members
                .iter()
                .map(|&(o, d)| hoods[o].k_distance.max(d))
                .sum();
            if sum == 0.0 {
                DUPLICATE_LRD
            } else {
                h.members.len() as f64 / sum
            }
        })
        .collect();

    Ok(hoods
        .iter()
        .enumerate()
        .map(|(p, h)| {
            let ratio_sum: f64 = h.members.iter().map(|&(o, _)| lrd[o] / lrd[p]).sum();
            ratio_sum / h.members.len() as f64
        })
        .collect())
}

/// Number of points flagged at a contamination fraction.
pub fn flag_count(n: usize, contamination: f64) -> usize {
    // guard against products like 0.07 * 100 = 7.000000000000001
    let raw = contamination * n as f64;
    let c = (raw - 1e-9 * raw.max(1.0)).ceil().max(0.0) as usize;
    c.min(n)
}

/// Indices of the `ceil(contamination * N)` largest scores, ascending.
/// Equal scores at the threshold go to the smaller index first.
pub fn detect_outliers(scores: &[f64], contamination: f64) -> Result<Vec<usize>> {
    if !(contamination > 0.0 && contamination < 1.0) {
        return Err(Error::Parameter(format!(
            "contamination must lie in (0, 1), got {contamination}"
        )));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("outlier scores must be finite".into()));
    }
    let m = flag_count(scores.len(), contamination);
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut out: Vec<usize> = order.into_iter().take(m).collect();
    out.sort_unstable();
    Ok(out)
}

/// Replaces flagged values with the mean of their neighbours.
///
/// A left-to-right pass followed by a right-to-left pass over the flagged
/// indices. A neighbour is usable once it is unflagged or already repaired;
/// when only one neighbour is usable its value is copied (this also covers
/// the first and last index). Unflagged values are never touched.
pub fn correct_outliers(series: &[f64], flagged: &[usize]) -> Result<Vec<f64>> {
    let n = series.len();
    if let Some(&bad) = flagged.iter().find(|&&i| i >= n) {
        return Err(Error::Parameter(format!("flagged index {bad} out of range 0..{n}")));
    }
    let mut is_flagged = vec![false; n];
    for &i in flagged {
        is_flagged[i] = true;
    }
    if n == 0 || is_flagged.iter().all(|&f| f) {
        return Err(Error::CorrectionImpossible);
    }
    let mut idx: Vec<usize> = flagged.to_vec();
    idx.sort_unstable();
    idx.dedup();

    let mut out = series.to_vec();
    let mut ready: Vec<bool> = is_flagged.iter().map(|f| !f).collect();

    let repair = |i: usize, out: &mut Vec<f64>, ready: &mut Vec<bool>| {
        let left = (i > 0 && ready[i - 1]).then(|| out[i - 1]);
        let right = (i + 1 < n && ready[i + 1]).then(|| out[i + 1]);
        let v = match (left, right) {
            (Some(a), Some(b)) => Some((a + b) / 2.0),
            (Some(a), None) | (None, Some(a)) => Some(a),
            (None, None) => None,
        };
        if let Some(v) = v {
            out[i] = v;
            ready[i] = true;
        }
    };
    for &i in &idx {
        repair(i, &mut out, &mut ready);
    }
    for &i in idx.iter().rev() {
        repair(i, &mut out, &mut ready);
    }
    debug_assert!(ready.iter().all(|&r| r));
    Ok(out)
}

/// Scores, flags and returns the repaired series together with the result.
pub fn detect_and_correct(
    points: &[f64],
    dim: usize,
    series: &[f64],
    k: usize,
    contamination: f64,
) -> Result<(LofResult, Vec<f64>)> {
    let scores = lof_scores(points, dim, k)?;
    let flagged = detect_outliers(&scores, contamination)?;
    let corrected = correct_outliers(series, &flagged)?;
    Ok((LofResult { scores, k, flagged }, corrected))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_n() {
        assert_eq!(lof_scores(&[1.0, 2.0], 1, 2).unwrap_err().kind(), "parameter");
        assert_eq!(lof_scores(&[1.0, 2.0], 1, 0).unwrap_err().kind(), "parameter");
    }

    #[test]
    fn isolated_point_scores_high() {
        let mut pts: Vec<f64> = (0..20).map(|i| i as f64 / 19.0).collect();
        pts.push(100.0);
        let s = lof_scores(&pts, 1, 5).unwrap();
        assert!(s[20] > 2.0);
        assert!(s[..20].iter().all(|&v| v < 1.2), "{s:?}");
    }

    #[test]
    fn duplicate_clique_scores_one() {
        let pts = [3.0, 3.0, 3.0, 3.0, 9.0];
        let s = lof_scores(&pts, 1, 2).unwrap();
        assert!(s.iter().all(|v| v.is_finite() && *v > 0.0));
        assert_eq!(s[0], 1.0);
    }

    #[test]
    fn ties_join_the_neighbourhood() {
        // point 1 has two neighbours at distance 1 with k = 1
        let h = neighbourhood(&[0.0, 1.0, 2.0], 1, 1, 1);
        assert_eq!(h.members.len(), 2);
        assert_eq!(h.k_distance, 1.0);
    }

    #[test]
    fn flag_counts() {
        assert_eq!(flag_count(8760, 0.05), 438);
        assert_eq!(flag_count(100, 0.05), 5);
        assert_eq!(flag_count(100, 0.07), 7);
        assert_eq!(flag_count(101, 0.05), 6);
    }

    #[test]
    fn detect_top_fraction() {
        let scores: Vec<f64> = (0..100).map(|i| (i * 37 % 100) as f64).collect();
        assert_eq!(detect_outliers(&scores, 0.05).unwrap().len(), 5);
        assert_eq!(detect_outliers(&[1.0, 1.0, 1.0, 5.0], 0.25).unwrap(), vec![3]);
        assert_eq!(detect_outliers(&[2.0; 40], 0.05).unwrap(), vec![0, 1]);
        assert!(detect_outliers(&[1.0], 0.0).is_err());
        assert!(detect_outliers(&[1.0], 1.0).is_err());
    }

    #[test]
    fn single_flag_is_neighbour_mean() {
        assert_eq!(correct_outliers(&[10.0, 100.0, 20.0], &[1]).unwrap(), vec![10.0, 15.0, 20.0]);
    }

    #[test]
    fn boundaries_copy_neighbour() {
        let out = correct_outliers(&[99.0, 4.0, 5.0, 6.0], &[0]).unwrap();
        assert_eq!(out[0], 4.0);
        let out = correct_outliers(&[1.0, 2.0, 3.0, 99.0], &[3]).unwrap();
        assert_eq!(out[3], 3.0);
    }

    #[test]
    fn consecutive_flags_two_passes() {
        // forward: p1 <- 1 (right not ready), p2 <- (1 + 4) / 2
        // backward: p2 <- (1 + 4) / 2, p1 <- (1 + 2.5) / 2
        let out = correct_outliers(&[1.0, 50.0, 60.0, 4.0], &[1, 2]).unwrap();
        assert_eq!(out, vec![1.0, 1.75, 2.5, 4.0]);
        for i in [1, 2] {
            let nb = out[i - 1].max(out[i + 1]);
            assert!(out[i] > 1.0 && out[i] < 4.0);
            assert!(out[i] <= 2.0 * nb);
        }
    }

    #[test]
    fn leading_run_is_filled() {
        let out = correct_outliers(&[9.0, 9.0, 9.0, 1.0, 2.0], &[0, 1, 2]).unwrap();
        assert_eq!(out, vec![1.0, 1.0, 1.0, 1.0, 2.0]);
    }

    #[test]
    fn all_flagged_is_an_error() {
        assert!(matches!(
            correct_outliers(&[1.0, 2.0], &[0, 1]),
            Err(Error::CorrectionImpossible)
        ));
    }

    #[test]
    fn hour_embedding() {
        let (p, d) = embed(&[5.0, 6.0], &[0, 3600 * 25], Embedding::ValueHour);
        assert_eq!(d, 2);
        assert_eq!(p, vec![5.0, 0.0, 6.0, 1.0]);
    }
}
