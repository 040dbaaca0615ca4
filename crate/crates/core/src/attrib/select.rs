use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SelectionRule {
    TopM(usize),
    /// Smallest prefix (by descending importance) holding at least this
    /// share of the total importance.
    Cumulative(f64),
}

/// Selected feature names, returned in their original column order.
/// Equal importances rank by original column order.
pub fn select_features<S: AsRef<str>>(importance: &[f64], names: &[S], rule: SelectionRule) -> Result<Vec<String>> {
    if importance.len() != names.len() {
        return Err(Error::Contract(format!(
            "{} importances for {} names",
            importance.len(),
            names.len()
        )));
    }
    if importance.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::Parameter("importances must be finite and non-negative".into()));
    }
    let mut order: Vec<usize> = (0..importance.len()).collect();
    order.sort_by(|&a, &b| importance[b].total_cmp(&importance[a]));

    let keep = match rule {
        SelectionRule::TopM(m) => {
            if m > importance.len() {
                return Err(Error::Parameter(format!(
                    "top_m = {m} exceeds {} features",
                    importance.len()
                )));
            }
            m
        }
        SelectionRule::Cumulative(tau) => {
            if !(tau > 0.0 && tau <= 1.0) {
                return Err(Error::Parameter(format!("cumulative share must lie in (0, 1], got {tau}")));
            }
            let total: f64 = importance.iter().sum();
            let target = tau * total * (1.0 - 1e-12);
            let mut acc = 0.0;
            let mut count = 0;
            for &i in &order {
                acc += importance[i];
                count += 1;
                if acc >= target {
                    break;
                }
            }
            count
        }
    };
    let mut chosen: Vec<usize> = order[..keep].to_vec();
    chosen.sort_unstable();
    Ok(chosen.into_iter().map(|i| names[i].as_ref().to_string()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn top_one() {
        let s = select_features(&[5.0, 0.0, 0.0], &["a", "b", "c"], SelectionRule::TopM(1)).unwrap();
        assert_eq!(s, vec!["a"]);
    }

    #[test]
    fn cumulative_prefix() {
        let s = select_features(&[4.0, 3.0, 2.0, 1.0], &["a", "b", "c", "d"], SelectionRule::Cumulative(0.7)).unwrap();
        assert_eq!(s, vec!["a", "b"]);
    }

    #[test]
    fn ties_follow_column_order() {
        let s = select_features(&[1.0, 2.0, 2.0], &["a", "b", "c"], SelectionRule::TopM(1)).unwrap();
        assert_eq!(s, vec!["b"]);
    }

    #[test]
    fn weather_subset() {
        let names = ["air_temperature", "dew_temperature", "sea_level_pressure", "wind_direction", "wind_speed"];
        let s = select_features(&[3.0, 1.0, 0.2, 0.1, 0.4], &names, SelectionRule::Cumulative(0.9)).unwrap();
        assert!(!s.is_empty());
        assert!(s.iter().all(|n| names.contains(&n.as_str())));
    }

    #[test]
    fn bad_parameters() {
        assert!(select_features(&[1.0], &["a"], SelectionRule::TopM(2)).is_err());
        assert!(select_features(&[1.0], &["a"], SelectionRule::Cumulative(0.0)).is_err());
        assert!(select_features(&[1.0], &["a"], SelectionRule::Cumulative(1.5)).is_err());
        assert!(select_features(&[-1.0], &["a"], SelectionRule::TopM(1)).is_err());
    }

    proptest! {
        #[test]
        fn scale_invariant(imp in prop::collection::vec(0.0f64..10.0, 1..8), k in 0.01f64..100.0, tau in 0.05f64..1.0) {
            let names: Vec<String> = (0..imp.len()).map(|i| format!("f{i}")).collect();
            let scaled: Vec<f64> = imp.iter().map(|v| v * k).collect();
            let rule = SelectionRule::Cumulative(tau);
            prop_assert_eq!(
                select_features(&imp, &names, rule).unwrap(),
                select_features(&scaled, &names, rule).unwrap()
            );
        }
    }
}
