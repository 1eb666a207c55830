//! Learning-curve summaries: AULC, curves relative to a baseline, and the
//! pairwise win matrix.

use std::collections::BTreeMap;

use super::trial::TrialResult;
use crate::error::{usage, Result};

/// Mean accuracy over all cycles (uniform spacing, so the mean equals the
/// normalized area under the curve).
pub fn aulc(accuracies: &[f64]) -> f64 {
    if accuracies.is_empty() {
        return 0.0;
    }
    accuracies.iter().sum::<f64>() / accuracies.len() as f64
}

/// Mean and standard error of the mean per cycle across trials.
pub fn mean_curve(results: &[TrialResult]) -> Result<(Vec<f64>, Vec<f64>)> {
    let len = common_len(results)?;
    let n = results.len() as f64;
    let mut mean = vec![0.0; len];
    let mut se = vec![0.0; len];
    for t in 0..len {
        let m = results.iter().map(|r| r.accuracies[t]).sum::<f64>() / n;
        mean[t] = m;
        if results.len() > 1 {
            let var = results.iter().map(|r| (r.accuracies[t] - m).powi(2)).sum::<f64>() / (n - 1.0);
            se[t] = (var / n).sqrt();
        }
    }
    Ok((mean, se))
}

fn common_len(results: &[TrialResult]) -> Result<usize> {
    let first = results.first().ok_or_else(|| usage!("no trial results"))?;
    let len = first.accuracies.len();
    if results.iter().any(|r| r.accuracies.len() != len) {
        return Err(usage!("trial curves have different lengths"));
    }
    Ok(len)
}

/// `100 * (mean_strategy - mean_baseline)` per cycle, in percentage points.
pub fn relative_curve(strategy: &[TrialResult], baseline: &[TrialResult]) -> Result<Vec<f64>> {
    let (s, _) = mean_curve(strategy)?;
    let (b, _) = mean_curve(baseline)?;
    if s.len() != b.len() {
        return Err(usage!("strategy and baseline curves have different lengths"));
    }
    Ok(s.iter().zip(&b).map(|(x, y)| 100.0 * (x - y)).collect())
}

/// Fraction of paired seeds on which the row method's AULC beats the column
/// method's; ties count one half, the diagonal is 0.5.
#[derive(Debug, Clone, PartialEq)]
pub struct WinMatrix {
    pub methods: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

pub fn win_matrix(by_method: &BTreeMap<String, Vec<TrialResult>>) -> Result<WinMatrix> {
    let methods: Vec<String> = by_method.keys().cloned().collect();
    let aulc_by_seed: Vec<BTreeMap<u64, f64>> = by_method
        .values()
        .map(|rs| rs.iter().map(|r| (r.seed, r.aulc)).collect())
        .collect();
    if let Some(first) = aulc_by_seed.first() {
        for (m, a) in methods.iter().zip(&aulc_by_seed) {
            if !a.keys().eq(first.keys()) {
                return Err(usage!("{m} and {} were not run on the same seeds", methods[0]));
            }
        }
    }
    let k = methods.len();
    let mut values = vec![vec![0.5; k]; k];
    for i in 0..k {
        for j in 0..k {
            if i == j {
                continue;
            }
            let mut score = 0.0;
            for (a, b) in aulc_by_seed[i].values().zip(aulc_by_seed[j].values()) {
                score += if a > b {
                    1.0
                } else if a == b {
                    0.5
                } else {
                    0.0
                };
            }
            values[i][j] = score / aulc_by_seed[i].len() as f64;
        }
    }
    Ok(WinMatrix { methods, values })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result(method: &str, seed: u64, acc: &[f64]) -> TrialResult {
        TrialResult {
            method: method.into(),
            config_digest: String::new(),
            seed,
            accuracies: acc.to_vec(),
            aulc: aulc(acc),
            timings: None,
        }
    }

    #[test]
    fn aulc_is_mean() {
        assert!((aulc(&[0.2, 0.4, 0.6]) - 0.4).abs() < 1e-12);
        assert_eq!(aulc(&[]), 0.0);
    }

    #[test]
    fn relative_in_points() {
        let s = [result("a", 0, &[0.5, 0.7])];
        let b = [result("r", 0, &[0.4, 0.7])];
        let rel = relative_curve(&s, &b).unwrap();
        assert!((rel[0] - 10.0).abs() < 1e-9);
        assert!(rel[1].abs() < 1e-9);
    }

    #[test]
    fn win_matrix_pairs_seeds_and_splits_ties() {
        let mut m = BTreeMap::new();
        m.insert("a".to_string(), vec![result("a", 0, &[0.6]), result("a", 1, &[0.5])]);
        m.insert("b".to_string(), vec![result("b", 0, &[0.4]), result("b", 1, &[0.5])]);
        let w = win_matrix(&m).unwrap();
        assert_eq!(w.values[0][1], 0.75);
        assert_eq!(w.values[1][0], 0.25);
        assert_eq!(w.values[0][0], 0.5);

        m.get_mut("b").unwrap().pop();
        assert!(win_matrix(&m).is_err());
    }

    #[test]
    fn standard_error_across_trials() {
        let rs = [result("a", 0, &[0.2]), result("a", 1, &[0.4])];
        let (m, se) = mean_curve(&rs).unwrap();
        assert!((m[0] - 0.3).abs() < 1e-12);
        assert!((se[0] - 0.1).abs() < 1e-12);
    }
}
