// Copyright 2026 The lupi-meta Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Evaluation metrics and mean ± std aggregation.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Metrics for one model on one evaluation set. Absent entries were not
/// computed or are undefined for that data.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub accuracy: Option<f64>,
    pub rmse: Option<f64>,
    pub spearman: Option<f64>,
    pub auc_roc: Option<f64>,
    pub auc_pr: Option<f64>,
}

impl MetricReport {
    pub const NAMES: [&'static str; 5] = ["accuracy", "rmse", "spearman", "auc_roc", "auc_pr"];

    pub fn get(&self, name: &str) -> Option<f64> {
        match name {
            "accuracy" => self.accuracy,
            "rmse" => self.rmse,
            "spearman" => self.spearman,
            "auc_roc" => self.auc_roc,
            "auc_pr" => self.auc_pr,
            _ => None,
        }
    }

    /// `(name, value)` for every present metric, in [`Self::NAMES`] order.
    pub fn present(&self) -> Vec<(&'static str, f64)> {
        Self::NAMES
            .iter()
            .filter_map(|&n| self.get(n).map(|v| (n, v)))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub n_runs: usize,
}

fn check_lengths(a: usize, b: usize, min: usize, what: &str) -> Result<()> {
    if a != b {
        return Err(Error::shape("metric inputs", a, b));
    }
    if a < min {
        return Err(Error::Domain(format!(
            "{what} needs at least {min} values, got {a}"
        )));
    }
    Ok(())
}

/// Fraction of positions where the labels agree.
pub fn accuracy<T: PartialEq>(labels: &[T], predicted: &[T]) -> Result<f64> {
    check_lengths(labels.len(), predicted.len(), 1, "accuracy")?;
    let hits = labels.iter().zip(predicted).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / labels.len() as f64)
}

pub fn rmse(targets: &[f64], predictions: &[f64]) -> Result<f64> {
    check_lengths(targets.len(), predictions.len(), 1, "rmse")?;
    let mse = targets
        .iter()
        .zip(predictions)
        .map(|(t, p)| (t - p) * (t - p))
        .sum::<f64>()
        / targets.len() as f64;
    Ok(mse.sqrt())
}

/// 1-based ranks with ties sharing the average of their positions.
pub fn fractional_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i..j (0-based) share rank mean(i+1 ..= j)
        let rank = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        i = j;
    }
    ranks
}

pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    check_lengths(a.len(), b.len(), 2, "pearson")?;
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::UndefinedMetric(
            "correlation of a constant vector".into(),
        ));
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Pearson correlation of tie-averaged ranks.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    check_lengths(a.len(), b.len(), 2, "spearman")?;
    pearson(&fractional_ranks(a), &fractional_ranks(b))
}

fn class_counts(labels: &[f64]) -> Result<(usize, usize)> {
    let mut pos = 0;
    let mut neg = 0;
    for &l in labels {
        if l == 1.0 {
            pos += 1;
        } else if l == 0.0 {
            neg += 1;
        } else {
            return Err(Error::Domain(format!(
                "binary labels must be 0 or 1, got {l}"
            )));
        }
    }
    Ok((pos, neg))
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half (Mann-Whitney U over tie-averaged ranks).
pub fn auc_roc(labels: &[f64], scores: &[f64]) -> Result<f64> {
    check_lengths(labels.len(), scores.len(), 2, "auc_roc")?;
    let (pos, neg) = class_counts(labels)?;
    if pos == 0 || neg == 0 {
        return Err(Error::UndefinedMetric(
            "auc_roc needs both positive and negative labels".into(),
        ));
    }
    let ranks = fractional_ranks(scores);
    let rank_sum: f64 = labels
        .iter()
        .zip(&ranks)
        .filter(|(&l, _)| l == 1.0)
        .map(|(_, r)| r)
        .sum();
    let p = pos as f64;
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * neg as f64))
}

/// Average precision: rank by score (descending, stable), then average the
/// precision of each prefix that ends at a positive.
pub fn auc_pr(labels: &[f64], scores: &[f64]) -> Result<f64> {
    check_lengths(labels.len(), scores.len(), 1, "auc_pr")?;
    let (pos, _) = class_counts(labels)?;
    if pos == 0 {
        return Err(Error::UndefinedMetric(
            "auc_pr needs at least one positive".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(Ordering::Equal));
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (k, &i) in order.iter().enumerate() {
        if labels[i] == 1.0 {
            hits += 1;
            sum += hits as f64 / (k + 1) as f64;
        }
    }
    Ok(sum / pos as f64)
}

/// Mean and population standard deviation.
pub fn aggregate(values: &[f64]) -> Result<Aggregate> {
    if values.is_empty() {
        return Err(Error::Domain("cannot aggregate an empty list".into()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Ok(Aggregate {
        mean,
        std: var.sqrt(),
        n_runs: values.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[1, 0, 1], &[1, 0, 1]).unwrap(), 1.0);
        assert!((accuracy(&[1, 0, 1], &[1, 1, 1]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(accuracy(&[4], &[4]).unwrap(), 1.0);
        assert!(matches!(accuracy(&[1, 2], &[1]), Err(Error::Shape { .. })));
        assert!(accuracy::<u8>(&[], &[]).is_err());
    }

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!((rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap() - 12.5f64.sqrt()).abs() < 1e-15);
        assert!((rmse(&[1.0, -2.0, 5.0], &[-1.5, -4.5, 2.5]).unwrap() - 2.5).abs() < 1e-15);
    }

    #[test]
    fn spearman_examples() {
        assert!((spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((spearman(&[1.0, 2.0, 3.0], &[30.0, 20.0, 10.0]).unwrap() + 1.0).abs() < 1e-15);
        // ranks [1, 2.5, 2.5, 4] vs [1, 2, 3, 4]: centred cross sum 4.5,
        // centred squared sums 4.5 and 5
        let expected = 4.5 / (4.5f64 * 5.0).sqrt();
        let got = spearman(&[1.0, 2.0, 2.0, 3.0], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((got - expected).abs() < 1e-12);
        assert!((got - 0.9487).abs() < 1e-4);
        assert!(matches!(
            spearman(&[1.0, 1.0], &[1.0, 2.0]),
            Err(Error::UndefinedMetric(_))
        ));
    }

    #[test]
    fn auc_roc_examples() {
        let got = auc_roc(&[0.0, 0.0, 1.0, 1.0], &[0.1, 0.4, 0.35, 0.8]).unwrap();
        assert!((got - 0.75).abs() < 1e-15);
        assert_eq!(auc_roc(&[0.0, 1.0, 1.0], &[0.1, 0.5, 0.9]).unwrap(), 1.0);
        assert_eq!(auc_roc(&[0.0, 1.0, 0.0, 1.0], &[3.0; 4]).unwrap(), 0.5);
        assert!(matches!(
            auc_roc(&[1.0, 1.0], &[0.1, 0.2]),
            Err(Error::UndefinedMetric(_))
        ));
        assert!(auc_roc(&[2.0, 0.0], &[0.1, 0.2]).is_err());
    }

    #[test]
    fn auc_pr_examples() {
        let got = auc_pr(&[1.0, 0.0, 1.0], &[0.9, 0.8, 0.7]).unwrap();
        assert!((got - 5.0 / 6.0).abs() < 1e-15);
        assert_eq!(auc_pr(&[1.0, 1.0, 0.0], &[0.9, 0.8, 0.1]).unwrap(), 1.0);
        let n = 7;
        let mut labels = vec![0.0; n];
        labels[n - 1] = 1.0;
        let scores: Vec<f64> = (0..n).map(|i| -(i as f64)).collect();
        assert!((auc_pr(&labels, &scores).unwrap() - 1.0 / n as f64).abs() < 1e-15);
        assert!(matches!(
            auc_pr(&[0.0, 0.0], &[0.3, 0.2]),
            Err(Error::UndefinedMetric(_))
        ));
    }

    #[test]
    fn aggregate_examples() {
        let a = aggregate(&[0.95, 0.95]).unwrap();
        assert_eq!((a.mean, a.std, a.n_runs), (0.95, 0.0, 2));
        let a = aggregate(&[0.0, 1.0]).unwrap();
        assert_eq!((a.mean, a.std), (0.5, 0.5));
        let a = aggregate(&[3.25]).unwrap();
        assert_eq!((a.mean, a.std, a.n_runs), (3.25, 0.0, 1));
        assert!(matches!(aggregate(&[]), Err(Error::Domain(_))));
    }

    #[test]
    fn fractional_ranks_average_ties() {
        assert_eq!(
            fractional_ranks(&[3.0, 1.0, 3.0, 2.0]),
            vec![3.5, 1.0, 3.5, 2.0]
        );
    }
}
