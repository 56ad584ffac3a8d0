//! Classification metrics and fold aggregation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::MetricError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricName {
    AucRoc,
    Accuracy,
}

impl fmt::Display for MetricName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricName::AucRoc => "auc_roc",
            MetricName::Accuracy => "accuracy",
        })
    }
}

impl FromStr for MetricName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "auc_roc" | "auc" => Ok(MetricName::AucRoc),
            "accuracy" => Ok(MetricName::Accuracy),
            _ => Err(format!("unknown metric `{s}`")),
        }
    }
}

/// Area under the ROC curve as the Mann-Whitney statistic with midranks:
/// the probability that a random positive outscores a random negative,
/// counting ties as one half.
pub fn auc_roc(scores: &[f64], labels: &[bool]) -> Result<f64, MetricError> {
    if scores.len() != labels.len() {
        return Err(MetricError::LengthMismatch(scores.len(), labels.len()));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(MetricError::SingleClassValidation);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // ranks are 1-based; a tie group spanning positions i..j gets (i+1+j)/2
    let mut pos_rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let midrank = (i + 1 + j) as f64 / 2.0;
        let group_pos = order[i..j].iter().filter(|&&k| labels[k]).count();
        pos_rank_sum += midrank * group_pos as f64;
        i = j;
    }
    let (p, n) = (n_pos as f64, n_neg as f64);
    let u = pos_rank_sum - p * (p + 1.0) / 2.0;
    Ok((u / (p * n)).clamp(0.0, 1.0))
}

/// Fraction of positions where `predicted` equals `labels`.
pub fn accuracy(predicted: &[bool], labels: &[bool]) -> Result<f64, MetricError> {
    if predicted.len() != labels.len() {
        return Err(MetricError::LengthMismatch(predicted.len(), labels.len()));
    }
    if labels.is_empty() {
        return Err(MetricError::EmptyList);
    }
    let hits = predicted.iter().zip(labels).filter(|(p, l)| p == l).count();
    Ok(hits as f64 / labels.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator), zero for one value.
    pub std: f64,
    pub n: usize,
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2} ± {:.2}", self.mean, self.std)
    }
}

pub fn aggregate(values: &[f64]) -> Result<Summary, MetricError> {
    if values.is_empty() {
        return Err(MetricError::EmptyList);
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let std = if n == 1 {
        0.0
    } else {
        let ss = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
        (ss / (n - 1) as f64).sqrt()
    };
    Ok(Summary { mean, std, n })
}
