//! Classification metrics: accuracy, Matthews correlation, F1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKind {
    #[default]
    Accuracy,
    /// CoLA-style tasks.
    Matthews,
    /// MRPC-style tasks; class 1 is positive.
    F1,
}

impl MetricKind {
    pub fn score(self, preds: &[usize], labels: &[usize]) -> Result<f64> {
        match self {
            MetricKind::Accuracy => accuracy(preds, labels),
            MetricKind::Matthews => matthews_corr(preds, labels),
            MetricKind::F1 => f1_score(preds, labels, 1).map(|f| f.score),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Accuracy => "acc",
            MetricKind::Matthews => "matt",
            MetricKind::F1 => "f1",
        }
    }
}

fn check_lengths(preds: &[usize], labels: &[usize]) -> Result<()> {
    if preds.len() != labels.len() {
        return Err(Error::dim("metric", &[preds.len()], &[labels.len()]));
    }
    if preds.is_empty() {
        return Err(Error::Data("metric over an empty prediction set".into()));
    }
    Ok(())
}

pub fn accuracy(preds: &[usize], labels: &[usize]) -> Result<f64> {
    check_lengths(preds, labels)?;
    let hits = preds.iter().zip(labels).filter(|(p, y)| p == y).count();
    Ok(hits as f64 / preds.len() as f64)
}

/// Square confusion matrix, `m[actual][predicted]`.
pub fn confusion_matrix(preds: &[usize], labels: &[usize]) -> Vec<Vec<u64>> {
    let k = preds.iter().chain(labels).copied().max().map_or(0, |m| m + 1);
    let mut m = vec![vec![0u64; k]; k];
    for (&p, &y) in preds.iter().zip(labels) {
        m[y][p] += 1;
    }
    m
}

/// Multiclass Matthews correlation (Gorodkin's R_K); 0 when any marginal
/// makes the denominator vanish.
pub fn matthews_corr(preds: &[usize], labels: &[usize]) -> Result<f64> {
    check_lengths(preds, labels)?;
    let m = confusion_matrix(preds, labels);
    let k = m.len();
    let n = preds.len() as f64;
    let correct: f64 = (0..k).map(|i| m[i][i] as f64).sum();
    let actual: Vec<f64> = (0..k).map(|i| m[i].iter().sum::<u64>() as f64).collect();
    let predicted: Vec<f64> = (0..k).map(|j| (0..k).map(|i| m[i][j]).sum::<u64>() as f64).collect();
    let cross: f64 = actual.iter().zip(&predicted).map(|(t, p)| t * p).sum();
    let numerator = correct * n - cross;
    let denom_pred = n * n - predicted.iter().map(|p| p * p).sum::<f64>();
    let denom_true = n * n - actual.iter().map(|t| t * t).sum::<f64>();
    if denom_pred == 0.0 || denom_true == 0.0 {
        return Ok(0.0);
    }
    Ok((numerator / (denom_pred * denom_true).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct F1 {
    pub score: f64,
    /// Precision + recall was zero and the score fell back to 0.
    pub degenerate: bool,
}

pub fn f1_score(preds: &[usize], labels: &[usize], positive: usize) -> Result<F1> {
    check_lengths(preds, labels)?;
    let mut tp = 0u64;
    let mut fp = 0u64;
    let mut fn_ = 0u64;
    for (&p, &y) in preds.iter().zip(labels) {
        match (p == positive, y == positive) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
    let recall = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
    if precision + recall == 0.0 {
        log::debug!("f1: precision + recall = 0, reporting 0");
        return Ok(F1 {
            score: 0.0,
            degenerate: true,
        });
    }
    Ok(F1 {
        score: 2.0 * precision * recall / (precision + recall),
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions() {
        let y = [0, 1, 1, 0, 2];
        assert_eq!(accuracy(&y, &y).unwrap(), 1.0);
        assert!((matthews_corr(&y, &y).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(f1_score(&y, &y, 1).unwrap().score, 1.0);
    }

    #[test]
    fn matthews_balanced_confusion_is_zero() {
        // TP = TN = FP = FN = 1
        let preds = [1, 0, 1, 0];
        let labels = [1, 0, 0, 1];
        assert_eq!(matthews_corr(&preds, &labels).unwrap(), 0.0);
    }

    #[test]
    fn matthews_single_predicted_class_is_zero() {
        assert_eq!(matthews_corr(&[1, 1, 1, 1], &[0, 1, 0, 1]).unwrap(), 0.0);
    }

    #[test]
    fn f1_precision_half_recall_one() {
        // TP = 1, FP = 1, FN = 0
        let f = f1_score(&[1, 1, 0], &[1, 0, 0], 1).unwrap();
        assert!((f.score - 2.0 / 3.0).abs() < 1e-12);
        assert!(!f.degenerate);
    }

    #[test]
    fn f1_no_positives_anywhere_is_degenerate_zero() {
        let f = f1_score(&[0, 0], &[0, 0], 1).unwrap();
        assert_eq!(f.score, 0.0);
        assert!(f.degenerate);
    }

    #[test]
    fn empty_inputs_are_data_errors() {
        assert!(matches!(accuracy(&[], &[]), Err(Error::Data(_))));
        assert!(matches!(matthews_corr(&[], &[]), Err(Error::Data(_))));
        assert!(matches!(f1_score(&[], &[], 1), Err(Error::Data(_))));
    }
}
