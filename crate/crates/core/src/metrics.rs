//! Label matching and evaluation against ground truth.

use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;
use serde::{Deserialize, Serialize};

use crate::error::{MasaError, Result};

/// Permutation `perm[predicted] = truth` maximising total agreement,
/// found by optimal assignment on the confusion matrix.
pub fn match_labels(pred: &[usize], truth: &[usize]) -> Result<Vec<usize>> {
    if pred.len() != truth.len() {
        return Err(MasaError::LengthMismatch {
            expected: truth.len(),
            found: pred.len(),
        });
    }
    let k = pred.iter().chain(truth).max().map_or(0, |&m| m + 1);
    if k == 0 {
        return Ok(Vec::new());
    }
    let mut confusion = Matrix::new(k, k, 0i64);
    for (&p, &t) in pred.iter().zip(truth) {
        confusion[(p, t)] += 1;
    }
    let (_, perm) = kuhn_munkres(&confusion);
    Ok(perm)
}

pub fn apply_permutation(labels: &[usize], perm: &[usize]) -> Vec<usize> {
    labels.iter().map(|&l| perm[l]).collect()
}

pub fn accuracy(pred: &[usize], truth: &[usize]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    hits as f64 / truth.len() as f64
}

/// Accuracy restricted to measurements where `mask` is set.
pub fn motif_accuracy(pred: &[usize], truth: &[usize], mask: &[bool]) -> f64 {
    let (mut hits, mut total) = (0usize, 0usize);
    for ((p, t), &m) in pred.iter().zip(truth).zip(mask) {
        if m {
            total += 1;
            hits += usize::from(p == t);
        }
    }
    if total == 0 { 0.0 } else { hits as f64 / total as f64 }
}

/// Support-weighted F1 over `states`, computed on the whole series.
pub fn weighted_f1(pred: &[usize], truth: &[usize], states: &[usize]) -> f64 {
    let mut weighted = 0.0;
    let mut support_total = 0usize;
    for &s in states {
        let tp = pred.iter().zip(truth).filter(|&(&p, &t)| p == s && t == s).count();
        let predicted = pred.iter().filter(|&&p| p == s).count();
        let support = truth.iter().filter(|&&t| t == s).count();
        if support == 0 {
            continue;
        }
        let f1 = if tp == 0 {
            0.0
        } else {
            let precision = tp as f64 / predicted as f64;
            let recall = tp as f64 / support as f64;
            2.0 * precision * recall / (precision + recall)
        };
        weighted += f1 * support as f64;
        support_total += support;
    }
    if support_total == 0 { 0.0 } else { weighted / support_total as f64 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy_motif: f64,
    pub weighted_f1: f64,
    pub accuracy_full: f64,
    /// `permutation[predicted] = truth`.
    pub permutation: Vec<usize>,
}

/// Matches labels once over the whole series, then scores.
pub fn evaluate(pred: &[usize], truth: &[usize], motif_mask: &[bool], motif_states: &[usize]) -> Result<Metrics> {
    if motif_mask.len() != truth.len() {
        return Err(MasaError::LengthMismatch {
            expected: truth.len(),
            found: motif_mask.len(),
        });
    }
    let permutation = match_labels(pred, truth)?;
    let matched = apply_permutation(pred, &permutation);
    Ok(Metrics {
        accuracy_motif: motif_accuracy(&matched, truth, motif_mask),
        weighted_f1: weighted_f1(&matched, truth, motif_states),
        accuracy_full: accuracy(&matched, truth),
        permutation,
    })
}
