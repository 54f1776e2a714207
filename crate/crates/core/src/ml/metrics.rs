//! Confusion matrices, per-class metrics and ROC curves.
//!
//! Precision is undefined (`None`) for a class that is never predicted, and
//! F1 is undefined whenever precision or recall is. Weighted F1 counts
//! undefined scores as zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rows are true classes, columns predicted classes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn from_predictions(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Self {
        let mut counts = vec![vec![0; n_classes]; n_classes];
        for (&t, &p) in y_true.iter().zip(y_pred) {
            counts[t][p] += 1;
        }
        ConfusionMatrix { counts }
    }

    pub fn n_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn support(&self, c: usize) -> usize {
        self.counts[c].iter().sum()
    }

    pub fn predicted(&self, c: usize) -> usize {
        self.counts.iter().map(|row| row[c]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        let correct: usize = (0..self.n_classes()).map(|c| self.counts[c][c]).sum();
        correct as f64 / self.total() as f64
    }

    pub fn precision(&self, c: usize) -> Option<f64> {
        let p = self.predicted(c);
        (p > 0).then(|| self.counts[c][c] as f64 / p as f64)
    }

    pub fn recall(&self, c: usize) -> Option<f64> {
        let s = self.support(c);
        (s > 0).then(|| self.counts[c][c] as f64 / s as f64)
    }

    pub fn f1(&self, c: usize) -> Option<f64> {
        let (p, r) = (self.precision(c)?, self.recall(c)?);
        Some(if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) })
    }

    pub fn weighted_f1(&self) -> f64 {
        let total = self.total() as f64;
        (0..self.n_classes())
            .map(|c| self.support(c) as f64 * self.f1(c).unwrap_or(0.0))
            .sum::<f64>()
            / total
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: String,
    pub support: usize,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    pub threshold: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

/// ROC curve from a sweep over the distinct scores, highest first. A row is
/// predicted positive when its score is at least the threshold. The first
/// point `(0, 0)` uses a threshold one above the maximum score.
pub fn roc_curve(scores: &[f64], labels: &[bool]) -> Result<RocCurve> {
    if scores.len() != labels.len() {
        return Err(Error::Data("scores and labels differ in length".into()));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Data("non-finite score".into()));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Data("ROC needs both positive and negative labels".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: scores[order[0]] + 1.0,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let t = scores[order[i]];
        while i < order.len() && scores[order[i]] == t {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
            threshold: t,
        });
    }
    let auc = points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
        .sum();
    Ok(RocCurve { points, auc })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldSummary {
    pub fold: usize,
    pub n_test: usize,
    pub accuracy: f64,
    pub weighted_f1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: String,
    pub class_names: Vec<String>,
    pub n_rows: usize,
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    pub weighted_f1: f64,
    pub per_class: Vec<ClassMetrics>,
    /// Present for two-class problems, class 1 being the positive class.
    pub roc: Option<RocCurve>,
    pub folds: Vec<FoldSummary>,
}

impl EvalReport {
    pub fn from_predictions(
        model: &str,
        class_names: &[String],
        y_true: &[usize],
        y_pred: &[usize],
        positive_scores: Option<&[f64]>,
    ) -> Result<Self> {
        if y_true.is_empty() || y_true.len() != y_pred.len() {
            return Err(Error::Data(
                "need equally many (and some) true and predicted labels".into(),
            ));
        }
        let cm = ConfusionMatrix::from_predictions(y_true, y_pred, class_names.len());
        let per_class = class_names
            .iter()
            .enumerate()
            .map(|(c, name)| ClassMetrics {
                class: name.clone(),
                support: cm.support(c),
                precision: cm.precision(c),
                recall: cm.recall(c),
                f1: cm.f1(c),
            })
            .collect();
        let roc = match positive_scores {
            Some(s) if class_names.len() == 2 => {
                let labels: Vec<bool> = y_true.iter().map(|&c| c == 1).collect();
                roc_curve(s, &labels).ok()
            }
            _ => None,
        };
        Ok(EvalReport {
            model: model.to_string(),
            class_names: class_names.to_vec(),
            n_rows: y_true.len(),
            accuracy: cm.accuracy(),
            weighted_f1: cm.weighted_f1(),
            confusion: cm,
            per_class,
            roc,
            folds: Vec::new(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn undefined_precision_for_unpredicted_class() {
        let cm = ConfusionMatrix::from_predictions(&[0, 1, 1], &[1, 1, 1], 2);
        assert_eq!(cm.precision(0), None);
        assert_eq!(cm.recall(0), Some(0.0));
        assert_eq!(cm.f1(0), None);
        assert!((cm.weighted_f1() - 2.0 / 3.0 * 0.8).abs() < 1e-12);
    }

    #[test]
    fn roc_rejects_single_class() {
        assert!(roc_curve(&[0.1, 0.2], &[true, true]).is_err());
    }

    #[test]
    fn tied_scores_give_diagonal_auc() {
        let r = roc_curve(&[0.5; 4], &[true, false, true, false]).unwrap();
        assert_eq!(r.points.len(), 2);
        assert!((r.auc - 0.5).abs() < 1e-15);
    }
}
