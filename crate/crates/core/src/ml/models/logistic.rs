//! One-vs-rest logistic regression trained by full-batch gradient descent.

use serde::{Deserialize, Serialize};

use crate::embed::sigmoid;
use crate::ml::Matrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinaryLogistic {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl BinaryLogistic {
    fn prob(&self, row: &[f64]) -> f64 {
        let z: f64 = self.bias + row.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>();
        sigmoid(z)
    }
}

/// Gradient of the sample-weighted mean log-loss plus `l2/2 * |w|^2` (the
/// bias is not penalized). Returns `(d/dw, d/db)`.
pub fn logistic_gradient(
    x: &Matrix,
    target: &[f64],
    sample_weight: &[f64],
    weights: &[f64],
    bias: f64,
    l2: f64,
) -> (Vec<f64>, f64) {
    let d = x.cols();
    let mut gw = vec![0.0; d];
    let mut gb = 0.0;
    let mut total = 0.0;
    for (r, row) in x.iter_rows().enumerate() {
        let s = sample_weight[r];
        if s == 0.0 {
            continue;
        }
        let z: f64 = bias + row.iter().zip(weights).map(|(a, b)| a * b).sum::<f64>();
        let resid = s * (sigmoid(z) - target[r]);
        for (g, v) in gw.iter_mut().zip(row) {
            *g += resid * v;
        }
        gb += resid;
        total += s;
    }
    if total > 0.0 {
        gw.iter_mut().for_each(|g| *g /= total);
        gb /= total;
    }
    for (g, w) in gw.iter_mut().zip(weights) {
        *g += l2 * w;
    }
    (gw, gb)
}

fn fit_binary(x: &Matrix, target: &[f64], sample_weight: &[f64], lr: f64, epochs: usize, l2: f64) -> BinaryLogistic {
    let mut weights = vec![0.0; x.cols()];
    let mut bias = 0.0;
    for _ in 0..epochs {
        let (gw, gb) = logistic_gradient(x, target, sample_weight, &weights, bias, l2);
        for (w, g) in weights.iter_mut().zip(&gw) {
            *w -= lr * g;
        }
        bias -= lr * gb;
    }
    BinaryLogistic { weights, bias }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticOvr {
    pub n_classes: usize,
    /// A single model for class 1 when there are two classes, otherwise one
    /// per class.
    pub models: Vec<BinaryLogistic>,
}

impl LogisticOvr {
    pub fn fit(
        x: &Matrix,
        y: &[usize],
        sample_weight: &[f64],
        n_classes: usize,
        lr: f64,
        epochs: usize,
        l2: f64,
    ) -> Self {
        let one_vs = |c: usize| -> BinaryLogistic {
            let target: Vec<f64> = y.iter().map(|&l| if l == c { 1.0 } else { 0.0 }).collect();
            fit_binary(x, &target, sample_weight, lr, epochs, l2)
        };
        let models = if n_classes == 2 {
            vec![one_vs(1)]
        } else {
            use rayon::prelude::*;
            (0..n_classes).into_par_iter().map(one_vs).collect()
        };
        LogisticOvr { n_classes, models }
    }

    pub fn predict_scores(&self, x: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(x.rows(), self.n_classes);
        for (r, row) in x.iter_rows().enumerate() {
            let dst = out.row_mut(r);
            if self.n_classes == 2 {
                let p = self.models[0].prob(row);
                dst[0] = 1.0 - p;
                dst[1] = p;
            } else {
                for (c, m) in self.models.iter().enumerate() {
                    dst[c] = m.prob(row);
                }
                let sum: f64 = dst.iter().sum();
                if sum > 0.0 {
                    dst.iter_mut().for_each(|v| *v /= sum);
                } else {
                    dst.iter_mut().for_each(|v| *v = 1.0 / self.n_classes as f64);
                }
            }
        }
        out
    }
}
