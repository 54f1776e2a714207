use serde::{Deserialize, Serialize};

use crate::ml::Matrix;

pub const VARIANCE_FLOOR: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    pub log_prior: Vec<Option<f64>>,
    pub mean: Vec<Vec<f64>>,
    pub var: Vec<Vec<f64>>,
}

impl GaussianNb {
    pub fn fit(x: &Matrix, y: &[usize], n_classes: usize) -> Self {
        let d = x.cols();
        let mut count = vec![0usize; n_classes];
        let mut mean = vec![vec![0.0; d]; n_classes];
        for (row, &c) in x.iter_rows().zip(y) {
            count[c] += 1;
            for (m, v) in mean[c].iter_mut().zip(row) {
                *m += v;
            }
        }
        for c in 0..n_classes {
            if count[c] > 0 {
                mean[c].iter_mut().for_each(|m| *m /= count[c] as f64);
            }
        }
        let mut var = vec![vec![0.0; d]; n_classes];
        for (row, &c) in x.iter_rows().zip(y) {
            for ((s, v), m) in var[c].iter_mut().zip(row).zip(&mean[c]) {
                *s += (v - m) * (v - m);
            }
        }
        for c in 0..n_classes {
            let n = count[c].max(1) as f64;
            var[c].iter_mut().for_each(|s| *s = (*s / n).max(VARIANCE_FLOOR));
        }
        let total = y.len() as f64;
        let log_prior = count
            .iter()
            .map(|&n| (n > 0).then(|| (n as f64 / total).ln()))
            .collect();
        GaussianNb { log_prior, mean, var }
    }

    pub fn predict_scores(&self, x: &Matrix) -> Matrix {
        let k = self.log_prior.len();
        let mut out = Matrix::zeros(x.rows(), k);
        for (r, row) in x.iter_rows().enumerate() {
            let mut logp = vec![f64::NEG_INFINITY; k];
            for c in 0..k {
                if let Some(lp) = self.log_prior[c] {
                    let mut s = lp;
                    for ((v, m), var) in row.iter().zip(&self.mean[c]).zip(&self.var[c]) {
                        s -= 0.5 * ((2.0 * std::f64::consts::PI * var).ln() + (v - m) * (v - m) / var);
                    }
                    logp[c] = s;
                }
            }
            let max = logp.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let dst = out.row_mut(r);
            let mut sum = 0.0;
            for c in 0..k {
                dst[c] = (logp[c] - max).exp();
                sum += dst[c];
            }
            dst.iter_mut().for_each(|v| *v /= sum);
        }
        out
    }
}
