use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ml::matrix::sq_dist;
use crate::ml::Matrix;

/// Brute-force Euclidean k-nearest-neighbors classifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    pub k: usize,
    pub n_classes: usize,
    pub x: Matrix,
    pub y: Vec<usize>,
}

impl Knn {
    pub fn fit(x: &Matrix, y: &[usize], n_classes: usize, k: usize) -> Self {
        Knn {
            k,
            n_classes,
            x: x.clone(),
            y: y.to_vec(),
        }
    }

    /// Vote shares among the `k` nearest training rows. Distance ties are
    /// broken by training row order.
    pub fn predict_scores(&self, x: &Matrix) -> Matrix {
        let rows: Vec<Vec<f64>> = (0..x.rows())
            .into_par_iter()
            .map(|r| {
                let q = x.row(r);
                let mut d: Vec<(f64, usize)> = self
                    .x
                    .iter_rows()
                    .enumerate()
                    .map(|(i, t)| (sq_dist(q, t), i))
                    .collect();
                let k = self.k.min(d.len());
                let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
                if k < d.len() {
                    d.select_nth_unstable_by(k - 1, cmp);
                }
                let mut votes = vec![0.0; self.n_classes];
                for &(_, i) in &d[..k] {
                    votes[self.y[i]] += 1.0;
                }
                votes.iter_mut().for_each(|v| *v /= k as f64);
                votes
            })
            .collect();
        Matrix::from_rows(&rows).unwrap_or_else(|_| Matrix::zeros(0, self.n_classes))
    }
}
