use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ml::{argmax, Matrix};

/// Predicts the most frequent training class for every row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MajorityBaseline {
    pub class: usize,
    pub n_classes: usize,
}

impl MajorityBaseline {
    pub fn fit(y: &[usize], n_classes: usize) -> Self {
        let mut counts = vec![0.0; n_classes];
        for &c in y {
            counts[c] += 1.0;
        }
        MajorityBaseline {
            class: argmax(&counts),
            n_classes,
        }
    }

    pub fn predict_scores(&self, x: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(x.rows(), self.n_classes);
        for r in 0..x.rows() {
            out.row_mut(r)[self.class] = 1.0;
        }
        out
    }
}

/// Predicts a uniformly random class. Scores are uniform random draws, so
/// predictions are reproducible for a given seed and input size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomBaseline {
    pub n_classes: usize,
    pub seed: u64,
}

impl RandomBaseline {
    pub fn new(n_classes: usize, seed: u64) -> Self {
        RandomBaseline { n_classes, seed }
    }

    pub fn predict_scores(&self, x: &Matrix) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut out = Matrix::zeros(x.rows(), self.n_classes);
        for r in 0..x.rows() {
            let dst = out.row_mut(r);
            dst.iter_mut().for_each(|v| *v = rng.random::<f64>());
            let sum: f64 = dst.iter().sum();
            dst.iter_mut().for_each(|v| *v /= sum);
        }
        out
    }
}
