//! Bootstrap-aggregated decision trees with majority voting.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{DecisionTree, ModelSpec};
use crate::ml::{sub_seed, Matrix};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaggedTrees {
    pub n_classes: usize,
    pub trees: Vec<DecisionTree>,
}

impl BaggedTrees {
    /// Each estimator sees a bootstrap sample of the rows (encoded as
    /// multiplicities on top of `sample_weight`) and owns an RNG stream
    /// derived from `(spec.seed, estimator index)`.
    pub fn fit(x: &Matrix, y: &[usize], sample_weight: &[f64], n_classes: usize, spec: &ModelSpec) -> Self {
        let n = x.rows();
        let trees = (0..spec.n_estimators)
            .into_par_iter()
            .map(|e| {
                let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(spec.seed, e as u64));
                let mut mult = vec![0.0; n];
                for _ in 0..n {
                    mult[rng.random_range(0..n)] += 1.0;
                }
                let w: Vec<f64> = mult.iter().zip(sample_weight).map(|(m, s)| m * s).collect();
                DecisionTree::fit(x, y, &w, n_classes, spec.max_depth, spec.min_samples_split)
            })
            .collect();
        BaggedTrees { n_classes, trees }
    }

    /// Fraction of trees voting for each class.
    pub fn predict_scores(&self, x: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(x.rows(), self.n_classes);
        let share = 1.0 / self.trees.len() as f64;
        for (r, row) in x.iter_rows().enumerate() {
            let dst = out.row_mut(r);
            for t in &self.trees {
                dst[t.predict_row(row)] += share;
            }
        }
        out
    }
}
