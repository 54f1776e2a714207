//! Model roster. Every model predicts by taking the arg-max of its per-class
//! scores, with ties going to the smaller class index.

mod bagging;
mod baseline;
mod knn;
mod logistic;
mod naive_bayes;
mod tree;

use serde::{Deserialize, Serialize};

pub use bagging::BaggedTrees;
pub use baseline::{MajorityBaseline, RandomBaseline};
pub use knn::Knn;
pub use logistic::{logistic_gradient, LogisticOvr};
pub use naive_bayes::GaussianNb;
pub use tree::DecisionTree;

use super::{argmax, Dataset, Matrix};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    LogisticRegressionOvr,
    Knn,
    GaussianNb,
    DecisionTree,
    BaggedTrees,
    MajorityBaseline,
    RandomBaseline,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::LogisticRegressionOvr => "logistic_regression_ovr",
            ModelKind::Knn => "knn",
            ModelKind::GaussianNb => "gaussian_nb",
            ModelKind::DecisionTree => "decision_tree",
            ModelKind::BaggedTrees => "bagged_trees",
            ModelKind::MajorityBaseline => "majority_baseline",
            ModelKind::RandomBaseline => "random_baseline",
        }
    }

    /// Whether the model honours per-class sample weights.
    pub fn supports_class_weight(self) -> bool {
        matches!(
            self,
            ModelKind::LogisticRegressionOvr | ModelKind::DecisionTree | ModelKind::BaggedTrees
        )
    }

    pub fn is_baseline(self) -> bool {
        matches!(self, ModelKind::MajorityBaseline | ModelKind::RandomBaseline)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassWeight {
    #[default]
    None,
    /// `n_samples / (n_classes * count(class))`
    Balanced,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: ModelKind,
    /// Neighbors for k-NN.
    pub k: usize,
    pub n_estimators: usize,
    /// `None` grows trees until leaves are pure.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
    pub class_weight: ClassWeight,
    pub seed: u64,
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec {
            kind: ModelKind::LogisticRegressionOvr,
            k: 5,
            n_estimators: 100,
            max_depth: None,
            min_samples_split: 2,
            learning_rate: 0.1,
            epochs: 500,
            l2: 1e-4,
            class_weight: ClassWeight::None,
            seed: 0,
        }
    }
}

impl ModelSpec {
    pub fn of(kind: ModelKind) -> Self {
        ModelSpec {
            kind,
            ..ModelSpec::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: usize, what: &str| {
            if v == 0 {
                Err(Error::Config(format!("{what} must be positive")))
            } else {
                Ok(())
            }
        };
        match self.kind {
            ModelKind::Knn => positive(self.k, "k")?,
            ModelKind::BaggedTrees => positive(self.n_estimators, "n_estimators")?,
            ModelKind::LogisticRegressionOvr => {
                positive(self.epochs, "epochs")?;
                if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
                    return Err(Error::Config("learning_rate must be positive".into()));
                }
                if !(self.l2 >= 0.0 && self.l2.is_finite()) {
                    return Err(Error::Config("l2 must be nonnegative".into()));
                }
            }
            _ => {}
        }
        if self.max_depth == Some(0) {
            return Err(Error::Config("max_depth must be positive".into()));
        }
        if self.min_samples_split < 2 {
            return Err(Error::Config("min_samples_split must be at least 2".into()));
        }
        Ok(())
    }
}

/// Per-row sample weights for the requested class weighting.
pub fn sample_weights(y: &[usize], n_classes: usize, mode: ClassWeight) -> Vec<f64> {
    match mode {
        ClassWeight::None => vec![1.0; y.len()],
        ClassWeight::Balanced => {
            let mut counts = vec![0usize; n_classes];
            for &c in y {
                counts[c] += 1;
            }
            let present = counts.iter().filter(|&&c| c > 0).count() as f64;
            let n = y.len() as f64;
            let w: Vec<f64> = counts
                .iter()
                .map(|&c| if c == 0 { 0.0 } else { n / (present * c as f64) })
                .collect();
            y.iter().map(|&c| w[c]).collect()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    LogisticRegressionOvr(LogisticOvr),
    Knn(Knn),
    GaussianNb(GaussianNb),
    DecisionTree(DecisionTree),
    BaggedTrees(BaggedTrees),
    MajorityBaseline(MajorityBaseline),
    RandomBaseline(RandomBaseline),
}

pub fn fit(spec: &ModelSpec, train: &Dataset) -> Result<Model> {
    spec.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyInput("training set is empty".into()));
    }
    let present = train.class_counts().iter().filter(|&&c| c > 0).count();
    if present < 2 {
        return Err(Error::Data("training set contains a single class".into()));
    }
    let n_classes = train.n_classes();
    let weights = sample_weights(&train.y, n_classes, spec.class_weight);
    Ok(match spec.kind {
        ModelKind::LogisticRegressionOvr => Model::LogisticRegressionOvr(LogisticOvr::fit(
            &train.x,
            &train.y,
            &weights,
            n_classes,
            spec.learning_rate,
            spec.epochs,
            spec.l2,
        )),
        ModelKind::Knn => {
            if spec.k > train.len() {
                return Err(Error::Config(format!(
                    "k = {} exceeds the {} training rows",
                    spec.k,
                    train.len()
                )));
            }
            Model::Knn(Knn::fit(&train.x, &train.y, n_classes, spec.k))
        }
        ModelKind::GaussianNb => Model::GaussianNb(GaussianNb::fit(&train.x, &train.y, n_classes)),
        ModelKind::DecisionTree => Model::DecisionTree(DecisionTree::fit(
            &train.x,
            &train.y,
            &weights,
            n_classes,
            spec.max_depth,
            spec.min_samples_split,
        )),
        ModelKind::BaggedTrees => Model::BaggedTrees(BaggedTrees::fit(&train.x, &train.y, &weights, n_classes, spec)),
        ModelKind::MajorityBaseline => Model::MajorityBaseline(MajorityBaseline::fit(&train.y, n_classes)),
        ModelKind::RandomBaseline => Model::RandomBaseline(RandomBaseline::new(n_classes, spec.seed)),
    })
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::LogisticRegressionOvr(_) => ModelKind::LogisticRegressionOvr,
            Model::Knn(_) => ModelKind::Knn,
            Model::GaussianNb(_) => ModelKind::GaussianNb,
            Model::DecisionTree(_) => ModelKind::DecisionTree,
            Model::BaggedTrees(_) => ModelKind::BaggedTrees,
            Model::MajorityBaseline(_) => ModelKind::MajorityBaseline,
            Model::RandomBaseline(_) => ModelKind::RandomBaseline,
        }
    }

    /// One row of class scores per input row; rows sum to one.
    pub fn predict_scores(&self, x: &Matrix) -> Matrix {
        match self {
            Model::LogisticRegressionOvr(m) => m.predict_scores(x),
            Model::Knn(m) => m.predict_scores(x),
            Model::GaussianNb(m) => m.predict_scores(x),
            Model::DecisionTree(m) => m.predict_scores(x),
            Model::BaggedTrees(m) => m.predict_scores(x),
            Model::MajorityBaseline(m) => m.predict_scores(x),
            Model::RandomBaseline(m) => m.predict_scores(x),
        }
    }

    pub fn predict(&self, x: &Matrix) -> Vec<usize> {
        let scores = self.predict_scores(x);
        scores.iter_rows().map(argmax).collect()
    }
}
