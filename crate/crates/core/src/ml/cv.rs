use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{EvalReport, FoldSummary};
use super::models::{fit, ClassWeight, Model, ModelKind, ModelSpec};
use super::resample::smote;
use super::{sub_seed, Dataset, Matrix};
use crate::error::{Error, Result};
use crate::features::Scaler;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Splits rows into `k` folds with per-class proportions preserved.
/// Each class is shuffled, the classes are concatenated, and the i-th row
/// of that sequence goes to fold `i mod k`. Index lists are sorted.
pub fn stratified_kfold(y: &[usize], k: usize, seed: u64) -> Result<Vec<Fold>> {
    if k < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {k}")));
    }
    let n_classes = y.iter().copied().max().map_or(0, |m| m + 1);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (r, &c) in y.iter().enumerate() {
        by_class[c].push(r);
    }
    for (c, members) in by_class.iter().enumerate() {
        if !members.is_empty() && members.len() < k {
            return Err(Error::ClassTooSmall {
                class: c.to_string(),
                count: members.len(),
                needed: k,
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0usize; y.len()];
    let mut i = 0;
    for members in &mut by_class {
        members.shuffle(&mut rng);
        for &r in members.iter() {
            assignment[r] = i % k;
            i += 1;
        }
    }
    Ok((0..k)
        .map(|f| {
            let (test, train): (Vec<usize>, Vec<usize>) = (0..y.len()).partition(|&r| assignment[r] == f);
            Fold { train, test }
        })
        .collect())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Imbalance {
    None,
    /// Balanced class weights; only for models that accept sample weights.
    Balanced,
    /// SMOTE applied to each training fold after standardization.
    Smote,
    /// Balanced weights where supported, SMOTE otherwise, nothing for baselines.
    #[default]
    Auto,
}

impl Imbalance {
    fn resolve(self, kind: ModelKind) -> Result<Imbalance> {
        Ok(match self {
            Imbalance::Auto if kind.is_baseline() => Imbalance::None,
            Imbalance::Auto if kind.supports_class_weight() => Imbalance::Balanced,
            Imbalance::Auto => Imbalance::Smote,
            Imbalance::Balanced if !kind.supports_class_weight() => {
                return Err(Error::Config(format!("{} does not support class weights", kind.name())))
            }
            other => other,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalOptions {
    pub k_folds: usize,
    pub imbalance: Imbalance,
    pub standardize: bool,
    pub seed: u64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            k_folds: 5,
            imbalance: Imbalance::Auto,
            standardize: true,
            seed: 0,
        }
    }
}

/// A trained model together with the scaler fitted on its training rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub class_names: Vec<String>,
    pub scaler: Option<Scaler>,
    pub model: Model,
}

impl FittedModel {
    fn transform(&self, x: &Matrix) -> Result<Matrix> {
        match &self.scaler {
            Some(s) => s.apply(x),
            None => Ok(x.clone()),
        }
    }

    pub fn predict_scores(&self, x: &Matrix) -> Result<Matrix> {
        Ok(self.model.predict_scores(&self.transform(x)?))
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        Ok(self.model.predict(&self.transform(x)?))
    }
}

fn train_on(spec: &ModelSpec, train: &Dataset, opts: &EvalOptions, seed: u64) -> Result<FittedModel> {
    let mode = opts.imbalance.resolve(spec.kind)?;
    let scaler = if opts.standardize {
        Some(Scaler::fit_all(&train.x)?)
    } else {
        None
    };
    let mut data = train.clone();
    if let Some(s) = &scaler {
        data.x = s.apply(&data.x)?;
    }
    let mut spec = spec.clone();
    spec.seed = sub_seed(spec.seed, seed);
    match mode {
        Imbalance::Balanced => spec.class_weight = ClassWeight::Balanced,
        Imbalance::Smote => data = smote(&data, seed)?,
        _ => {}
    }
    Ok(FittedModel {
        class_names: train.class_names.clone(),
        scaler,
        model: fit(&spec, &data)?,
    })
}

/// Stratified k-fold evaluation. Standardization and resampling are fitted
/// on each training fold only; metrics are computed on the pooled
/// out-of-fold predictions.
pub fn evaluate(spec: &ModelSpec, data: &Dataset, opts: &EvalOptions) -> Result<EvalReport> {
    spec.validate()?;
    let folds = stratified_kfold(&data.y, opts.k_folds, opts.seed)?;
    let results: Vec<(Vec<usize>, Vec<usize>, Matrix)> = folds
        .par_iter()
        .enumerate()
        .map(|(f, fold)| {
            let fitted = train_on(spec, &data.subset(&fold.train), opts, sub_seed(opts.seed, f as u64))?;
            let test_x = data.x.select_rows(&fold.test);
            let scores = fitted.predict_scores(&test_x)?;
            let pred = fitted.model.predict(&fitted.transform(&test_x)?);
            Ok((fold.test.clone(), pred, scores))
        })
        .collect::<Result<_>>()?;

    let mut y_pred = vec![0; data.len()];
    let mut positive = vec![0.0; data.len()];
    let mut summaries = Vec::with_capacity(results.len());
    for (f, (rows, pred, scores)) in results.iter().enumerate() {
        let truth: Vec<usize> = rows.iter().map(|&r| data.y[r]).collect();
        let fold_report = EvalReport::from_predictions(spec.kind.name(), &data.class_names, &truth, pred, None)?;
        summaries.push(FoldSummary {
            fold: f,
            n_test: rows.len(),
            accuracy: fold_report.accuracy,
            weighted_f1: fold_report.weighted_f1,
        });
        for (i, &r) in rows.iter().enumerate() {
            y_pred[r] = pred[i];
            if scores.cols() > 1 {
                positive[r] = scores.get(i, 1);
            }
        }
    }
    let mut report =
        EvalReport::from_predictions(spec.kind.name(), &data.class_names, &data.y, &y_pred, Some(&positive))?;
    report.folds = summaries;
    Ok(report)
}

/// Fits on every row, with the same preprocessing as `evaluate`.
pub fn fit_final(spec: &ModelSpec, data: &Dataset, opts: &EvalOptions) -> Result<FittedModel> {
    spec.validate()?;
    train_on(spec, data, opts, sub_seed(opts.seed, u64::MAX))
}
