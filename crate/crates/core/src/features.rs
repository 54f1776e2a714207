//! Feature fusion and z-score standardization.
//!
//! Column order is fixed: embedding dimensions `e0..e{dim-1}` followed, when
//! requested, by the seven profile columns in [`PROFILE_COLUMNS`] order.

use std::collections::HashMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::embed::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::graph::IdMap;
use crate::ingest::{UserProfile, PROFILE_COLUMNS};
use crate::labeler::BehaviorLabel;
use crate::ml::Matrix;

/// Per-column mean and population standard deviation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Columns whose spread is below this are treated as constant.
const MIN_STD: f64 = 1e-12;

impl Scaler {
    /// Fits on the given rows only.
    pub fn fit(x: &Matrix, rows: &[usize]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyInput("scaler needs at least one training row".into()));
        }
        let d = x.cols();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; d];
        for &r in rows {
            for (m, v) in mean.iter_mut().zip(x.row(r)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for &r in rows {
            for ((s, v), m) in var.iter_mut().zip(x.row(r)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var.into_iter().map(|s| (s / n).sqrt()).collect();
        Ok(Scaler { mean, std })
    }

    pub fn fit_all(x: &Matrix) -> Result<Self> {
        let rows: Vec<usize> = (0..x.rows()).collect();
        Scaler::fit(x, &rows)
    }

    /// Standardizes every row; constant columns become zeros.
    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.mean.len() {
            return Err(Error::Data(format!(
                "scaler has {} columns, matrix has {}",
                self.mean.len(),
                x.cols()
            )));
        }
        let mut out = x.clone();
        for r in 0..out.rows() {
            self.apply_row(out.row_mut(r));
        }
        Ok(out)
    }

    pub fn apply_row(&self, row: &mut [f64]) {
        for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
            *v = if *s < MIN_STD { 0.0 } else { (*v - m) / s };
        }
    }
}

/// Fused features for a list of users.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    pub users: Vec<String>,
    pub columns: Vec<String>,
    pub values: Matrix,
}

impl FeatureMatrix {
    /// Number of leading embedding columns.
    pub fn embedding_dim(&self) -> usize {
        self.columns
            .iter()
            .take_while(|c| c.starts_with('e') && c[1..].parse::<usize>().is_ok())
            .count()
    }

    /// Keeps only the leading `n` columns.
    pub fn leading_columns(&self, n: usize) -> FeatureMatrix {
        let cols: Vec<usize> = (0..n).collect();
        FeatureMatrix {
            users: self.users.clone(),
            columns: self.columns[..n].to_vec(),
            values: self.values.select_columns(&cols),
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            users: rows.iter().map(|&r| self.users[r].clone()).collect(),
            columns: self.columns.clone(),
            values: self.values.select_rows(rows),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Fused {
    pub features: FeatureMatrix,
    /// Users with no profile row; their profile columns are zeros.
    pub imputed_profiles: Vec<String>,
}

/// Builds one row per user: the embedding row, then optionally the profile.
pub fn fuse(
    embeddings: &EmbeddingMatrix,
    ids: &IdMap,
    profiles: Option<&HashMap<String, UserProfile>>,
    users: &[String],
) -> Result<Fused> {
    let dim = embeddings.dim();
    let mut columns: Vec<String> = (0..dim).map(|k| format!("e{k}")).collect();
    if profiles.is_some() {
        columns.extend(PROFILE_COLUMNS.iter().map(|c| c.to_string()));
    }
    let mut values = Matrix::zeros(users.len(), columns.len());
    let mut imputed = Vec::new();
    let imputed_profile = UserProfile::imputed();
    for (r, user) in users.iter().enumerate() {
        let node = ids
            .index_of(user)
            .filter(|&i| (i as usize) < embeddings.n_rows())
            .ok_or_else(|| Error::MissingEmbedding(user.clone()))?;
        let row = values.row_mut(r);
        row[..dim].copy_from_slice(embeddings.row(node as usize));
        if let Some(profiles) = profiles {
            let p = profiles.get(user).unwrap_or_else(|| {
                imputed.push(user.clone());
                &imputed_profile
            });
            row[dim..].copy_from_slice(&p.as_array());
        }
    }
    if !imputed.is_empty() {
        log::warn!("{} user(s) had no profile row; imputed zeros", imputed.len());
    }
    Ok(Fused {
        features: FeatureMatrix {
            users: users.to_vec(),
            columns,
            values,
        },
        imputed_profiles: imputed,
    })
}

/// Writes `features.csv`: `user_id,label,<feature columns>`.
pub fn write_feature_table<W: Write>(w: W, fm: &FeatureMatrix, labels: &[BehaviorLabel]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let mut header = vec!["user_id".to_string(), "label".to_string()];
    header.extend(fm.columns.iter().cloned());
    wtr.write_record(&header)?;
    for (r, user) in fm.users.iter().enumerate() {
        let mut rec = vec![user.clone(), labels[r].name().to_string()];
        rec.extend(fm.values.row(r).iter().map(|v| v.to_string()));
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_feature_table<R: Read>(r: R) -> Result<(FeatureMatrix, Vec<BehaviorLabel>)> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers()?.clone();
    if header.get(0) != Some("user_id") || header.get(1) != Some("label") {
        return Err(Error::parse("features.csv", 1, "expected user_id,label,... header"));
    }
    let columns: Vec<String> = header.iter().skip(2).map(str::to_string).collect();
    let mut users = Vec::new();
    let mut labels = Vec::new();
    let mut data = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        users.push(rec[0].to_string());
        labels.push(rec[1].parse()?);
        for v in rec.iter().skip(2) {
            data.push(
                v.parse::<f64>()
                    .map_err(|e| Error::parse("features.csv", i + 2, e.to_string()))?,
            );
        }
    }
    let values = Matrix::from_vec(users.len(), columns.len(), data)?;
    Ok((FeatureMatrix { users, columns, values }, labels))
}
