use super::Matrix;
use crate::error::{Error, Result};

/// Feature rows with an integer class per row.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub x: Matrix,
    pub y: Vec<usize>,
    pub class_names: Vec<String>,
}

impl Dataset {
    pub fn new(x: Matrix, y: Vec<usize>, class_names: Vec<String>) -> Result<Self> {
        if x.rows() != y.len() {
            return Err(Error::Data(format!("{} feature rows but {} labels", x.rows(), y.len())));
        }
        if let Some(&bad) = y.iter().find(|&&c| c >= class_names.len()) {
            return Err(Error::Data(format!(
                "label {bad} out of range for {} classes",
                class_names.len()
            )));
        }
        Ok(Dataset { x, y, class_names })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &c in &self.y {
            counts[c] += 1;
        }
        counts
    }

    pub fn subset(&self, rows: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select_rows(rows),
            y: rows.iter().map(|&r| self.y[r]).collect(),
            class_names: self.class_names.clone(),
        }
    }
}
