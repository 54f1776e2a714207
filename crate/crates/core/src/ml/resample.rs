use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::matrix::sq_dist;
use super::Dataset;
use crate::error::{Error, Result};

pub const SMOTE_NEIGHBORS: usize = 5;

/// SMOTE with the default five neighbors.
pub fn smote(train: &Dataset, seed: u64) -> Result<Dataset> {
    smote_with(train, SMOTE_NEIGHBORS, seed)
}

/// Upsamples every class to the majority count. Each synthetic row is
/// `x + u * (x_nn - x)` for a random class member `x`, one of its
/// `k_neighbors` nearest same-class neighbors `x_nn`, and `u ~ U(0, 1)`.
/// Original rows come first and are unchanged.
pub fn smote_with(train: &Dataset, k_neighbors: usize, seed: u64) -> Result<Dataset> {
    if k_neighbors == 0 {
        return Err(Error::Config("SMOTE needs at least one neighbor".into()));
    }
    let counts = train.class_counts();
    let target = counts.iter().copied().max().unwrap_or(0);
    let mut out = train.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    for (class, &count) in counts.iter().enumerate() {
        if count == 0 || count == target {
            continue;
        }
        if count < 2 {
            return Err(Error::ClassTooSmall {
                class: train.class_names[class].clone(),
                count,
                needed: 2,
            });
        }
        let members: Vec<usize> = (0..train.len()).filter(|&r| train.y[r] == class).collect();
        let k = k_neighbors.min(count - 1);
        let neighbors: Vec<Vec<usize>> = members
            .iter()
            .map(|&a| {
                let mut d: Vec<(f64, usize)> = members
                    .iter()
                    .filter(|&&b| b != a)
                    .map(|&b| (sq_dist(train.x.row(a), train.x.row(b)), b))
                    .collect();
                d.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.cmp(&q.1)));
                d.into_iter().take(k).map(|(_, b)| b).collect()
            })
            .collect();

        let mut row = vec![0.0; train.x.cols()];
        for _ in 0..(target - count) {
            let m = rng.random_range(0..members.len());
            let base = train.x.row(members[m]);
            let nn = train.x.row(neighbors[m][rng.random_range(0..k)]);
            let mut u: f64 = rng.random();
            while u == 0.0 {
                u = rng.random();
            }
            for ((dst, a), b) in row.iter_mut().zip(base).zip(nn) {
                *dst = a + u * (b - a);
            }
            out.x.push_row(&row);
            out.y.push(class);
        }
    }
    Ok(out)
}

/// Row indices kept after reducing `class_id` to `target_n` random rows.
/// All rows of other classes are kept; order is preserved.
pub fn undersample_rows(y: &[usize], class_id: usize, target_n: usize, seed: u64) -> Result<Vec<usize>> {
    let members: Vec<usize> = (0..y.len()).filter(|&r| y[r] == class_id).collect();
    if target_n > members.len() {
        return Err(Error::Config(format!(
            "cannot keep {target_n} rows of class {class_id}: only {} present",
            members.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = vec![false; y.len()];
    for i in index::sample(&mut rng, members.len(), target_n) {
        keep[members[i]] = true;
    }
    Ok((0..y.len()).filter(|&r| y[r] != class_id || keep[r]).collect())
}

pub fn undersample(data: &Dataset, class_id: usize, target_n: usize, seed: u64) -> Result<Dataset> {
    let rows = undersample_rows(&data.y, class_id, target_n, seed)?;
    Ok(data.subset(&rows))
}
