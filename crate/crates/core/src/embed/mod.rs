//! Second-order LINE embeddings trained by SGD with negative sampling.
//!
//! Every step samples an edge `(u, v)` uniformly, draws `K` noise vertices
//! with probability proportional to `out_degree^0.75`, and ascends
//! `ln σ(c_v·e_u) + Σ ln σ(-c_n·e_u)` over the vertex vector `e_u` and the
//! context vectors `c_v`, `c_n`. The learning rate decays linearly with the
//! number of samples consumed.
//!
//! Several workers may train concurrently. They share one parameter store
//! with unsynchronized (but data-race free) relaxed atomic reads and writes,
//! so concurrent updates can overwrite each other. Results are bitwise
//! reproducible only with a single worker.

mod io;
mod objective;

use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{AliasTable, FollowGraph};

pub use io::{export_embeddings, import_embeddings, read_embeddings, write_embeddings};
pub use objective::{log_sigmoid, neg_sampling_gradient, neg_sampling_loss, sigmoid, ObjectiveGradient};

/// Dense row-major matrix with one row per node.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl EmbeddingMatrix {
    pub fn new(n_rows: usize, dim: usize) -> Self {
        EmbeddingMatrix {
            dim,
            data: vec![0.0; n_rows * dim],
        }
    }

    pub fn from_vec(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || !data.len().is_multiple_of(dim) {
            return Err(Error::Data(format!(
                "{} values cannot be split into rows of dimension {dim}",
                data.len()
            )));
        }
        Ok(EmbeddingMatrix { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_rows(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

/// Vertex and context vectors; the vertex vectors are the node features.
#[derive(Clone, Debug, PartialEq)]
pub struct LineModel {
    pub vertex: EmbeddingMatrix,
    pub context: EmbeddingMatrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub dim: usize,
    /// Defaults to 100 samples per edge.
    pub total_samples: Option<u64>,
    pub negatives: usize,
    pub initial_lr: f64,
    pub seed: u64,
    pub workers: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 128,
            total_samples: None,
            negatives: 5,
            initial_lr: 0.025,
            seed: 0,
            workers: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("embedding dim must be positive".into()));
        }
        if self.negatives == 0 {
            return Err(Error::Config("negatives per edge must be positive".into()));
        }
        if !(self.initial_lr.is_finite() && self.initial_lr > 0.0) {
            return Err(Error::Config("initial learning rate must be positive".into()));
        }
        if self.total_samples == Some(0) {
            return Err(Error::Config("total_samples must be positive".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be positive".into()));
        }
        Ok(())
    }

    pub fn samples_for(&self, n_edges: usize) -> u64 {
        self.total_samples.unwrap_or(100 * n_edges as u64).max(1)
    }
}

/// Learning rate after `done` of `total` samples, floored at 1e-4 of the start.
pub fn learning_rate(initial: f64, done: u64, total: u64) -> f64 {
    let frac = 1.0 - done as f64 / total as f64;
    (initial * frac).max(initial * 1e-4)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProgressPoint {
    pub samples_done: u64,
    pub lr: f64,
    pub running_loss: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainStats {
    pub total_samples: u64,
    /// Nodes without out-edges; they keep their initial vectors.
    pub isolated_nodes: usize,
    /// Mean per-sample loss over the first and last 10% of samples.
    pub first_decile_loss: f64,
    pub last_decile_loss: f64,
    pub progress: Vec<ProgressPoint>,
}

const LR_UPDATE_INTERVAL: u64 = 10_000;

struct SharedParams {
    data: Vec<AtomicU64>,
}

impl SharedParams {
    fn from_matrix(m: &EmbeddingMatrix) -> Self {
        SharedParams {
            data: m.as_slice().iter().map(|x| AtomicU64::new(x.to_bits())).collect(),
        }
    }

    #[inline]
    fn get(&self, i: usize) -> f64 {
        f64::from_bits(self.data[i].load(Ordering::Relaxed))
    }

    #[inline]
    fn set(&self, i: usize, v: f64) {
        self.data[i].store(v.to_bits(), Ordering::Relaxed)
    }

    fn into_matrix(self, dim: usize) -> EmbeddingMatrix {
        let data = self.data.into_iter().map(|a| f64::from_bits(a.into_inner())).collect();
        EmbeddingMatrix { dim, data }
    }
}

/// One negative-sampling update for source `u`. `targets[0]` is the
/// observed neighbor, the rest are noise vertices. Returns the loss at the
/// parameters before the update.
fn sgd_update(
    vertex: &SharedParams,
    context: &SharedParams,
    dim: usize,
    u: usize,
    targets: &[usize],
    lr: f64,
    eu: &mut [f64],
    err: &mut [f64],
) -> f64 {
    let base = u * dim;
    for (k, x) in eu.iter_mut().enumerate() {
        *x = vertex.get(base + k);
    }
    err.iter_mut().for_each(|e| *e = 0.0);
    let mut loss = 0.0;
    for (d, &t) in targets.iter().enumerate() {
        let label = if d == 0 { 1.0 } else { 0.0 };
        let tb = t * dim;
        let mut score = 0.0;
        for k in 0..dim {
            score += eu[k] * context.get(tb + k);
        }
        loss -= if d == 0 {
            log_sigmoid(score)
        } else {
            log_sigmoid(-score)
        };
        let g = (label - sigmoid(score)) * lr;
        for k in 0..dim {
            let c = context.get(tb + k);
            err[k] += g * c;
            context.set(tb + k, c + g * eu[k]);
        }
    }
    for k in 0..dim {
        vertex.set(base + k, eu[k] + err[k]);
    }
    loss
}

fn init_model(n: usize, dim: usize, seed: u64) -> LineModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = 0.5 / dim as f64;
    let mut vertex = EmbeddingMatrix::new(n, dim);
    for x in vertex.data.iter_mut() {
        *x = rng.random_range(-half..half);
    }
    LineModel {
        vertex,
        context: EmbeddingMatrix::new(n, dim),
    }
}

pub fn train_line2(graph: &FollowGraph, cfg: &TrainConfig) -> Result<(LineModel, TrainStats)> {
    cfg.validate()?;
    let n = graph.n_nodes();
    let m = graph.n_edges();
    if n == 0 || m == 0 {
        return Err(Error::EmptyInput("cannot embed an empty graph".into()));
    }
    let dim = cfg.dim;
    let total = cfg.samples_for(m);

    let edge_table = AliasTable::new(&vec![1.0; m])?;
    let degrees = graph.out_degrees();
    let noise_weights: Vec<f64> = degrees.iter().map(|&d| (d as f64).powf(0.75)).collect();
    let noise_table = AliasTable::new(&noise_weights)?;
    let sources: Vec<u32> = graph.edges().map(|(s, _)| s).collect();
    let targets = graph.edge_targets();
    let isolated = degrees.iter().filter(|&&d| d == 0).count();
    if isolated > 0 {
        log::info!("{isolated} node(s) have no out-edges and keep their initial vectors");
    }

    let init = init_model(n, dim, cfg.seed);
    let vertex = SharedParams::from_matrix(&init.vertex);
    let context = SharedParams::from_matrix(&init.context);
    let done = AtomicU64::new(0);

    let workers = cfg.workers.min(total as usize).max(1);
    let decile = (total / 10).max(1);
    let progress_every = (total / 20).max(1);

    let run_worker = |w: usize| -> WorkerTally {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(w as u64 + 1);
        let share = total / workers as u64 + u64::from((w as u64) < total % workers as u64);
        let mut tally = WorkerTally::default();
        let mut eu = vec![0.0; dim];
        let mut err = vec![0.0; dim];
        let mut picks = vec![0usize; cfg.negatives + 1];
        let mut lr = cfg.initial_lr;
        let mut since_sync = 0u64;
        let mut window = RunningMean::default();
        for _ in 0..share {
            if since_sync == LR_UPDATE_INTERVAL {
                let global = done.fetch_add(since_sync, Ordering::Relaxed) + since_sync;
                lr = learning_rate(cfg.initial_lr, global, total);
                since_sync = 0;
            }
            let e = edge_table.sample(&mut rng);
            let u = sources[e] as usize;
            picks[0] = targets[e] as usize;
            for p in picks.iter_mut().skip(1) {
                *p = noise_table.sample(&mut rng);
            }
            let loss = sgd_update(&vertex, &context, dim, u, &picks, lr, &mut eu, &mut err);
            // Position in the global schedule, exact for one worker.
            let pos = done.load(Ordering::Relaxed) + since_sync;
            if pos < decile {
                tally.first_sum += loss;
                tally.first_n += 1;
            } else if pos >= total - decile {
                tally.last_sum += loss;
                tally.last_n += 1;
            }
            window.push(loss);
            since_sync += 1;
            if w == 0 && (pos + 1).is_multiple_of(progress_every) {
                let point = ProgressPoint {
                    samples_done: pos + 1,
                    lr,
                    running_loss: window.mean(),
                };
                log::debug!(
                    "line2: {}/{} samples, lr {:.6}, loss {:.5}",
                    point.samples_done,
                    total,
                    point.lr,
                    point.running_loss
                );
                tally.progress.push(point);
            }
        }
        done.fetch_add(since_sync, Ordering::Relaxed);
        tally
    };

    let tallies: Vec<WorkerTally> = if workers == 1 {
        vec![run_worker(0)]
    } else {
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..workers).map(|w| s.spawn(move || run_worker(w))).collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("worker panicked"))
                .collect()
        })
    };

    let (mut fs, mut fnn, mut ls, mut ln) = (0.0, 0u64, 0.0, 0u64);
    let mut progress = Vec::new();
    for t in tallies {
        fs += t.first_sum;
        fnn += t.first_n;
        ls += t.last_sum;
        ln += t.last_n;
        progress.extend(t.progress);
    }
    let model = LineModel {
        vertex: vertex.into_matrix(dim),
        context: context.into_matrix(dim),
    };
    if !(model.vertex.all_finite() && model.context.all_finite()) {
        return Err(Error::Data("embedding training diverged (non-finite values)".into()));
    }
    let stats = TrainStats {
        total_samples: total,
        isolated_nodes: isolated,
        first_decile_loss: if fnn > 0 { fs / fnn as f64 } else { f64::NAN },
        last_decile_loss: if ln > 0 { ls / ln as f64 } else { f64::NAN },
        progress,
    };
    Ok((model, stats))
}

#[derive(Default)]
struct WorkerTally {
    first_sum: f64,
    first_n: u64,
    last_sum: f64,
    last_n: u64,
    progress: Vec<ProgressPoint>,
}

/// Exponential moving average used for the progress log.
#[derive(Default)]
struct RunningMean {
    value: Option<f64>,
}

impl RunningMean {
    fn push(&mut self, x: f64) {
        self.value = Some(match self.value {
            None => x,
            Some(v) => 0.999 * v + 0.001 * x,
        });
    }

    fn mean(&self) -> f64 {
        self.value.unwrap_or(f64::NAN)
    }
}

/// Cosine similarity of two vectors; zero if either is the zero vector.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}
