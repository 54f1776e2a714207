//! CART classification tree with weighted Gini impurity.

use serde::{Deserialize, Serialize};

use crate::ml::{argmax, Matrix};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        dist: Vec<f64>,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub n_classes: usize,
    pub nodes: Vec<Node>,
}

fn gini(w: &[f64], total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    1.0 - w.iter().map(|c| (c / total) * (c / total)).sum::<f64>()
}

struct Builder<'a> {
    x: &'a Matrix,
    y: &'a [usize],
    w: &'a [f64],
    n_classes: usize,
    max_depth: Option<usize>,
    min_samples_split: usize,
    nodes: Vec<Node>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    score: f64,
}

impl Builder<'_> {
    fn class_weights(&self, rows: &[usize]) -> Vec<f64> {
        let mut cw = vec![0.0; self.n_classes];
        for &r in rows {
            cw[self.y[r]] += self.w[r];
        }
        cw
    }

    fn leaf(&mut self, cw: Vec<f64>) -> usize {
        let total: f64 = cw.iter().sum();
        let dist = if total > 0.0 {
            cw.iter().map(|c| c / total).collect()
        } else {
            vec![1.0 / self.n_classes as f64; self.n_classes]
        };
        self.nodes.push(Node::Leaf { dist });
        self.nodes.len() - 1
    }

    fn best_split(&self, rows: &mut [usize], parent: &[f64]) -> Option<BestSplit> {
        let total: f64 = parent.iter().sum();
        let mut best: Option<BestSplit> = None;
        let mut left = vec![0.0; self.n_classes];
        for f in 0..self.x.cols() {
            rows.sort_unstable_by(|&a, &b| self.x.get(a, f).total_cmp(&self.x.get(b, f)).then(a.cmp(&b)));
            left.iter_mut().for_each(|v| *v = 0.0);
            let mut wl = 0.0;
            for i in 0..rows.len() - 1 {
                let r = rows[i];
                left[self.y[r]] += self.w[r];
                wl += self.w[r];
                let a = self.x.get(r, f);
                let b = self.x.get(rows[i + 1], f);
                if a >= b {
                    continue;
                }
                let wr = total - wl;
                let right: Vec<f64> = parent.iter().zip(&left).map(|(p, l)| p - l).collect();
                let score = wl * gini(&left, wl) + wr * gini(&right, wr);
                if best.as_ref().is_none_or(|bs| score < bs.score - 1e-12) {
                    let mut threshold = 0.5 * (a + b);
                    if threshold >= b {
                        threshold = a;
                    }
                    best = Some(BestSplit {
                        feature: f,
                        threshold,
                        score,
                    });
                }
            }
        }
        best
    }

    fn build(&mut self, rows: &mut [usize], depth: usize) -> usize {
        let cw = self.class_weights(rows);
        let pure = cw.iter().filter(|&&c| c > 0.0).count() <= 1;
        let depth_capped = self.max_depth.is_some_and(|m| depth >= m);
        if pure || depth_capped || rows.len() < self.min_samples_split {
            return self.leaf(cw);
        }
        let Some(split) = self.best_split(rows, &cw) else {
            return self.leaf(cw);
        };
        let (f, t) = (split.feature, split.threshold);
        rows.sort_unstable_by_key(|&r| (self.x.get(r, f) > t, r));
        let mid = rows.partition_point(|&r| self.x.get(r, f) <= t);
        let idx = self.nodes.len();
        self.nodes.push(Node::Leaf { dist: Vec::new() });
        let (l, r) = rows.split_at_mut(mid);
        let left = self.build(l, depth + 1);
        let right = self.build(r, depth + 1);
        self.nodes[idx] = Node::Split {
            feature: f,
            threshold: t,
            left,
            right,
        };
        idx
    }
}

impl DecisionTree {
    /// Rows with zero sample weight are ignored.
    pub fn fit(
        x: &Matrix,
        y: &[usize],
        sample_weight: &[f64],
        n_classes: usize,
        max_depth: Option<usize>,
        min_samples_split: usize,
    ) -> Self {
        let mut rows: Vec<usize> = (0..x.rows()).filter(|&r| sample_weight[r] > 0.0).collect();
        let mut b = Builder {
            x,
            y,
            w: sample_weight,
            n_classes,
            max_depth,
            min_samples_split,
            nodes: Vec::new(),
        };
        if rows.is_empty() {
            b.leaf(vec![0.0; n_classes]);
        } else {
            b.build(&mut rows, 0);
        }
        DecisionTree {
            n_classes,
            nodes: b.nodes,
        }
    }

    pub fn leaf_dist(&self, row: &[f64]) -> &[f64] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { dist } => return dist,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> usize {
        argmax(self.leaf_dist(row))
    }

    pub fn predict_scores(&self, x: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(x.rows(), self.n_classes);
        for (r, row) in x.iter_rows().enumerate() {
            out.row_mut(r).copy_from_slice(self.leaf_dist(row));
        }
        out
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}
