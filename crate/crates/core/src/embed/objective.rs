//! Negative-sampling objective for a single `(vertex, positive, negatives)`
//! group, as a loss to minimize.

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `ln σ(x)` without overflow for large `|x|`.
#[inline]
pub fn log_sigmoid(x: f64) -> f64 {
    let z = -x;
    -(z.max(0.0) + (-z.abs()).exp().ln_1p())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `-ln σ(c_pos·e) - Σ ln σ(-c_neg·e)`
pub fn neg_sampling_loss(vertex: &[f64], positive: &[f64], negatives: &[&[f64]]) -> f64 {
    let mut loss = -log_sigmoid(dot(vertex, positive));
    for n in negatives {
        loss -= log_sigmoid(-dot(vertex, n));
    }
    loss
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObjectiveGradient {
    pub vertex: Vec<f64>,
    pub positive: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

/// Analytic gradient of [`neg_sampling_loss`].
pub fn neg_sampling_gradient(vertex: &[f64], positive: &[f64], negatives: &[&[f64]]) -> ObjectiveGradient {
    let sp = sigmoid(dot(vertex, positive));
    let mut gv: Vec<f64> = positive.iter().map(|c| -(1.0 - sp) * c).collect();
    let gp: Vec<f64> = vertex.iter().map(|e| -(1.0 - sp) * e).collect();
    let mut gn = Vec::with_capacity(negatives.len());
    for n in negatives {
        let sn = sigmoid(dot(vertex, n));
        for (g, c) in gv.iter_mut().zip(n.iter()) {
            *g += sn * c;
        }
        gn.push(vertex.iter().map(|e| sn * e).collect());
    }
    ObjectiveGradient {
        vertex: gv,
        positive: gp,
        negatives: gn,
    }
}
