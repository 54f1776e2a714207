//! Compact directed follower graph.
//!
//! Nodes are dense `0..n` integers; the external id of each node lives in an
//! [`IdMap`] stored once alongside the adjacency. Out-edges point from a
//! follower to the account it follows. A reverse (follower) index is kept so
//! exposure derivation can find everyone reached by a share.

mod alias;
mod snapshot;

use std::collections::HashMap;

pub use alias::AliasTable;
pub use snapshot::{load_snapshot, read_snapshot, save_snapshot, write_snapshot, SNAPSHOT_MAGIC, SNAPSHOT_VERSION};

use crate::error::{Error, Result};
use crate::ingest::EdgeList;

/// Bidirectional mapping between external user ids and dense node indices.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IdMap {
    ids: Vec<String>,
    index: HashMap<String, u32>,
}

impl IdMap {
    pub fn new(ids: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), i as u32).is_some() {
                return Err(Error::Data(format!("duplicate node id {id:?}")));
            }
        }
        Ok(IdMap { ids, index })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn id(&self, idx: usize) -> &str {
        &self.ids[idx]
    }

    pub fn index_of(&self, id: &str) -> Option<u32> {
        self.index.get(id).copied()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }
}

/// Compressed sparse row adjacency.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Csr {
    offsets: Vec<u64>,
    targets: Vec<u32>,
}

impl Csr {
    /// Builds sorted rows from `(row, col)` pairs.
    fn from_pairs(n: usize, pairs: impl Iterator<Item = (u32, u32)> + Clone) -> Self {
        let mut counts = vec![0u64; n + 1];
        for (r, _) in pairs.clone() {
            counts[r as usize + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut cursor = counts.clone();
        let mut targets = vec![0u32; counts[n] as usize];
        for (r, c) in pairs {
            let slot = &mut cursor[r as usize];
            targets[*slot as usize] = c;
            *slot += 1;
        }
        for i in 0..n {
            targets[counts[i] as usize..counts[i + 1] as usize].sort_unstable();
        }
        Csr {
            offsets: counts,
            targets,
        }
    }

    fn row(&self, i: usize) -> &[u32] {
        &self.targets[self.offsets[i] as usize..self.offsets[i + 1] as usize]
    }

    fn transpose(&self, n: usize) -> Self {
        let pairs = (0..n).flat_map(move |r| self.row(r).iter().map(move |&c| (c, r as u32)));
        Csr::from_pairs(n, pairs)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FollowGraph {
    ids: IdMap,
    out: Csr,
    followers: Csr,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct BuildStats {
    pub self_loops_dropped: usize,
    pub duplicates_dropped: usize,
}

/// Builds the immutable graph, dropping self-loops (and any duplicates that
/// slipped past ingestion).
pub fn build_graph(edges: &EdgeList) -> Result<(FollowGraph, BuildStats)> {
    let mut stats = BuildStats {
        duplicates_dropped: edges.duplicates,
        ..BuildStats::default()
    };
    let mut kept: Vec<(u32, u32)> = Vec::with_capacity(edges.edges.len());
    for &(a, b) in &edges.edges {
        if a == b {
            stats.self_loops_dropped += 1;
        } else {
            kept.push((a, b));
        }
    }
    if kept.is_empty() {
        return Err(Error::EmptyInput("edge list has no usable edges".into()));
    }
    if stats.self_loops_dropped > 0 {
        log::warn!("dropped {} self-loop edge(s)", stats.self_loops_dropped);
    }
    let n = edges.ids.len();
    let mut out = Csr::from_pairs(n, kept.iter().copied());
    let before = out.targets.len();
    dedup_rows(&mut out, n);
    stats.duplicates_dropped += before - out.targets.len();
    let ids = IdMap::new(edges.ids.clone())?;
    Ok((FollowGraph::from_parts(ids, out), stats))
}

fn dedup_rows(csr: &mut Csr, n: usize) {
    let mut offsets = Vec::with_capacity(n + 1);
    let mut targets = Vec::with_capacity(csr.targets.len());
    offsets.push(0u64);
    for i in 0..n {
        let row = csr.row(i);
        let start = targets.len();
        for &t in row {
            if targets.len() == start || *targets.last().unwrap() != t {
                targets.push(t);
            }
        }
        offsets.push(targets.len() as u64);
    }
    *csr = Csr { offsets, targets };
}

impl FollowGraph {
    fn from_parts(ids: IdMap, out: Csr) -> Self {
        let followers = out.transpose(ids.len());
        FollowGraph { ids, out, followers }
    }

    /// Builds a graph directly from dense edges; used by generators.
    pub fn from_dense(ids: Vec<String>, edges: &[(u32, u32)]) -> Result<Self> {
        let el = EdgeList {
            ids,
            edges: edges.to_vec(),
            duplicates: 0,
        };
        build_graph(&el).map(|(g, _)| g)
    }

    pub fn n_nodes(&self) -> usize {
        self.ids.len()
    }

    pub fn n_edges(&self) -> usize {
        self.out.targets.len()
    }

    pub fn ids(&self) -> &IdMap {
        &self.ids
    }

    /// Accounts followed by `node`.
    pub fn out_neighbors(&self, node: usize) -> &[u32] {
        self.out.row(node)
    }

    /// Accounts following `node`, i.e. everyone exposed when it shares.
    pub fn followers(&self, node: usize) -> &[u32] {
        self.followers.row(node)
    }

    pub fn out_degree(&self, node: usize) -> usize {
        (self.out.offsets[node + 1] - self.out.offsets[node]) as usize
    }

    pub fn out_degrees(&self) -> Vec<usize> {
        (0..self.n_nodes()).map(|i| self.out_degree(i)).collect()
    }

    /// Edges in CSR order; index `e` is stable and can be used with
    /// [`FollowGraph::edge_source`].
    pub fn edge_targets(&self) -> &[u32] {
        &self.out.targets
    }

    pub fn offsets(&self) -> &[u64] {
        &self.out.offsets
    }

    /// Source node of edge `e` (binary search over offsets).
    pub fn edge_source(&self, e: usize) -> usize {
        let e = e as u64;
        self.out.offsets.partition_point(|&o| o <= e) - 1
    }

    /// Edge list as dense `(source, target)` pairs in CSR order.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.n_nodes()).flat_map(move |u| self.out.row(u).iter().map(move |&v| (u as u32, v)))
    }
}
