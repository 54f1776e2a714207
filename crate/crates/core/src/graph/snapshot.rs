//! Binary graph snapshot.
//!
//! All integers are little-endian.
//!
//! ```text
//! magic     8 bytes   "SLGRAPH\0"
//! version   u32       currently 1
//! n         u64       node count
//! m         u64       edge count
//! offsets   (n+1) x u64   CSR row offsets of the out-adjacency
//! targets   m x u32       CSR column indices (followees), sorted per row
//! ids       n x (u32 byte length, UTF-8 bytes)   external id of each node
//! ```
//!
//! The follower index is rebuilt on load.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Csr, FollowGraph, IdMap};
use crate::error::{self, Error, Result};

pub const SNAPSHOT_MAGIC: &[u8; 8] = b"SLGRAPH\0";
pub const SNAPSHOT_VERSION: u32 = 1;

pub fn write_snapshot<W: Write>(graph: &FollowGraph, w: W) -> Result<()> {
    let mut w = BufWriter::new(w);
    w.write_all(SNAPSHOT_MAGIC)?;
    w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
    w.write_all(&(graph.n_nodes() as u64).to_le_bytes())?;
    w.write_all(&(graph.n_edges() as u64).to_le_bytes())?;
    for o in &graph.out.offsets {
        w.write_all(&o.to_le_bytes())?;
    }
    for t in &graph.out.targets {
        w.write_all(&t.to_le_bytes())?;
    }
    for id in graph.ids.ids() {
        w.write_all(&(id.len() as u32).to_le_bytes())?;
        w.write_all(id.as_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub fn read_snapshot<R: Read>(r: R) -> Result<FollowGraph> {
    let mut r = BufReader::new(r);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(Error::Data("not a graph snapshot (bad magic)".into()));
    }
    let version = read_u32(&mut r)?;
    if version != SNAPSHOT_VERSION {
        return Err(Error::Data(format!("unsupported snapshot version {version}")));
    }
    let n = read_u64(&mut r)? as usize;
    let m = read_u64(&mut r)? as usize;
    let mut offsets = Vec::with_capacity(n + 1);
    for _ in 0..=n {
        offsets.push(read_u64(&mut r)?);
    }
    if offsets.first() != Some(&0) || offsets.last() != Some(&(m as u64)) || offsets.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Data("corrupt snapshot offsets".into()));
    }
    let mut targets = Vec::with_capacity(m);
    for _ in 0..m {
        let t = read_u32(&mut r)?;
        if t as usize >= n {
            return Err(Error::Data(format!("snapshot edge target {t} out of range")));
        }
        targets.push(t);
    }
    let mut ids = Vec::with_capacity(n);
    for _ in 0..n {
        let len = read_u32(&mut r)? as usize;
        let mut buf = vec![0u8; len];
        r.read_exact(&mut buf)?;
        ids.push(String::from_utf8(buf).map_err(|_| Error::Data("snapshot id is not UTF-8".into()))?);
    }
    let ids = IdMap::new(ids)?;
    Ok(FollowGraph::from_parts(ids, Csr { offsets, targets }))
}

pub fn save_snapshot(graph: &FollowGraph, path: &Path) -> Result<()> {
    write_snapshot(graph, error::create(path)?)
}

pub fn load_snapshot(path: &Path) -> Result<FollowGraph> {
    read_snapshot(error::open(path)?)
}
