//! `embeddings.csv`: header `node_id,e0,...,e{dim-1}`, one row per dense
//! node id. Values are written in shortest round-trip form, so an
//! export/import cycle is exact.

use std::io::{BufWriter, Read, Write};
use std::path::Path;

use super::EmbeddingMatrix;
use crate::error::{self, Error, Result};

/// Streams rows to `w` without building the text in memory.
pub fn write_embeddings<W: Write>(matrix: &EmbeddingMatrix, w: W) -> Result<()> {
    let mut w = BufWriter::new(w);
    w.write_all(b"node_id")?;
    for k in 0..matrix.dim() {
        write!(w, ",e{k}")?;
    }
    w.write_all(b"\n")?;
    for i in 0..matrix.n_rows() {
        write!(w, "{i}")?;
        for x in matrix.row(i) {
            write!(w, ",{x}")?;
        }
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_embeddings<R: Read>(r: R) -> Result<EmbeddingMatrix> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(r);
    let header = rdr.headers()?.clone();
    if header.get(0) != Some("node_id") {
        return Err(Error::parse("embeddings.csv", 1, "first column must be node_id"));
    }
    let dim = header.len() - 1;
    for (k, name) in header.iter().skip(1).enumerate() {
        if name != format!("e{k}") {
            return Err(Error::parse("embeddings.csv", 1, format!("unexpected column {name:?}")));
        }
    }
    if dim == 0 {
        return Err(Error::parse("embeddings.csv", 1, "no embedding columns"));
    }

    let mut rows: Vec<Option<Vec<f64>>> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec?;
        if rec.len() != dim + 1 {
            return Err(Error::parse(
                "embeddings.csv",
                line,
                format!(
                    "header declares dimension {dim}, row has {} values",
                    rec.len().saturating_sub(1)
                ),
            ));
        }
        let id: usize = rec[0]
            .trim()
            .parse()
            .map_err(|_| Error::parse("embeddings.csv", line, format!("bad node id {:?}", &rec[0])))?;
        let vals = rec
            .iter()
            .skip(1)
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| Error::parse("embeddings.csv", line, e.to_string()))?;
        if id >= rows.len() {
            rows.resize(id + 1, None);
        }
        if rows[id].replace(vals).is_some() {
            return Err(Error::parse("embeddings.csv", line, format!("duplicate node id {id}")));
        }
    }
    let mut data = Vec::with_capacity(rows.len() * dim);
    for (id, row) in rows.into_iter().enumerate() {
        data.extend(row.ok_or_else(|| Error::Data(format!("embeddings.csv is missing node id {id}")))?);
    }
    EmbeddingMatrix::from_vec(dim, data)
}

pub fn export_embeddings(matrix: &EmbeddingMatrix, path: &Path) -> Result<()> {
    write_embeddings(matrix, error::create(path)?)
}

pub fn import_embeddings(path: &Path) -> Result<EmbeddingMatrix> {
    read_embeddings(error::open(path)?)
}
