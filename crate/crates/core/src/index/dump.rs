//! JSONL embedding dump: a header line naming the model, then one
//! `{passage_id, vector}` record per passage.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::encoder::{Embedding, EncoderModel, Role};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::store::PassageStore;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DumpHeader {
    pub model_version: String,
    pub dim: usize,
    pub scalar: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpRecord {
    pub passage_id: String,
    pub vector: Vec<f64>,
}

/// Passage-role embeddings of every passage in the store, in store order.
pub fn embed_store<T: Scalar>(model: &EncoderModel<T>, store: &PassageStore) -> Vec<(String, Embedding<T>)> {
    let texts: Vec<String> = store.passages().iter().map(|p| p.embedding_text()).collect();
    let embedded = model.encode_batch(&texts, Role::Passage);
    store.passages().iter().map(|p| p.id.clone()).zip(embedded).collect()
}

pub fn write_embedding_dump<T: Scalar>(
    path: impl AsRef<Path>,
    model_version: &str,
    dim: usize,
    entries: &[(String, Embedding<T>)],
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let header = DumpHeader {
        model_version: model_version.to_owned(),
        dim,
        scalar: T::TAG.to_owned(),
        count: entries.len(),
    };
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    for (id, e) in entries {
        let rec = DumpRecord {
            passage_id: id.clone(),
            vector: e.as_slice().iter().map(|v| v.to_f64_lossy()).collect(),
        };
        serde_json::to_writer(&mut w, &rec)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_embedding_dump<T: Scalar>(path: impl AsRef<Path>) -> Result<(DumpHeader, Vec<(String, Embedding<T>)>)> {
    let path = path.as_ref();
    let mut lines = BufReader::new(File::open(path)?).lines();
    let first = lines
        .next()
        .transpose()?
        .ok_or_else(|| Error::Data(format!("{}: empty embedding dump", path.display())))?;
    let header: DumpHeader = serde_json::from_str(&first)?;
    let mut out = Vec::with_capacity(header.count);
    for (n, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: DumpRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Data(format!("{}:{}: {e}", path.display(), n + 2)))?;
        if rec.vector.len() != header.dim {
            return Err(Error::Dimension {
                expected: format!("d={}", header.dim),
                found: format!("d={} for {}", rec.vector.len(), rec.passage_id),
            });
        }
        let v = Embedding::from_unit(rec.vector.into_iter().map(T::lit).collect())?;
        out.push((rec.passage_id, v));
    }
    if out.len() != header.count {
        return Err(Error::Data(format!(
            "{}: header promises {} records, found {}",
            path.display(),
            header.count,
            out.len()
        )));
    }
    Ok((header, out))
}
