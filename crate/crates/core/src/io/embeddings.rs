//! Embedding files.
//!
//! Binary layout: magic `EMB1`, little-endian u32 row count and dimension,
//! row-major f32 values, newline-terminated UTF-8 ids, then one i32 label
//! per row with -1 meaning unlabeled. The JSON-lines twin holds
//! `{"id": ..., "label": ..., "vector": [...]}` records. Readers sniff the
//! magic so either encoding is accepted under either name; writers pick the
//! encoding from the output extension.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::EmbeddingSet;

const MAGIC: [u8; 4] = *b"EMB1";

#[derive(Serialize, Deserialize)]
struct EmbRecord {
    id: String,
    #[serde(default)]
    label: Option<u32>,
    vector: Vec<f64>,
}

pub fn read_embeddings(path: &Path) -> Result<EmbeddingSet> {
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut magic = [0u8; 4];
    let is_binary = match file.read_exact(&mut magic) {
        Ok(()) => magic == MAGIC,
        // shorter than a magic header: only plausible as (empty) text
        Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => false,
        Err(e) => return Err(Error::io(path, e)),
    };
    let set = if is_binary {
        read_binary(BufReader::new(file), path)?
    } else {
        drop(file);
        read_jsonl(path)?
    };
    set.validate()
        .map_err(|e| Error::format(path, e.to_string()))?;
    Ok(set)
}

fn read_binary(mut r: impl Read, path: &Path) -> Result<EmbeddingSet> {
    let truncated = |what: &str| Error::format(path, format!("truncated file: {what}"));
    let mut u32_buf = [0u8; 4];
    let mut read_u32 = |r: &mut dyn Read, what: &str| -> Result<u32> {
        r.read_exact(&mut u32_buf).map_err(|_| truncated(what))?;
        Ok(u32::from_le_bytes(u32_buf))
    };
    let n = read_u32(&mut r, "row count")? as usize;
    let dim = read_u32(&mut r, "dimension")? as usize;
    if dim == 0 {
        return Err(Error::format(path, "dimension must be at least 1"));
    }

    let mut raw = vec![0u8; n * dim * 4];
    r.read_exact(&mut raw)
        .map_err(|_| truncated("vector block"))?;
    let mut vectors = Vec::with_capacity(n * dim);
    for (i, bytes) in raw.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(bytes.try_into().unwrap());
        if !v.is_finite() {
            return Err(Error::format(
                path,
                format!(
                    "non-finite value in row {} (component {})",
                    i / dim,
                    i % dim
                ),
            ));
        }
        vectors.push(v as f64);
    }

    let mut ids = Vec::with_capacity(n);
    let mut reader = BufReader::new(r);
    for i in 0..n {
        let mut buf = Vec::new();
        let got = reader
            .read_until(b'\n', &mut buf)
            .map_err(|e| Error::io(path, e))?;
        if got == 0 || buf.last() != Some(&b'\n') {
            return Err(truncated(&format!("id {i}")));
        }
        buf.pop();
        let id = String::from_utf8(buf)
            .map_err(|_| Error::format(path, format!("id {i} is not valid UTF-8")))?;
        ids.push(id);
    }

    let mut labels = Vec::with_capacity(n);
    let mut label_buf = [0u8; 4];
    for (i, id) in ids.iter().enumerate() {
        reader
            .read_exact(&mut label_buf)
            .map_err(|_| truncated(&format!("label {i}")))?;
        let v = i32::from_le_bytes(label_buf);
        labels.push(match v {
            -1 => None,
            v if v < 0 => {
                return Err(Error::format(
                    path,
                    format!("label {v} for row '{id}' (only -1 marks unlabeled)"),
                ))
            }
            v => Some(v as u32),
        });
    }

    let mut rest = [0u8; 1];
    if reader.read(&mut rest).map_err(|e| Error::io(path, e))? != 0 {
        return Err(Error::format(path, "trailing bytes after label block"));
    }
    Ok(EmbeddingSet {
        ids,
        dim,
        vectors,
        labels,
    })
}

fn read_jsonl(path: &Path) -> Result<EmbeddingSet> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut set: Option<EmbeddingSet> = None;
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            return Err(Error::parse(path, lineno, "blank line in embeddings file"));
        }
        let rec: EmbRecord = serde_json::from_str(&line)
            .map_err(|e| Error::parse(path, lineno, format!("malformed embedding record: {e}")))?;
        let set = match &mut set {
            Some(set) => set,
            None => {
                if rec.vector.is_empty() {
                    return Err(Error::parse(path, lineno, "empty vector"));
                }
                set.insert(EmbeddingSet::new(rec.vector.len()))
            }
        };
        if rec.vector.len() != set.dim {
            return Err(Error::parse(
                path,
                lineno,
                format!(
                    "row '{}' has {} values, expected {}",
                    rec.id,
                    rec.vector.len(),
                    set.dim
                ),
            ));
        }
        set.push(rec.id, &rec.vector, rec.label)?;
    }
    set.ok_or_else(|| Error::format(path, "empty embeddings file"))
}

/// Writes the JSON-lines encoding for `.jsonl` outputs, binary otherwise.
pub fn write_embeddings(set: &EmbeddingSet, path: &Path) -> Result<()> {
    set.validate()?;
    let jsonl = path
        .to_str()
        .map(|p| p.ends_with(".jsonl"))
        .unwrap_or(false);
    if jsonl {
        write_jsonl(set, path)
    } else {
        write_binary(set, path)
    }
}

fn write_binary(set: &EmbeddingSet, path: &Path) -> Result<()> {
    let n = u32::try_from(set.len())
        .map_err(|_| Error::invalid("too many rows for the binary layout"))?;
    let dim = u32::try_from(set.dim)
        .map_err(|_| Error::invalid("dimension too large for the binary layout"))?;
    for id in &set.ids {
        if id.contains('\n') {
            return Err(Error::invalid(format!(
                "id {id:?} contains a newline and cannot be stored in the binary layout"
            )));
        }
    }
    for label in set.labels.iter().flatten() {
        if *label > i32::MAX as u32 {
            return Err(Error::invalid(format!(
                "label {label} too large for the binary layout"
            )));
        }
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| Error::io(path, e);
    w.write_all(&MAGIC).map_err(io_err)?;
    w.write_all(&n.to_le_bytes()).map_err(io_err)?;
    w.write_all(&dim.to_le_bytes()).map_err(io_err)?;
    for &v in &set.vectors {
        w.write_all(&(v as f32).to_le_bytes()).map_err(io_err)?;
    }
    for id in &set.ids {
        w.write_all(id.as_bytes()).map_err(io_err)?;
        w.write_all(b"\n").map_err(io_err)?;
    }
    for label in &set.labels {
        let v: i32 = match label {
            None => -1,
            Some(l) => *l as i32,
        };
        w.write_all(&v.to_le_bytes()).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

fn write_jsonl(set: &EmbeddingSet, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for i in 0..set.len() {
        let rec = EmbRecord {
            id: set.ids[i].clone(),
            label: set.labels[i],
            vector: set.row(i).to_vec(),
        };
        let line = serde_json::to_string(&rec).map_err(|e| Error::invalid(e.to_string()))?;
        w.write_all(line.as_bytes())
            .map_err(|e| Error::io(path, e))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
