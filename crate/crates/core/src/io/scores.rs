//! JSON-lines score files: a header record describing the metric, then one
//! `{"id": ..., "score": ...}` record per sample.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Metric, Provenance, ScoreTable};

#[derive(Serialize, Deserialize)]
struct ScoreHeader {
    metric: Metric,
    params: serde_json::Value,
    provenance: Provenance,
}

#[derive(Serialize, Deserialize)]
struct ScoreLine {
    id: String,
    score: f64,
}

pub fn read_scores(path: &Path) -> Result<ScoreTable> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines().enumerate();

    let header: ScoreHeader = match lines.next() {
        None => return Err(Error::format(path, "missing score header line")),
        Some((_, line)) => {
            let line = line.map_err(|e| Error::io(path, e))?;
            serde_json::from_str(&line)
                .map_err(|e| Error::parse(path, 1, format!("malformed score header: {e}")))?
        }
    };

    let mut table = ScoreTable::new(header.metric, header.params, header.provenance);
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            return Err(Error::parse(path, lineno, "blank line in score file"));
        }
        let entry: ScoreLine = serde_json::from_str(&line)
            .map_err(|e| Error::parse(path, lineno, format!("malformed score record: {e}")))?;
        if entry.id.is_empty() {
            return Err(Error::parse(path, lineno, "empty sample id"));
        }
        if table
            .entries
            .insert(entry.id.clone(), entry.score)
            .is_some()
        {
            return Err(Error::parse(
                path,
                lineno,
                format!("duplicate sample id '{}'", entry.id),
            ));
        }
    }
    table
        .validate()
        .map_err(|e| Error::format(path, e.to_string()))?;
    Ok(table)
}

/// Writes entries in id order; output bytes are a pure function of the table.
pub fn write_scores(table: &ScoreTable, path: &Path) -> Result<()> {
    table.validate()?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let header = ScoreHeader {
        metric: table.metric,
        params: table.params.clone(),
        provenance: table.provenance,
    };
    let mut emit = |line: String| -> Result<()> {
        w.write_all(line.as_bytes())
            .map_err(|e| Error::io(path, e))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))
    };
    emit(serde_json::to_string(&header).map_err(|e| Error::invalid(e.to_string()))?)?;
    for (id, &score) in &table.entries {
        let line = ScoreLine {
            id: id.clone(),
            score,
        };
        emit(serde_json::to_string(&line).map_err(|e| Error::invalid(e.to_string()))?)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
