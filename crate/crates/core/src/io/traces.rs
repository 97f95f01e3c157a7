//! JSON-lines certainty trace files, one record per sample:
//! `{"id": ..., "label": ..., "variant": ..., "certainties": [...]}`.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::types::CertaintyTrace;

/// Traces read from one file plus non-fatal findings.
#[derive(Debug, Clone)]
pub struct TraceFile {
    pub traces: Vec<CertaintyTrace>,
    /// Permitted oddities worth surfacing, e.g. mixed epoch counts.
    pub warnings: Vec<String>,
}

pub fn read_traces(path: &Path) -> Result<TraceFile> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut traces: Vec<CertaintyTrace> = Vec::new();
    let mut warnings = Vec::new();
    let mut seen = HashSet::new();
    let mut first_epochs = None;
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            return Err(Error::parse(path, lineno, "blank line in trace file"));
        }
        let trace: CertaintyTrace = serde_json::from_str(&line)
            .map_err(|e| Error::parse(path, lineno, format!("malformed trace record: {e}")))?;
        trace
            .validate()
            .map_err(|e| Error::parse(path, lineno, e.to_string()))?;
        if !seen.insert(trace.id.clone()) {
            return Err(Error::parse(
                path,
                lineno,
                format!("duplicate sample id '{}'", trace.id),
            ));
        }
        match first_epochs {
            None => first_epochs = Some(trace.epochs()),
            Some(k) if k != trace.epochs() => warnings.push(format!(
                "trace '{}' (line {lineno}) has {} epochs, first trace has {k}",
                trace.id,
                trace.epochs()
            )),
            _ => {}
        }
        traces.push(trace);
    }
    Ok(TraceFile { traces, warnings })
}

pub fn write_traces(traces: &[CertaintyTrace], path: &Path) -> Result<()> {
    // refuse to produce a file the reader would reject
    let mut seen = HashSet::new();
    for t in traces {
        t.validate()?;
        if !seen.insert(t.id.as_str()) {
            return Err(Error::invalid(format!("duplicate sample id '{}'", t.id)));
        }
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for t in traces {
        let line = serde_json::to_string(t).map_err(|e| Error::invalid(e.to_string()))?;
        w.write_all(line.as_bytes())
            .map_err(|e| Error::io(path, e))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
