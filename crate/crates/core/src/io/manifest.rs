//! Prune manifests: a single JSON document with kept ids, removed ids, and
//! the policy that produced the split.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::types::PruneManifest;

pub fn read_manifest(path: &Path) -> Result<PruneManifest> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let manifest: PruneManifest = serde_json::from_reader(BufReader::new(file))
        .map_err(|e| Error::format(path, format!("malformed manifest: {e}")))?;
    manifest
        .validate()
        .map_err(|e| Error::format(path, e.to_string()))?;
    Ok(manifest)
}

pub fn write_manifest(manifest: &PruneManifest, path: &Path) -> Result<()> {
    manifest.validate()?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let body = serde_json::to_string_pretty(manifest).map_err(|e| Error::invalid(e.to_string()))?;
    w.write_all(body.as_bytes())
        .map_err(|e| Error::io(path, e))?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}
