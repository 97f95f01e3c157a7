//! File formats.
//!
//! Traces and scores are JSON-lines text. Embeddings are a little-endian
//! binary layout with a JSON-lines twin accepted under either name.
//! Manifests are plain JSON documents. Readers reject anything invalid
//! instead of repairing it; writers emit byte-deterministic output.

mod embeddings;
mod manifest;
mod scores;
mod traces;

pub use embeddings::{read_embeddings, write_embeddings};
pub use manifest::{read_manifest, write_manifest};
pub use scores::{read_scores, write_scores};
pub use traces::{read_traces, write_traces, TraceFile};

/// Quotes a CSV field when it contains a delimiter, quote, or newline.
pub(crate) fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
