//! Importance scoring and dataset pruning toolkit.
//!
//! The pipeline: record per-epoch certainty traces while training a model,
//! reduce each trace to an importance score (sliding-window dynamic
//! uncertainty or a DFT frequency-band magnitude), optionally extrapolate
//! scores to unscored samples with exact k-NN search over embeddings, and
//! finally turn a score table into a kept/removed dataset manifest.

pub mod error;
pub mod extrapolate;
pub mod io;
pub mod pruning;
pub mod rng;
pub mod scoring;
pub mod types;

mod numeric;

pub use error::{Error, Result};
