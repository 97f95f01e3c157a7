//! Reference trainer for generating certainty traces end to end: Gaussian
//! blob datasets, a small tanh classifier, PGD attacks, standard and
//! TRADES-style adversarial training, and per-epoch trace recording.
//!
//! Everything here is desk scale and single-threaded: runs are bitwise
//! reproducible from (seed, config).

pub mod attack;
pub mod data;
pub mod loss;
pub mod model;
pub mod train;

pub use prunekit_core::{Error, Result};
