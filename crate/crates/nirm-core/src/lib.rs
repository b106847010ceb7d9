//! Core library for node-influence ranking and network dismantling.
//!
//! The pipeline: generate tiny synthetic networks ([`generate`]), label them
//! with exhaustively-found minimum target attack sets ([`oracle`]), train a
//! small graph-attention ranking model on those labels ([`model`], [`train`]),
//! then dismantle arbitrary networks with the trained model or classical
//! centrality baselines ([`centrality`], [`dismantle`]).
//!
//! Everything is deterministic given seeds, including under the default
//! rayon-backed `parallel` feature; disabling it swaps in a sequential
//! fallback with identical outputs.

pub mod centrality;
pub mod dismantle;
pub mod generate;
pub mod graph;
pub mod io;
pub mod model;
pub mod oracle;
pub mod parallel;
pub mod train;

pub use graph::{Graph, NodeMask};

/// Sentinel score for removed nodes: finite, but below any real score, so a
/// removed node is never re-selected by an argmax.
pub const NEVER_SELECTED: f64 = f64::MIN;
