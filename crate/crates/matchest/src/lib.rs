//! Sample-efficient estimation of maximum matching size.
//!
//! The crate contains an offline peeling algorithm, its simulation from IID
//! and random-permutation edge streams, local computation oracles for an
//! approximate maximum matching, the hard instance pairs behind the sampling
//! lower bound, and a laboratory for randomized greedy matching on infinite
//! trees. Each capability has a runnable program in `examples/`.

pub mod acceptance;
pub mod divergence;
pub mod error;
pub mod estimator;
pub mod graph;
pub mod greedy;
pub mod harness;
pub mod hard;
pub mod lca;
pub mod matching;
pub mod peeling;
pub mod prf;
pub mod stats;
pub mod stream;

pub use error::{Error, Result};
pub use graph::{load_graph, EdgeId, Graph, VertexId};
