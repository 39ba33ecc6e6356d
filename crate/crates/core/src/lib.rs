//! Diffusion-distance-guided stress-majorization message passing on graphs.
//!
//! The crate is organised bottom-up: [`graph`] holds the sparse graph and its
//! normalized operators, [`spectral`] the dense and Lanczos eigensolvers,
//! [`distances`] the diffusion and baseline distances, [`propagation`] the
//! objective and layer update, [`metrics`] the diagnostics, and [`pipeline`]
//! the node-classification harness. [`io`] holds the file formats and
//! [`checks`] the property suites run by `ddsm check`.

pub mod checks;
pub mod distances;
pub mod error;
pub mod generators;
pub mod graph;
pub mod io;
pub mod matrix;
pub mod metrics;
pub mod pipeline;
pub mod propagation;
pub mod spectral;

pub use error::{Error, Result};
pub use graph::{build_graph, Graph, LabeledGraph};
pub use matrix::FeatureMatrix;
