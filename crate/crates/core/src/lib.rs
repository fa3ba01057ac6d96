//! Graph signal processing toolkit.
//!
//! Builds graphs and shift operators, analyzes signals in the graph spectral
//! domain, and implements the graph-filter zoo: convolutional (polynomial)
//! filters with several design paths, rational filters with iterative solvers,
//! node-/edge-varying and nonlinear filters, regularized denoisers, filter
//! banks with perfect reconstruction, a small graph convolutional network with
//! manual backpropagation, and a deterministic simulator for distributed
//! filter execution under link loss and quantization.

// pub mod apps; // TODO-SCAFFOLD
pub mod bank;
pub mod conv;
// pub mod distsim; // TODO-SCAFFOLD
pub mod error;
pub mod graph;
// pub mod io; // TODO-SCAFFOLD
pub mod learn;
pub mod linalg;
pub mod rational;
pub mod regularized;
pub mod sparse;
pub mod spectral;
pub mod structured;

pub use error::{Error, Result};
pub use graph::{Graph, GsoKind, ShiftOperator};
pub use spectral::SpectralBasis;
