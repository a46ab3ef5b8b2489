//! Iterative-refinement clustering for networks with node covariates and for
//! signed networks.
//!
//! The crate is organised bottom-up:
//!
//! * [`linalg`] dense/sparse matrices, a top-K symmetric eigensolver, k-means
//!   and seeded sampling.
//! * [`models`] generators for the SBM, contextual SBM and signed SBM.
//! * [`init`] initialisation and baseline clusterers (EM-Emb, GMM-EM, spectral
//!   clustering variants, ORL-SC).
//! * [`refine`] the least-squares refinement loop (IR-LS, sIR-LS, IR-LSS), its
//!   signed-graph specialisation IR-SSBM and the IR-MAP likelihood baseline.
//! * [`metrics`] NMI, misclustering rate, Hamming distance and the separation
//!   diagnostics.
//! * [`experiments`] a deterministic Monte Carlo harness with presets.
//! * [`io`] file formats shared by the `csbm` command-line tool.

pub mod error;
pub mod experiments;
pub mod init;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod models;
pub mod partition;
pub mod refine;

pub use error::{Error, Result};
pub use linalg::{DenseMatrix, SparseSymmetric};
pub use partition::LabeledPartition;

/// A sparse symmetric weighted graph: binary for the SBM, ±1 for signed graphs.
pub type SymmetricGraph = SparseSymmetric;
