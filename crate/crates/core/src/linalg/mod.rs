//! Numerical kernels shared by the rest of the crate.

mod dense;
pub mod eigen;
pub mod kmeans;
pub mod random;
mod sparse;

pub use dense::DenseMatrix;
pub use eigen::{eigs_topk_abs, EigenDecompTopK, EigenOptions};
pub use kmeans::{kmeans, KmeansFit, KmeansOptions};
pub use random::{derive_seed, rng_from_seed, sample, Dist, Rng64};
pub use sparse::{spmv, SparseSymmetric};

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
