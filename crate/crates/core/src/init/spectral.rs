use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gmm::{gmm_em, GmmOptions};
use crate::error::{Error, Result};
use crate::linalg::random::derive_seed;
use crate::linalg::{eigs_topk_abs, kmeans, sq_dist, DenseMatrix, EigenOptions, KmeansOptions, SparseSymmetric};
use crate::metrics::nmi;
use crate::partition::LabeledPartition;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralMode {
    /// Top-K eigenvectors by |eigenvalue| of the matrix itself.
    Adjacency,
    /// Top-K eigenvectors of `D^{-1/2} M D^{-1/2}` with degrees regularised by
    /// the mean degree.
    SymLaplacian,
}

const EIGEN_TAG: u64 = 1;
const KMEANS_TAG: u64 = 2;
const GMM_TAG: u64 = 3;

/// Spectral embedding followed by k-means on the rows.
pub fn spectral_cluster(m: &SparseSymmetric, k: usize, mode: SpectralMode, seed: u64) -> Result<LabeledPartition> {
    let n = m.n();
    if k == 0 || k > n {
        return Err(Error::param(format!("need 1 <= K <= n, got K = {k}, n = {n}")));
    }
    let eig_opts = EigenOptions::with_seed(derive_seed(seed, &[EIGEN_TAG]));
    let embedding = match mode {
        SpectralMode::Adjacency => eigs_topk_abs(m, k, &eig_opts)?.embedding(),
        SpectralMode::SymLaplacian => {
            let deg: Vec<f64> = (0..n).map(|i| m.row(i).1.iter().map(|w| w.abs()).sum()).collect();
            let tau = deg.iter().sum::<f64>() / n as f64;
            let scale: Vec<f64> = deg
                .iter()
                .map(|&d| if d + tau > 0.0 { 1.0 / (d + tau).sqrt() } else { 1.0 })
                .collect();
            // the shift moves the spectrum into [0, 2] so that the largest
            // algebraic eigenvalues are also the largest in magnitude
            let normalized = m.scale_symmetric(&scale)?.shifted(1.0);
            eigs_topk_abs(&normalized, k, &eig_opts)?.embedding()
        }
    };
    cluster_rows(&embedding, k, derive_seed(seed, &[KMEANS_TAG]))
}

fn cluster_rows(embedding: &DenseMatrix, k: usize, seed: u64) -> Result<LabeledPartition> {
    let opts = KmeansOptions {
        seed,
        ..KmeansOptions::default()
    };
    Ok(kmeans(embedding, k, &opts)?.partition)
}

/// Signed-graph initialisation: adjacency spectral clustering of the signed matrix.
pub fn signed_spectral_init(a: &SparseSymmetric, k: usize, seed: u64) -> Result<LabeledPartition> {
    spectral_cluster(a, k, SpectralMode::Adjacency, seed)
}

/// Dense Gaussian kernel `exp(-‖x_i − x_j‖² / (2 h²))` with unit diagonal.
pub fn gaussian_kernel(x: &DenseMatrix, bandwidth: f64) -> Result<SparseSymmetric> {
    if !(bandwidth > 0.0) || !bandwidth.is_finite() {
        return Err(Error::param("bandwidth must be positive"));
    }
    let n = x.rows();
    let denom = 2.0 * bandwidth * bandwidth;
    let rows: Vec<Vec<(usize, usize, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = x.row(i);
            (i..n)
                .map(|j| (i, j, (-sq_dist(xi, x.row(j)) / denom).exp()))
                .filter(|t| t.2 != 0.0)
                .collect()
        })
        .collect();
    Ok(SparseSymmetric::from_sorted_unchecked(n, rows.concat()))
}

/// Median of all pairwise Euclidean distances.
pub fn median_bandwidth(x: &DenseMatrix) -> f64 {
    let n = x.rows();
    let mut d: Vec<f64> = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            d.push(sq_dist(x.row(i), x.row(j)).sqrt());
        }
    }
    if d.is_empty() {
        return 1.0;
    }
    let mid = d.len() / 2;
    let (_, m, _) = d.select_nth_unstable_by(mid, f64::total_cmp);
    if *m > 0.0 {
        *m
    } else {
        1.0
    }
}

/// 20 log-spaced values over `‖A‖_F / ‖K‖_F · 10^{±2}`.
pub fn default_orl_grid(a: &SparseSymmetric, kmat: &SparseSymmetric) -> Vec<f64> {
    let ka = kmat.frobenius_norm();
    let ratio = if ka > 0.0 { a.frobenius_norm() / ka } else { 1.0 };
    let ratio = if ratio > 0.0 { ratio } else { 1.0 };
    (0..20)
        .map(|i| ratio * 10f64.powf(-2.0 + 4.0 * i as f64 / 19.0))
        .collect()
}

/// Oracle baseline: spectral clustering of `A + λ K` for each λ in the grid,
/// keeping the partition with the highest NMI against the truth (first λ on ties).
pub fn orl_sc(
    a: &SparseSymmetric,
    kmat: &SparseSymmetric,
    k: usize,
    z_true: &LabeledPartition,
    grid: &[f64],
    seed: u64,
) -> Result<(LabeledPartition, f64)> {
    if grid.is_empty() {
        return Err(Error::param("ORL-SC needs a non-empty lambda grid"));
    }
    if z_true.n() != a.n() {
        return Err(Error::dim("truth length must equal n"));
    }
    let fits: Vec<Result<(LabeledPartition, f64)>> = grid
        .par_iter()
        .map(|&lambda| {
            let m = if lambda == 0.0 { a.clone() } else { a.add_scaled(kmat, lambda)? };
            let z = spectral_cluster(&m, k, SpectralMode::SymLaplacian, seed)?;
            let score = nmi(z.labels(), z_true.labels())?;
            Ok((z, score))
        })
        .collect();
    let mut best: Option<(LabeledPartition, f64, f64)> = None;
    for (fit, &lambda) in fits.into_iter().zip(grid) {
        let (z, score) = fit?;
        if best.as_ref().is_none_or(|b| score > b.1) {
            best = Some((z, score, lambda));
        }
    }
    let (z, _, lambda) = best.expect("non-empty grid");
    Ok((z, lambda))
}

#[derive(Debug, Clone, Default)]
pub struct EmEmbOptions {
    pub seed: u64,
    pub gmm: GmmOptions,
}

/// EM-Emb: top-K |eigenvalue| eigenvectors of `A` next to the covariates,
/// clustered with a Gaussian mixture.
pub fn em_emb(a: &SparseSymmetric, x: Option<&DenseMatrix>, k: usize, opts: &EmEmbOptions) -> Result<LabeledPartition> {
    if let Some(x) = x {
        if x.rows() != a.n() {
            return Err(Error::dim(format!("{} covariate rows for n = {}", x.rows(), a.n())));
        }
    }
    let eig = eigs_topk_abs(a, k, &EigenOptions::with_seed(derive_seed(opts.seed, &[EIGEN_TAG])))?;
    let u = eig.embedding();
    let merged = match x {
        Some(x) => u.hconcat(x)?,
        None => u,
    };
    let gmm = GmmOptions {
        seed: derive_seed(opts.seed, &[GMM_TAG]),
        ..opts.gmm.clone()
    };
    Ok(gmm_em(&merged, k, &gmm)?.0)
}
