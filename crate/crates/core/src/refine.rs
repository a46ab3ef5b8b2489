//! Iterative refinement: IR-LS and its scalar-weight variants, IR-SSBM for
//! signed graphs and the IR-MAP likelihood baseline.

use std::time::Duration;
use web_time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{sq_dist, DenseMatrix, SparseSymmetric};
use crate::metrics::{hamming, loss_l, misclustering_rate, SeparationProfile};
use crate::partition::LabeledPartition;

/// Cluster sizes, block connectivity `Π̂ = WᵀAW` and covariate means.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockParams {
    pub sizes: Vec<usize>,
    pub pi_hat: Vec<Vec<f64>>,
    /// Empty when no covariates are used.
    pub mu_hat: Vec<Vec<f64>>,
}

impl BlockParams {
    pub fn k(&self) -> usize {
        self.sizes.len()
    }

    pub fn n(&self) -> usize {
        self.sizes.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "ir-ls")]
    IrLs,
    #[serde(rename = "sir-ls")]
    SIrLs,
    #[serde(rename = "ir-lss")]
    IrLss,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SigmaWeights {
    /// `weights[k][k']` multiplies the k'-th squared residual of candidate cluster k.
    PerCluster(Vec<Vec<f64>>),
    Scalar(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SigmaSpec {
    pub variant: Variant,
    pub weights: SigmaWeights,
}

impl SigmaSpec {
    pub fn weight(&self, k: usize, k2: usize) -> f64 {
        match &self.weights {
            SigmaWeights::PerCluster(w) => w[k][k2],
            SigmaWeights::Scalar(l) => *l,
        }
    }
}

/// The refinement rule run by [`ir_cluster`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Refinement {
    LeastSquares(Variant),
    Signed,
    Map,
}

pub fn default_iterations(n: usize) -> usize {
    if n < 2 {
        return 1;
    }
    (3.0 * (n as f64).log2()).ceil() as usize
}

pub fn default_clamp(n: usize) -> f64 {
    let n = n.max(2) as f64;
    1.0 / (n * n)
}

fn check_inputs(a: &SparseSymmetric, x: Option<&DenseMatrix>, z: &LabeledPartition) -> Result<()> {
    if z.n() != a.n() {
        return Err(Error::dim(format!("partition of length {} for n = {}", z.n(), a.n())));
    }
    if let Some(x) = x {
        if x.rows() != a.n() {
            return Err(Error::dim(format!("{} covariate rows for n = {}", x.rows(), a.n())));
        }
    }
    Ok(())
}

fn cluster_means(x: &DenseMatrix, z: &LabeledPartition, sizes: &[usize]) -> Vec<Vec<f64>> {
    let mut mu = vec![vec![0.0; x.cols()]; sizes.len()];
    for (i, &l) in z.labels().iter().enumerate() {
        for (m, v) in mu[l].iter_mut().zip(x.row(i)) {
            *m += v;
        }
    }
    for (row, &s) in mu.iter_mut().zip(sizes) {
        for m in row.iter_mut() {
            *m /= s as f64;
        }
    }
    mu
}

pub fn estimate_params(a: &SparseSymmetric, x: Option<&DenseMatrix>, z: &LabeledPartition) -> Result<BlockParams> {
    check_inputs(a, x, z)?;
    if let Some(k) = z.first_empty() {
        return Err(Error::EmptyCluster(k));
    }
    let k = z.k();
    let sizes = z.sizes();
    let labels = z.labels();
    let mut sums = vec![vec![0.0; k]; k];
    for (i, &zi) in labels.iter().enumerate() {
        let (cols, vals) = a.row(i);
        for (&j, &w) in cols.iter().zip(vals) {
            sums[zi][labels[j]] += w;
        }
    }
    let pi_hat = (0..k)
        .map(|r| (0..k).map(|c| sums[r][c] / (sizes[r] as f64 * sizes[c] as f64)).collect())
        .collect();
    let mu_hat = x.map(|x| cluster_means(x, z, &sizes)).unwrap_or_default();
    Ok(BlockParams { sizes, pi_hat, mu_hat })
}

fn clamp(p: f64, eps: f64) -> f64 {
    p.clamp(eps, 1.0 - eps)
}

pub fn sigma_spec(variant: Variant, params: &BlockParams, clamp_eps: f64) -> Result<SigmaSpec> {
    let k = params.k();
    let pi = &params.pi_hat;
    let weights = match variant {
        Variant::IrLs => SigmaWeights::PerCluster(
            (0..k)
                .map(|r| (0..k).map(|c| params.sizes[c] as f64 / clamp(pi[r][c], clamp_eps)).collect())
                .collect(),
        ),
        Variant::SIrLs => {
            let min_n = *params.sizes.iter().min().unwrap_or(&1) as f64;
            let max_pi = pi
                .iter()
                .flatten()
                .map(|&p| clamp(p, clamp_eps))
                .fold(f64::NEG_INFINITY, f64::max);
            SigmaWeights::Scalar(min_n / max_pi)
        }
        Variant::IrLss => {
            if k < 2 {
                SigmaWeights::Scalar(1.0)
            } else {
                let p = (0..k).map(|r| pi[r][r]).sum::<f64>() / k as f64;
                let q = (0..k)
                    .flat_map(|r| (0..k).filter(move |&c| c != r).map(move |c| pi[r][c]))
                    .sum::<f64>()
                    / (k * k - k) as f64;
                let (p, q) = (clamp(p, clamp_eps), clamp(q, clamp_eps));
                if p <= q {
                    return Err(Error::NonAssortative { p, q });
                }
                let n = params.n() as f64;
                SigmaWeights::Scalar(n / (k as f64 * (p - q)) * (p * (1.0 - q) / (q * (1.0 - p))).ln())
            }
        }
    };
    Ok(SigmaSpec { variant, weights })
}

/// Row `i` of `A W`: the mean edge weight from `i` into each cluster.
fn aw_row(a: &SparseSymmetric, labels: &[usize], sizes: &[usize], i: usize) -> Vec<f64> {
    let mut out = vec![0.0; sizes.len()];
    let (cols, vals) = a.row(i);
    for (&j, &w) in cols.iter().zip(vals) {
        out[labels[j]] += w;
    }
    for (o, &s) in out.iter_mut().zip(sizes) {
        *o /= s as f64;
    }
    out
}

fn covariate_term(x: Option<&DenseMatrix>, params: &BlockParams, i: usize, k: usize, scale: f64) -> f64 {
    match x {
        Some(x) if !params.mu_hat.is_empty() => sq_dist(x.row(i), &params.mu_hat[k]) / scale,
        _ => 0.0,
    }
}

fn covariate_scale(x: Option<&DenseMatrix>, sigma_noise: f64) -> Result<f64> {
    match x {
        Some(x) if x.cols() > 0 => {
            if !(sigma_noise > 0.0) || !sigma_noise.is_finite() {
                return Err(Error::param("sigma must be positive when covariates are present"));
            }
            Ok(sigma_noise * sigma_noise)
        }
        _ => Ok(1.0),
    }
}

/// Per-node candidate costs; the refined label is the argmin.
trait Scorer: Sync {
    fn costs(&self, i: usize) -> Vec<f64>;
}

struct LeastSquares<'a> {
    a: &'a SparseSymmetric,
    x: Option<&'a DenseMatrix>,
    params: &'a BlockParams,
    sigma: &'a SigmaSpec,
    sigma_sq: f64,
    labels: &'a [usize],
}

impl Scorer for LeastSquares<'_> {
    fn costs(&self, i: usize) -> Vec<f64> {
        let aw = aw_row(self.a, self.labels, &self.params.sizes, i);
        (0..self.params.k())
            .map(|k| {
                let graph: f64 = aw
                    .iter()
                    .zip(&self.params.pi_hat[k])
                    .enumerate()
                    .map(|(k2, (v, p))| (v - p) * (v - p) * self.sigma.weight(k, k2))
                    .sum();
                graph + covariate_term(self.x, self.params, i, k, self.sigma_sq)
            })
            .collect()
    }
}

struct Signed<'a> {
    a: &'a SparseSymmetric,
    labels: &'a [usize],
    sizes: Vec<usize>,
}

impl Scorer for Signed<'_> {
    fn costs(&self, i: usize) -> Vec<f64> {
        aw_row(self.a, self.labels, &self.sizes, i).into_iter().map(|c| -c).collect()
    }
}

struct Map<'a> {
    a: &'a SparseSymmetric,
    x: Option<&'a DenseMatrix>,
    params: &'a BlockParams,
    sigma_sq: f64,
    labels: &'a [usize],
    log_p: Vec<Vec<f64>>,
    log_q: Vec<Vec<f64>>,
}

impl<'a> Map<'a> {
    fn new(
        a: &'a SparseSymmetric,
        x: Option<&'a DenseMatrix>,
        params: &'a BlockParams,
        sigma_sq: f64,
        labels: &'a [usize],
        clamp_eps: f64,
    ) -> Self {
        let log_p = params
            .pi_hat
            .iter()
            .map(|r| r.iter().map(|&p| clamp(p, clamp_eps).ln()).collect())
            .collect();
        let log_q = params
            .pi_hat
            .iter()
            .map(|r| r.iter().map(|&p| (1.0 - clamp(p, clamp_eps)).ln()).collect())
            .collect();
        Map { a, x, params, sigma_sq, labels, log_p, log_q }
    }
}

impl Scorer for Map<'_> {
    fn costs(&self, i: usize) -> Vec<f64> {
        let n = self.labels.len();
        let mut row = vec![0.0; n];
        let (cols, vals) = self.a.row(i);
        for (&j, &w) in cols.iter().zip(vals) {
            row[j] = w;
        }
        (0..self.params.k())
            .map(|k| {
                let (lp, lq) = (&self.log_p[k], &self.log_q[k]);
                let mut ll = 0.0;
                for (j, (&aij, &zj)) in row.iter().zip(self.labels).enumerate() {
                    if j != i {
                        ll += aij * lp[zj] + (1.0 - aij) * lq[zj];
                    }
                }
                -ll + covariate_term(self.x, self.params, i, k, 2.0 * self.sigma_sq)
            })
            .collect()
    }
}

fn argmin(costs: &[f64]) -> usize {
    let mut best = 0;
    for (k, &c) in costs.iter().enumerate() {
        if c < costs[best] {
            best = k;
        }
    }
    best
}

struct StepOutcome {
    labels: Vec<usize>,
    objective: f64,
    guard_moves: usize,
}

fn apply(scorer: &dyn Scorer, n: usize, k: usize, guard: bool) -> Result<StepOutcome> {
    let costs: Vec<Vec<f64>> = (0..n).into_par_iter().map(|i| scorer.costs(i)).collect();
    let mut labels: Vec<usize> = costs.iter().map(|c| argmin(c)).collect();
    let mut guard_moves = 0;
    if guard {
        let mut sizes = vec![0usize; k];
        for &l in &labels {
            sizes[l] += 1;
        }
        while let Some(empty) = sizes.iter().position(|&s| s == 0) {
            guard_moves += 1;
            if guard_moves > k {
                return Err(Error::EmptyCluster(empty));
            }
            let mut pick: Option<(usize, f64)> = None;
            for (i, c) in costs.iter().enumerate() {
                if sizes[labels[i]] > 1 {
                    let margin = c[empty] - c[labels[i]];
                    if pick.is_none_or(|(_, m)| margin < m) {
                        pick = Some((i, margin));
                    }
                }
            }
            let (i, _) = pick.ok_or(Error::EmptyCluster(empty))?;
            sizes[labels[i]] -= 1;
            labels[i] = empty;
            sizes[empty] += 1;
        }
    }
    let objective = labels.iter().zip(&costs).map(|(&l, c)| c[l]).sum();
    Ok(StepOutcome { labels, objective, guard_moves })
}

fn check_params(params: &BlockParams, z: &LabeledPartition, x: Option<&DenseMatrix>) -> Result<()> {
    if params.k() != z.k() || params.n() != z.n() {
        return Err(Error::dim("parameters do not match the partition"));
    }
    if x.is_some_and(|x| x.cols() > 0) && params.mu_hat.len() != params.k() {
        return Err(Error::dim("covariates given but parameters carry no cluster means"));
    }
    Ok(())
}

/// One synchronous least-squares refinement of every node.
pub fn refine_step(
    a: &SparseSymmetric,
    x: Option<&DenseMatrix>,
    params: &BlockParams,
    sigma: &SigmaSpec,
    sigma_noise: f64,
    z_in: &LabeledPartition,
) -> Result<LabeledPartition> {
    check_inputs(a, x, z_in)?;
    check_params(params, z_in, x)?;
    let scorer = LeastSquares {
        a,
        x,
        params,
        sigma,
        sigma_sq: covariate_scale(x, sigma_noise)?,
        labels: z_in.labels(),
    };
    let out = apply(&scorer, a.n(), z_in.k(), false)?;
    Ok(LabeledPartition::new_unchecked(out.labels, z_in.k()))
}

/// `z_i = argmax_k (A W)_{ik}` for a signed adjacency matrix.
pub fn ir_ssbm_step(a: &SparseSymmetric, z_in: &LabeledPartition) -> Result<LabeledPartition> {
    check_inputs(a, None, z_in)?;
    if let Some(k) = z_in.first_empty() {
        return Err(Error::EmptyCluster(k));
    }
    let scorer = Signed { a, labels: z_in.labels(), sizes: z_in.sizes() };
    let out = apply(&scorer, a.n(), z_in.k(), false)?;
    Ok(LabeledPartition::new_unchecked(out.labels, z_in.k()))
}

/// One synchronous maximum-a-posteriori refinement under the Bernoulli block
/// likelihood with Gaussian covariates and a uniform prior.
pub fn ir_map_step(
    a: &SparseSymmetric,
    x: Option<&DenseMatrix>,
    params: &BlockParams,
    sigma_noise: f64,
    z_in: &LabeledPartition,
    clamp_eps: f64,
) -> Result<LabeledPartition> {
    check_inputs(a, x, z_in)?;
    check_params(params, z_in, x)?;
    let scorer = Map::new(a, x, params, covariate_scale(x, sigma_noise)?, z_in.labels(), clamp_eps);
    let out = apply(&scorer, a.n(), z_in.k(), false)?;
    Ok(LabeledPartition::new_unchecked(out.labels, z_in.k()))
}

/// Pooled within-cluster standard deviation of the covariates.
pub fn estimate_sigma(x: &DenseMatrix, z: &LabeledPartition) -> Result<f64> {
    if x.rows() != z.n() {
        return Err(Error::dim("covariate rows must equal n"));
    }
    let sizes = z.sizes();
    let dof = (z.n().saturating_sub(sizes.iter().filter(|&&s| s > 0).count())) * x.cols();
    if dof == 0 {
        return Err(Error::Degenerate("too few points to estimate sigma".into()));
    }
    let mu = cluster_means(x, z, &sizes);
    let ss: f64 = z.labels().iter().enumerate().map(|(i, &l)| sq_dist(x.row(i), &mu[l])).sum();
    let sigma = (ss / dof as f64).sqrt();
    if sigma > 0.0 {
        Ok(sigma)
    } else {
        Err(Error::Degenerate("covariates have no within-cluster spread".into()))
    }
}

#[derive(Debug, Clone, Default)]
pub struct RefineOptions {
    /// Probability clamp; `None` uses `1/n²`.
    pub clamp_eps: Option<f64>,
    /// Re-estimate σ from the current partition at every iteration.
    pub estimate_sigma: bool,
    /// Ground truth for the diagnostic columns of the trace.
    pub truth: Option<LabeledPartition>,
    /// Separation profile for recording `l(z^(t), z)`; requires `truth`.
    pub profile: Option<SeparationProfile>,
    pub record_labels: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Nodes whose label differs from the previous iterate.
    pub changed: usize,
    pub objective: f64,
    pub truth_hamming: Option<usize>,
    pub truth_error_rate: Option<f64>,
    pub truth_loss: Option<f64>,
    pub guard_moves: usize,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RefinementTrace {
    /// Entry 0 describes the initial partition.
    pub records: Vec<IterationRecord>,
    pub labels: Vec<Vec<usize>>,
    pub converged: bool,
    pub iterations: usize,
}

fn record(
    iteration: usize,
    changed: usize,
    objective: f64,
    guard_moves: usize,
    labels: &[usize],
    opts: &RefineOptions,
    start: Instant,
) -> Result<IterationRecord> {
    let (truth_hamming, truth_error_rate, truth_loss) = match &opts.truth {
        Some(t) => (
            Some(hamming(labels, t.labels())?),
            Some(misclustering_rate(labels, t.labels())?),
            match &opts.profile {
                Some(p) => Some(loss_l(labels, t.labels(), p)?),
                None => None,
            },
        ),
        None => (None, None, None),
    };
    Ok(IterationRecord {
        iteration,
        changed,
        objective,
        truth_hamming,
        truth_error_rate,
        truth_loss,
        guard_moves,
        elapsed: start.elapsed(),
    })
}

/// Runs up to `iters` refinement rounds from `z0`, stopping early once the
/// partition no longer changes.
pub fn ir_cluster(
    a: &SparseSymmetric,
    x: Option<&DenseMatrix>,
    k: usize,
    sigma_noise: f64,
    z0: &LabeledPartition,
    iters: usize,
    method: Refinement,
    opts: &RefineOptions,
) -> Result<(LabeledPartition, RefinementTrace)> {
    check_inputs(a, x, z0)?;
    if z0.k() != k {
        return Err(Error::param(format!("initial partition has K = {}, expected {k}", z0.k())));
    }
    if let Some(e) = z0.first_empty() {
        return Err(Error::EmptyCluster(e));
    }
    if let Some(t) = &opts.truth {
        if t.n() != a.n() {
            return Err(Error::dim("truth length must equal n"));
        }
    }
    let x = match method {
        Refinement::Signed => None,
        _ => x.filter(|x| x.cols() > 0),
    };
    let clamp_eps = opts.clamp_eps.unwrap_or_else(|| default_clamp(a.n()));
    let start = Instant::now();
    let mut z = z0.clone();
    let mut trace = RefinementTrace::default();
    trace.records.push(record(0, 0, f64::NAN, 0, z.labels(), opts, start)?);
    if opts.record_labels {
        trace.labels.push(z.labels().to_vec());
    }
    for t in 1..=iters {
        let sigma_noise = match x {
            Some(x) if opts.estimate_sigma => estimate_sigma(x, &z)?,
            _ => sigma_noise,
        };
        let out = match method {
            Refinement::Signed => {
                let scorer = Signed { a, labels: z.labels(), sizes: z.sizes() };
                apply(&scorer, a.n(), k, true)?
            }
            Refinement::LeastSquares(variant) => {
                let params = estimate_params(a, x, &z)?;
                let sigma = sigma_spec(variant, &params, clamp_eps)?;
                let scorer = LeastSquares {
                    a,
                    x,
                    params: &params,
                    sigma: &sigma,
                    sigma_sq: covariate_scale(x, sigma_noise)?,
                    labels: z.labels(),
                };
                apply(&scorer, a.n(), k, true)?
            }
            Refinement::Map => {
                let params = estimate_params(a, x, &z)?;
                let scorer = Map::new(a, x, &params, covariate_scale(x, sigma_noise)?, z.labels(), clamp_eps);
                apply(&scorer, a.n(), k, true)?
            }
        };
        let changed = hamming(&out.labels, z.labels())?;
        trace.records.push(record(t, changed, out.objective, out.guard_moves, &out.labels, opts, start)?);
        if opts.record_labels {
            trace.labels.push(out.labels.clone());
        }
        trace.iterations = t;
        z = LabeledPartition::new_unchecked(out.labels, k);
        if changed == 0 {
            trace.converged = true;
            break;
        }
    }
    Ok((z, trace))
}
