use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::random::{derive_seed, rng_from_seed};
use crate::linalg::{kmeans, DenseMatrix, KmeansOptions};
use crate::partition::LabeledPartition;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceModel {
    Spherical,
    #[default]
    Diagonal,
}

#[derive(Debug, Clone)]
pub struct GmmOptions {
    pub covariance: CovarianceModel,
    /// Stop when the total log-likelihood changes by less than this.
    pub tol: f64,
    pub max_iter: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for GmmOptions {
    fn default() -> Self {
        Self {
            covariance: CovarianceModel::Diagonal,
            tol: 1e-6,
            max_iter: 200,
            restarts: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GmmModel {
    pub weights: Vec<f64>,
    pub means: DenseMatrix,
    pub covariance: CovarianceModel,
    /// One row per component: `d` variances (diagonal) or a single one (spherical).
    pub variances: Vec<Vec<f64>>,
    pub log_likelihood: f64,
    /// Log-likelihood after every EM iteration.
    pub trace: Vec<f64>,
    /// Iterations after which a component was re-seeded; the trace is only
    /// monotone between these.
    pub reseeds: Vec<usize>,
}

struct Params {
    weights: Vec<f64>,
    means: Vec<Vec<f64>>,
    vars: Vec<Vec<f64>>,
}

const LN_2PI: f64 = 1.837_877_066_409_345_5;

fn log_density(x: &[f64], mean: &[f64], var: &[f64]) -> f64 {
    let d = x.len();
    let mut acc = 0.0;
    for j in 0..d {
        let v = if var.len() == 1 { var[0] } else { var[j] };
        let r = x[j] - mean[j];
        acc += r * r / v + v.ln();
    }
    -0.5 * (acc + d as f64 * LN_2PI)
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// E-step: responsibilities (row-major n x k), per-point log-likelihoods.
fn e_step(data: &DenseMatrix, p: &Params) -> (Vec<f64>, Vec<f64>) {
    let k = p.weights.len();
    let mut resp = vec![0.0; data.rows() * k];
    let mut point_ll = Vec::with_capacity(data.rows());
    let mut buf = vec![0.0; k];
    for (i, x) in data.row_iter().enumerate() {
        for c in 0..k {
            buf[c] = if p.weights[c] > 0.0 {
                p.weights[c].ln() + log_density(x, &p.means[c], &p.vars[c])
            } else {
                f64::NEG_INFINITY
            };
        }
        let lse = log_sum_exp(&buf);
        for c in 0..k {
            resp[i * k + c] = (buf[c] - lse).exp();
        }
        point_ll.push(lse);
    }
    (resp, point_ll)
}

fn m_step(data: &DenseMatrix, resp: &[f64], k: usize, cov: CovarianceModel, floor: &[f64]) -> (Params, Vec<f64>) {
    let (n, d) = (data.rows(), data.cols());
    let mut mass = vec![0.0; k];
    let mut means = vec![vec![0.0; d]; k];
    for (i, x) in data.row_iter().enumerate() {
        for c in 0..k {
            let r = resp[i * k + c];
            mass[c] += r;
            for (m, v) in means[c].iter_mut().zip(x) {
                *m += r * v;
            }
        }
    }
    for c in 0..k {
        if mass[c] > 0.0 {
            means[c].iter_mut().for_each(|m| *m /= mass[c]);
        }
    }
    let mut vars = vec![vec![0.0; d]; k];
    for (i, x) in data.row_iter().enumerate() {
        for c in 0..k {
            let r = resp[i * k + c];
            for j in 0..d {
                let e = x[j] - means[c][j];
                vars[c][j] += r * e * e;
            }
        }
    }
    for c in 0..k {
        for j in 0..d {
            vars[c][j] = if mass[c] > 0.0 { vars[c][j] / mass[c] } else { 0.0 };
        }
        if cov == CovarianceModel::Spherical {
            let avg = vars[c].iter().sum::<f64>() / d.max(1) as f64;
            let fl = floor.iter().sum::<f64>() / d.max(1) as f64;
            vars[c] = vec![avg.max(fl)];
        } else {
            for j in 0..d {
                vars[c][j] = vars[c][j].max(floor[j]);
            }
        }
    }
    let weights = mass.iter().map(|m| m / n as f64).collect();
    (Params { weights, means, vars }, mass)
}

/// EM for a Gaussian mixture with spherical or diagonal covariances.
///
/// Each restart is initialised from a short k-means run on column-standardised
/// data. Components whose responsibility mass drops below one point are
/// re-seeded at the worst-fit point; more than three re-seeds in one restart is
/// reported as [`Error::Degenerate`].
pub fn gmm_em(data: &DenseMatrix, k: usize, opts: &GmmOptions) -> Result<(LabeledPartition, GmmModel)> {
    let (n, d) = (data.rows(), data.cols());
    if k == 0 || k > n {
        return Err(Error::param(format!("need 1 <= K <= rows, got K = {k}, rows = {n}")));
    }
    if d == 0 {
        return Err(Error::dim("GMM needs at least one column"));
    }
    if opts.restarts == 0 {
        return Err(Error::param("restarts must be at least 1"));
    }
    let col_var = data.column_variances();
    let mean_var = col_var.iter().sum::<f64>() / d as f64;
    let floor: Vec<f64> = col_var
        .iter()
        .map(|&v| (1e-6 * v).max(1e-12 * mean_var).max(f64::MIN_POSITIVE))
        .collect();
    let standardized = standardize(data, &col_var);

    let mut best: Option<(LabeledPartition, GmmModel)> = None;
    let mut last_err = None;
    for r in 0..opts.restarts {
        let seed = derive_seed(opts.seed, &[r as u64]);
        match run_once(data, &standardized, k, opts, &floor, seed) {
            Ok(fit) => {
                if best.as_ref().is_none_or(|b| fit.1.log_likelihood > b.1.log_likelihood) {
                    best = Some(fit);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.expect("restart failed"))
}

fn standardize(data: &DenseMatrix, col_var: &[f64]) -> DenseMatrix {
    let means = data.column_means();
    let mut out = data.clone();
    for i in 0..out.rows() {
        for (j, v) in out.row_mut(i).iter_mut().enumerate() {
            let s = col_var[j].sqrt();
            *v = if s > 0.0 { (*v - means[j]) / s } else { 0.0 };
        }
    }
    out
}

fn run_once(
    data: &DenseMatrix,
    standardized: &DenseMatrix,
    k: usize,
    opts: &GmmOptions,
    floor: &[f64],
    seed: u64,
) -> Result<(LabeledPartition, GmmModel)> {
    let n = data.rows();
    let init_labels = match kmeans(
        standardized,
        k,
        &KmeansOptions {
            restarts: 1,
            max_iter: 20,
            seed,
        },
    ) {
        Ok(fit) => fit.partition.into_labels(),
        Err(Error::Degenerate(_)) => {
            let mut rng = rng_from_seed(seed);
            (0..n).map(|_| rand::Rng::random_range(&mut rng, 0..k)).collect()
        }
        Err(e) => return Err(e),
    };
    let mut resp = vec![0.0; n * k];
    for (i, &l) in init_labels.iter().enumerate() {
        resp[i * k + l] = 1.0;
    }
    let (mut params, _) = m_step(data, &resp, k, opts.covariance, floor);
    let mut trace = Vec::new();
    let mut reseeds = Vec::new();
    let mut prev = f64::NEG_INFINITY;
    for it in 0..opts.max_iter.max(1) {
        let (r, point_ll) = e_step(data, &params);
        resp = r;
        let ll: f64 = point_ll.iter().sum();
        trace.push(ll);
        let (mut next, mass) = m_step(data, &resp, k, opts.covariance, floor);
        let mut reseeded = false;
        for c in 0..k {
            if mass[c] < 1.0 {
                if reseeds.len() >= 3 {
                    return Err(Error::Degenerate(format!(
                        "GMM component {c} collapsed more than 3 times"
                    )));
                }
                let worst = (0..n)
                    .min_by(|&a, &b| point_ll[a].total_cmp(&point_ll[b]))
                    .expect("non-empty data");
                next.means[c] = data.row(worst).to_vec();
                next.vars[c] = params.vars.iter().fold(vec![0.0; next.vars[c].len()], |mut acc, v| {
                    for (a, x) in acc.iter_mut().zip(v) {
                        *a = a.max(*x);
                    }
                    acc
                });
                next.weights[c] = 1.0 / n as f64;
                reseeded = true;
            }
        }
        if reseeded {
            let s: f64 = next.weights.iter().sum();
            next.weights.iter_mut().for_each(|w| *w /= s);
            reseeds.push(it);
        }
        params = next;
        if !reseeded && (ll - prev).abs() < opts.tol {
            break;
        }
        prev = if reseeded { f64::NEG_INFINITY } else { ll };
    }
    let (resp, point_ll) = e_step(data, &params);
    let ll: f64 = point_ll.iter().sum();
    trace.push(ll);
    let labels = (0..n)
        .map(|i| {
            let row = &resp[i * k..(i + 1) * k];
            let mut best = 0;
            for c in 1..k {
                if row[c] > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect();
    let model = GmmModel {
        weights: params.weights,
        means: DenseMatrix::new(k, data.cols(), params.means.concat())?,
        covariance: opts.covariance,
        variances: params.vars,
        log_likelihood: ll,
        trace,
        reseeds,
    };
    Ok((LabeledPartition::new_unchecked(labels, k), model))
}
