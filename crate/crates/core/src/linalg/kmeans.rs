use std::collections::HashSet;

use rand::Rng;

use super::random::{derive_seed, rng_from_seed};
use super::{sq_dist, DenseMatrix};
use crate::error::{Error, Result};
use crate::partition::LabeledPartition;

#[derive(Debug, Clone)]
pub struct KmeansOptions {
    pub restarts: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for KmeansOptions {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_iter: 100,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KmeansFit {
    pub partition: LabeledPartition,
    pub centers: DenseMatrix,
    /// Within-cluster sum of squares of the returned partition.
    pub objective: f64,
    /// Objective after every Lloyd iteration of the winning restart.
    pub trace: Vec<f64>,
    pub restart: usize,
}

/// Best-of-restarts Lloyd iteration with k-means++ seeding.
///
/// Restart `r` draws from its own sub-stream of `seed`, so the result does not
/// depend on the order restarts are evaluated in. The lowest objective wins,
/// ties going to the lower restart index.
pub fn kmeans(data: &DenseMatrix, k: usize, opts: &KmeansOptions) -> Result<KmeansFit> {
    if k == 0 || k > data.rows() {
        return Err(Error::param(format!(
            "need 1 <= K <= rows, got K = {k}, rows = {}",
            data.rows()
        )));
    }
    if opts.restarts == 0 {
        return Err(Error::param("restarts must be at least 1"));
    }
    let distinct: HashSet<Vec<u64>> = data
        .row_iter()
        .map(|r| r.iter().map(|x| x.to_bits()).collect())
        .collect();
    if distinct.len() < k {
        return Err(Error::Degenerate(format!(
            "{} distinct rows cannot form {k} clusters",
            distinct.len()
        )));
    }

    let mut best: Option<KmeansFit> = None;
    for r in 0..opts.restarts {
        let mut rng = rng_from_seed(derive_seed(opts.seed, &[r as u64]));
        let fit = lloyd(data, k, plus_plus(data, k, &mut rng), opts.max_iter, r);
        if best.as_ref().is_none_or(|b| fit.objective < b.objective) {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// k-means++ seeding: each new center is drawn with probability proportional
/// to the squared distance to the nearest chosen center.
fn plus_plus(data: &DenseMatrix, k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let n = data.rows();
    let mut centers = vec![data.row(rng.random_range(0..n)).to_vec()];
    let mut d2: Vec<f64> = data.row_iter().map(|x| sq_dist(x, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let u = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if u < acc {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        let c = data.row(pick).to_vec();
        for (di, x) in d2.iter_mut().zip(data.row_iter()) {
            *di = di.min(sq_dist(x, &c));
        }
        centers.push(c);
    }
    centers
}

fn nearest(x: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, mu) in centers.iter().enumerate() {
        let d = sq_dist(x, mu);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn lloyd(data: &DenseMatrix, k: usize, mut centers: Vec<Vec<f64>>, max_iter: usize, restart: usize) -> KmeansFit {
    let n = data.rows();
    let d = data.cols();
    let mut labels = vec![usize::MAX; n];
    let mut trace = Vec::new();
    for _ in 0..max_iter.max(1) {
        let mut changed = false;
        let mut dist = vec![0.0; n];
        for (i, x) in data.row_iter().enumerate() {
            let (c, dd) = nearest(x, &centers);
            if labels[i] != c {
                labels[i] = c;
                changed = true;
            }
            dist[i] = dd;
        }
        // repair empty clusters with the point farthest from its center
        let mut sizes = vec![0usize; k];
        labels.iter().for_each(|&l| sizes[l] += 1);
        while let Some(empty) = sizes.iter().position(|&s| s == 0) {
            let far = (0..n)
                .filter(|&i| sizes[labels[i]] > 1)
                .max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a)))
                .expect("distinct rows >= K");
            sizes[labels[far]] -= 1;
            labels[far] = empty;
            sizes[empty] = 1;
            dist[far] = 0.0;
            changed = true;
        }
        let mut sums = vec![vec![0.0; d]; k];
        for (i, x) in data.row_iter().enumerate() {
            for (s, v) in sums[labels[i]].iter_mut().zip(x) {
                *s += v;
            }
        }
        for (c, s) in sums.into_iter().enumerate() {
            centers[c] = s.into_iter().map(|v| v / sizes[c] as f64).collect();
        }
        trace.push(objective(data, &labels, &centers));
        if !changed {
            break;
        }
    }
    let objective = *trace.last().expect("one iteration");
    KmeansFit {
        partition: LabeledPartition::new_unchecked(labels, k),
        centers: DenseMatrix::new(k, d, centers.concat()).expect("finite centers"),
        objective,
        trace,
        restart,
    }
}

fn objective(data: &DenseMatrix, labels: &[usize], centers: &[Vec<f64>]) -> f64 {
    data.row_iter()
        .zip(labels)
        .map(|(x, &l)| sq_dist(x, &centers[l]))
        .sum()
}
