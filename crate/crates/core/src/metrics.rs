//! Partition comparison metrics and separation diagnostics.

use crate::error::{Error, Result};
use crate::partition::LabeledPartition;

/// `counts[a][b] = #{i : z(i) = a, z_hat(i) = b}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sums(&self) -> Vec<usize> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<usize> {
        let k = self.counts.first().map_or(0, Vec::len);
        (0..k).map(|b| self.counts.iter().map(|r| r[b]).sum()).collect()
    }
}

pub fn confusion(z: &[usize], z_hat: &[usize]) -> Result<ConfusionMatrix> {
    if z.len() != z_hat.len() {
        return Err(Error::dim(format!("partitions of length {} and {}", z.len(), z_hat.len())));
    }
    let k = z.iter().chain(z_hat).max().map_or(1, |m| m + 1);
    let mut counts = vec![vec![0; k]; k];
    for (&a, &b) in z.iter().zip(z_hat) {
        counts[a][b] += 1;
    }
    Ok(ConfusionMatrix { counts })
}

/// Minimum-cost perfect matching on a square cost matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// `perm[row] = column`.
    pub perm: Vec<usize>,
    pub total: f64,
}

/// Hungarian algorithm (shortest augmenting paths with potentials), O(K^3).
///
/// Among optimal matchings the lexicographically smallest permutation is
/// returned: rows are fixed in order to the smallest column that still admits
/// an optimal completion.
pub fn hungarian(cost: &[Vec<f64>]) -> Result<Assignment> {
    let k = cost.len();
    if cost.iter().any(|r| r.len() != k) {
        return Err(Error::dim("cost matrix must be square"));
    }
    if cost.iter().flatten().any(|c| !c.is_finite()) {
        return Err(Error::param("cost entries must be finite"));
    }
    if k == 0 {
        return Ok(Assignment { perm: vec![], total: 0.0 });
    }
    let (_, best) = solve_assignment(cost);
    let scale = cost.iter().flatten().fold(1.0f64, |m, c| m.max(c.abs()));
    let eps = 1e-9 * scale * k as f64;

    let mut perm = vec![usize::MAX; k];
    let mut fixed_cost = 0.0;
    let mut free_cols: Vec<usize> = (0..k).collect();
    for row in 0..k {
        for (pos, &col) in free_cols.iter().enumerate() {
            let rest_rows: Vec<usize> = (row + 1..k).collect();
            let rest_cols: Vec<usize> = free_cols.iter().copied().filter(|&c| c != col).collect();
            let sub: Vec<Vec<f64>> = rest_rows
                .iter()
                .map(|&r| rest_cols.iter().map(|&c| cost[r][c]).collect())
                .collect();
            let rest = if sub.is_empty() { 0.0 } else { solve_assignment(&sub).1 };
            if fixed_cost + cost[row][col] + rest <= best + eps {
                perm[row] = col;
                fixed_cost += cost[row][col];
                free_cols.remove(pos);
                break;
            }
        }
    }
    let total = perm.iter().enumerate().map(|(r, &c)| cost[r][c]).sum();
    Ok(Assignment { perm, total })
}

fn solve_assignment(cost: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let n = cost.len();
    // 1-based potentials formulation; column 0 is a virtual source
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0; n];
    for j in 1..=n {
        perm[p[j] - 1] = j - 1;
    }
    let total = perm.iter().enumerate().map(|(r, &c)| cost[r][c]).sum();
    (perm, total)
}

/// Fraction of nodes misassigned under the best relabelling of `z`.
pub fn misclustering_rate(z_hat: &[usize], z: &[usize]) -> Result<f64> {
    let c = confusion(z, z_hat)?;
    let n = c.total();
    if n == 0 {
        return Ok(0.0);
    }
    let neg: Vec<Vec<f64>> = c
        .counts
        .iter()
        .map(|r| r.iter().map(|&x| -(x as f64)).collect())
        .collect();
    let agree = -hungarian(&neg)?.total;
    Ok(1.0 - agree / n as f64)
}

fn entropy(counts: &[usize], n: f64) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Normalised mutual information `2 I / (H1 + H2)` with natural logarithms.
pub fn nmi(z1: &[usize], z2: &[usize]) -> Result<f64> {
    let c = confusion(z1, z2)?;
    let n = c.total() as f64;
    if n == 0.0 {
        return Ok(1.0);
    }
    let (rows, cols) = (c.row_sums(), c.col_sums());
    let h1 = entropy(&rows, n);
    let h2 = entropy(&cols, n);
    if h1 == 0.0 || h2 == 0.0 {
        // single-cluster partitions: identical means both trivial
        return Ok(if h1 == 0.0 && h2 == 0.0 { 1.0 } else { 0.0 });
    }
    let mut mi = 0.0;
    for (a, row) in c.counts.iter().enumerate() {
        for (b, &nab) in row.iter().enumerate() {
            if nab > 0 {
                let pab = nab as f64 / n;
                mi += pab * (pab * n * n / (rows[a] as f64 * cols[b] as f64)).ln();
            }
        }
    }
    Ok((2.0 * mi / (h1 + h2)).clamp(0.0, 1.0))
}

/// Number of positions where the labels differ, without relabelling.
pub fn hamming(z: &[usize], z_prime: &[usize]) -> Result<usize> {
    if z.len() != z_prime.len() {
        return Err(Error::dim(format!("partitions of length {} and {}", z.len(), z_prime.len())));
    }
    Ok(z.iter().zip(z_prime).filter(|(a, b)| a != b).count())
}

/// Pairwise separations `Δ²(a, b) = ‖μ_a − μ_b‖² + λ ‖Π_a: − Π_b:‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparationProfile {
    pub delta_sq: Vec<Vec<f64>>,
    pub delta_min: f64,
    pub lambda: f64,
}

pub fn separation_profile(mu: &[Vec<f64>], pi: &[Vec<f64>], lambda: f64) -> Result<SeparationProfile> {
    let k = pi.len();
    if mu.len() != k && !mu.is_empty() {
        return Err(Error::dim(format!("{} centers for K = {k}", mu.len())));
    }
    if pi.iter().any(|r| r.len() != k) {
        return Err(Error::dim("Pi must be K x K"));
    }
    if !(lambda >= 0.0) {
        return Err(Error::param("lambda must be >= 0"));
    }
    let sq = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
    let mut delta_sq = vec![vec![0.0; k]; k];
    let mut delta_min = f64::INFINITY;
    for a in 0..k {
        for b in (a + 1)..k {
            let cov = if mu.is_empty() { 0.0 } else { sq(&mu[a], &mu[b]) };
            let d = cov + lambda * sq(&pi[a], &pi[b]);
            delta_sq[a][b] = d;
            delta_sq[b][a] = d;
            delta_min = delta_min.min(d);
        }
    }
    Ok(SeparationProfile {
        delta_sq,
        delta_min,
        lambda,
    })
}

/// `l(z, z') = Σ_i Δ²(z_i, z'_i) 1{z_i ≠ z'_i}`.
pub fn loss_l(z: &[usize], z_prime: &[usize], profile: &SeparationProfile) -> Result<f64> {
    if z.len() != z_prime.len() {
        return Err(Error::dim("partitions of different lengths"));
    }
    let k = profile.delta_sq.len();
    if z.iter().chain(z_prime).any(|&l| l >= k) {
        return Err(Error::param(format!("label outside the profile's K = {k}")));
    }
    Ok(z.iter()
        .zip(z_prime)
        .filter(|(a, b)| a != b)
        .map(|(&a, &b)| profile.delta_sq[a][b])
        .sum())
}

/// SNR `(1/8) min ‖μ_k − μ_k'‖² + (log n / K)(√p' − √q')²`.
pub fn snr_tilde(mu: &[Vec<f64>], p_prime: f64, q_prime: f64, n: usize, k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::param("SNR needs K >= 2"));
    }
    if !(p_prime >= q_prime && q_prime >= 0.0) {
        return Err(Error::param("need p' >= q' >= 0"));
    }
    let mut min_gap = if mu.is_empty() { 0.0 } else { f64::INFINITY };
    for a in 0..mu.len() {
        for b in (a + 1)..mu.len() {
            let g: f64 = mu[a].iter().zip(&mu[b]).map(|(x, y)| (x - y) * (x - y)).sum();
            min_gap = min_gap.min(g);
        }
    }
    let graph = (n as f64).ln() / k as f64 * (p_prime.sqrt() - q_prime.sqrt()).powi(2);
    Ok(min_gap / 8.0 + graph)
}

/// Convenience wrapper: NMI and misclustering rate of a prediction.
pub fn evaluate(pred: &LabeledPartition, truth: &LabeledPartition) -> Result<(f64, f64)> {
    Ok((nmi(pred.labels(), truth.labels())?, misclustering_rate(pred.labels(), truth.labels())?))
}
