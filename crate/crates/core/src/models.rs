//! Random graph and covariate generators.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::random::{bernoulli, categorical, standard_normal, validate_weights};
use crate::linalg::{DenseMatrix, SparseSymmetric};
use crate::partition::LabeledPartition;
use crate::SymmetricGraph;

/// How community labels are drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum Membership {
    Fixed {
        labels: Vec<usize>,
    },
    Multinomial {
        weights: Vec<f64>,
    },
    /// i.i.d. uniform over the K communities.
    #[default]
    Uniform,
    /// `floor(n/K)` or `ceil(n/K)` nodes per community, randomly permuted.
    Balanced,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbmSpec {
    pub n: usize,
    pub k: usize,
    pub pi: Vec<Vec<f64>>,
    #[serde(default)]
    pub membership: Membership,
    #[serde(default)]
    pub self_loops: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateSpec {
    pub centers: Vec<Vec<f64>>,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignedSbmSpec {
    pub n: usize,
    pub k: usize,
    pub p: f64,
    pub eta: f64,
    #[serde(default)]
    pub membership: Membership,
}

/// K x K connectivity matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Connectivity {
    k: usize,
    data: Vec<f64>,
}

impl Connectivity {
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.len();
        if k == 0 || rows.iter().any(|r| r.len() != k) {
            return Err(Error::param("connectivity matrix must be square and non-empty"));
        }
        let data = rows.concat();
        if data.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::param("connectivity entries must lie in [0, 1]"));
        }
        for a in 0..k {
            for b in 0..a {
                if (data[a * k + b] - data[b * k + a]).abs() > 1e-12 {
                    return Err(Error::param(format!("connectivity not symmetric at ({a}, {b})")));
                }
            }
        }
        Ok(Self { k, data })
    }

    /// Symmetric model: `p` on the diagonal, `q` elsewhere.
    pub fn symmetric(k: usize, p: f64, q: f64) -> Result<Self> {
        let rows: Vec<Vec<f64>> = (0..k)
            .map(|a| (0..k).map(|b| if a == b { p } else { q }).collect())
            .collect();
        Self::new(&rows)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.data[a * self.k + b]
    }

    pub fn row(&self, a: usize) -> &[f64] {
        &self.data[a * self.k..(a + 1) * self.k]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.k).map(|a| self.row(a).to_vec()).collect()
    }
}

pub fn generate_partition(n: usize, k: usize, membership: &Membership, rng: &mut impl Rng) -> Result<LabeledPartition> {
    if k == 0 || k > n {
        return Err(Error::param(format!("need 1 <= K <= n, got K = {k}, n = {n}")));
    }
    let labels = match membership {
        Membership::Fixed { labels } => {
            if labels.len() != n {
                return Err(Error::dim(format!("{} fixed labels for n = {n}", labels.len())));
            }
            labels.clone()
        }
        Membership::Multinomial { weights } => {
            if weights.len() != k {
                return Err(Error::dim(format!("{} weights for K = {k}", weights.len())));
            }
            validate_weights(weights)?;
            (0..n).map(|_| categorical(weights, rng)).collect()
        }
        Membership::Uniform => (0..n).map(|_| rng.random_range(0..k)).collect(),
        Membership::Balanced => {
            let mut labels: Vec<usize> = (0..n).map(|i| i % k).collect();
            labels.shuffle(rng);
            labels
        }
    };
    LabeledPartition::new(labels, k)
}

/// Samples `A_ij ~ Bernoulli(Pi[z_i][z_j])` for every pair `i < j`, and also
/// `i == j` when `self_loops` is set.
pub fn generate_sbm(z: &LabeledPartition, pi: &Connectivity, self_loops: bool, rng: &mut impl Rng) -> Result<SymmetricGraph> {
    if pi.k() != z.k() {
        return Err(Error::dim(format!("Pi is {0}x{0} but K = {1}", pi.k(), z.k())));
    }
    let n = z.n();
    let labels = z.labels();
    let mut t = Vec::new();
    for i in 0..n {
        let row = pi.row(labels[i]);
        let start = if self_loops { i } else { i + 1 };
        for (j, &lj) in labels.iter().enumerate().skip(start) {
            if bernoulli(row[lj], rng) {
                t.push((i, j, 1.0));
            }
        }
    }
    Ok(SparseSymmetric::from_sorted_unchecked(n, t))
}

/// Row `i` is `centers[z_i] + sigma * N(0, I_d)`.
pub fn generate_covariates(z: &LabeledPartition, spec: &CovariateSpec, rng: &mut impl Rng) -> Result<DenseMatrix> {
    if spec.centers.len() != z.k() {
        return Err(Error::dim(format!("{} centers for K = {}", spec.centers.len(), z.k())));
    }
    if !(spec.sigma >= 0.0) || !spec.sigma.is_finite() {
        return Err(Error::param("sigma must be finite and >= 0"));
    }
    let centers = DenseMatrix::from_rows(&spec.centers)?;
    let d = centers.cols();
    let mut data = Vec::with_capacity(z.n() * d);
    for &l in z.labels() {
        for &m in centers.row(l) {
            let noise = if spec.sigma == 0.0 { 0.0 } else { spec.sigma * standard_normal(rng) };
            data.push(m + noise);
        }
    }
    DenseMatrix::new(z.n(), d, data)
}

/// Erdős–Rényi(p) edges, +1 within and -1 across communities, each sign flipped
/// independently with probability `eta`.
pub fn generate_signed_sbm(spec: &SignedSbmSpec, rng: &mut impl Rng) -> Result<(SymmetricGraph, LabeledPartition)> {
    if !(0.0..=1.0).contains(&spec.p) {
        return Err(Error::param(format!("p = {} outside [0, 1]", spec.p)));
    }
    if !(0.0..0.5).contains(&spec.eta) {
        return Err(Error::param(format!("eta = {} outside [0, 0.5)", spec.eta)));
    }
    let z = generate_partition(spec.n, spec.k, &spec.membership, rng)?;
    let labels = z.labels();
    let mut t = Vec::new();
    for i in 0..spec.n {
        for j in (i + 1)..spec.n {
            if bernoulli(spec.p, rng) {
                let mut w = if labels[i] == labels[j] { 1.0 } else { -1.0 };
                if bernoulli(spec.eta, rng) {
                    w = -w;
                }
                t.push((i, j, w));
            }
        }
    }
    Ok((SparseSymmetric::from_sorted_unchecked(spec.n, t), z))
}

/// `P = Z Pi Z^T`, including the diagonal.
pub fn expected_matrix(z: &LabeledPartition, pi: &Connectivity) -> Result<SparseSymmetric> {
    if pi.k() != z.k() {
        return Err(Error::dim(format!("Pi is {0}x{0} but K = {1}", pi.k(), z.k())));
    }
    let n = z.n();
    let l = z.labels();
    let mut t = Vec::new();
    for i in 0..n {
        for j in i..n {
            let p = pi.get(l[i], l[j]);
            if p != 0.0 {
                t.push((i, j, p));
            }
        }
    }
    Ok(SparseSymmetric::from_sorted_unchecked(n, t))
}

impl SbmSpec {
    pub fn connectivity(&self) -> Result<Connectivity> {
        let pi = Connectivity::new(&self.pi)?;
        if pi.k() != self.k {
            return Err(Error::dim(format!("Pi is {0}x{0} but K = {1}", pi.k(), self.k)));
        }
        Ok(pi)
    }

    pub fn generate(&self, rng: &mut impl Rng) -> Result<(SymmetricGraph, LabeledPartition)> {
        let pi = self.connectivity()?;
        let z = generate_partition(self.n, self.k, &self.membership, rng)?;
        let a = generate_sbm(&z, &pi, self.self_loops, rng)?;
        Ok((a, z))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rng_from_seed;

    fn fig1_pi() -> Connectivity {
        let s = |v: [f64; 3]| v.iter().map(|x| 0.02 * x).collect::<Vec<_>>();
        Connectivity::new(&[s([1.6, 1.2, 0.05]), s([1.2, 1.6, 0.05]), s([0.05, 0.05, 1.2])]).unwrap()
    }

    #[test]
    fn fixed_labels_verbatim() {
        let mut rng = rng_from_seed(0);
        let m = Membership::Fixed { labels: vec![0, 0, 1, 1] };
        let z = generate_partition(4, 2, &m, &mut rng).unwrap();
        assert_eq!(z.labels(), &[0, 0, 1, 1]);
    }

    #[test]
    fn balanced_sizes() {
        let mut rng = rng_from_seed(0);
        let z = generate_partition(6, 3, &Membership::Balanced, &mut rng).unwrap();
        assert_eq!(z.sizes(), vec![2, 2, 2]);
        let z = generate_partition(7, 3, &Membership::Balanced, &mut rng).unwrap();
        assert!(z.sizes().iter().all(|&s| s == 2 || s == 3));
    }

    #[test]
    fn k_greater_than_n_rejected() {
        let mut rng = rng_from_seed(0);
        assert!(generate_partition(2, 3, &Membership::Uniform, &mut rng).is_err());
    }

    #[test]
    fn multinomial_cluster_sizes() {
        let mut rng = rng_from_seed(10);
        let w = Membership::Multinomial {
            weights: vec![1.0 / 3.0, 1.0 / 3.0, 1.0 - 2.0 / 3.0],
        };
        let z = generate_partition(3000, 3, &w, &mut rng).unwrap();
        for s in z.sizes() {
            assert!((910..=1090).contains(&s), "{s}");
        }
    }

    #[test]
    fn zero_and_complete_graphs() {
        let mut rng = rng_from_seed(1);
        let z = LabeledPartition::new(vec![0, 1, 0], 2).unwrap();
        let zero = Connectivity::symmetric(2, 0.0, 0.0).unwrap();
        assert_eq!(generate_sbm(&z, &zero, false, &mut rng).unwrap().nnz(), 0);
        let one = Connectivity::symmetric(2, 1.0, 1.0).unwrap();
        let a = generate_sbm(&z, &one, false, &mut rng).unwrap();
        assert_eq!(a.triplets(), &[(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)]);
        let a = generate_sbm(&z, &one, true, &mut rng).unwrap();
        assert_eq!(a.triplets().len(), 6);
    }

    #[test]
    fn fig1_within_cluster_density() {
        let mut rng = rng_from_seed(2024);
        let z = generate_partition(1000, 3, &Membership::Balanced, &mut rng).unwrap();
        let a = generate_sbm(&z, &fig1_pi(), false, &mut rng).unwrap();
        let l = z.labels();
        let m = z.sizes()[0] as f64;
        let within = a
            .triplets()
            .iter()
            .filter(|&&(i, j, _)| l[i] == 0 && l[j] == 0)
            .count() as f64;
        let density = within / (m * (m - 1.0) / 2.0);
        assert!((density - 0.032).abs() < 0.002, "{density}");
    }

    #[test]
    fn sbm_is_binary_without_diagonal() {
        let mut rng = rng_from_seed(3);
        let z = generate_partition(300, 3, &Membership::Uniform, &mut rng).unwrap();
        let a = generate_sbm(&z, &fig1_pi(), false, &mut rng).unwrap();
        assert!(a.triplets().iter().all(|&(i, j, w)| i < j && w == 1.0));
    }

    #[test]
    fn covariates_noiseless_and_noisy() {
        let mut rng = rng_from_seed(4);
        let z = LabeledPartition::new(vec![0, 1, 1], 2).unwrap();
        let spec = CovariateSpec {
            centers: vec![vec![1.0, 2.0], vec![-3.0, 0.5]],
            sigma: 0.0,
        };
        let x = generate_covariates(&z, &spec, &mut rng).unwrap();
        assert_eq!(x.row(0), &[1.0, 2.0]);
        assert_eq!(x.row(2), &[-3.0, 0.5]);

        let sigma2: f64 = 0.2;
        let spec = CovariateSpec {
            centers: vec![vec![0.0, 0.0, 1.0], vec![-1.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
            sigma: sigma2.sqrt(),
        };
        let z = generate_partition(10_000, 3, &Membership::Uniform, &mut rng).unwrap();
        let x = generate_covariates(&z, &spec, &mut rng).unwrap();
        let sizes = z.sizes();
        for c in 0..3 {
            let mut mean = [0.0; 3];
            for i in (0..z.n()).filter(|&i| z.label(i) == c) {
                for (m, v) in mean.iter_mut().zip(x.row(i)) {
                    *m += v / sizes[c] as f64;
                }
            }
            let tol = 3.0 * spec.sigma / (sizes[c] as f64).sqrt();
            for (m, mu) in mean.iter().zip(&spec.centers[c]) {
                assert!((m - mu).abs() < tol);
            }
        }
        // per-coordinate residual variance over 1e4 draws
        let mut ss = 0.0;
        for i in 0..z.n() {
            let r = x.get(i, 0) - spec.centers[z.label(i)][0];
            ss += r * r;
        }
        let var = ss / z.n() as f64;
        assert!((var - sigma2).abs() < 0.05 * sigma2, "{var}");
    }

    #[test]
    fn signed_noiseless_signs() {
        let mut rng = rng_from_seed(5);
        let spec = SignedSbmSpec {
            n: 200,
            k: 3,
            p: 0.2,
            eta: 0.0,
            membership: Membership::Uniform,
        };
        let (a, z) = generate_signed_sbm(&spec, &mut rng).unwrap();
        for &(i, j, w) in a.triplets() {
            assert_eq!(w, if z.label(i) == z.label(j) { 1.0 } else { -1.0 });
        }
    }

    #[test]
    fn signed_flip_fraction_and_vanishing_signal() {
        let mut rng = rng_from_seed(6);
        let eta = 0.2;
        let spec = SignedSbmSpec {
            n: 1500,
            k: 3,
            p: 0.05,
            eta,
            membership: Membership::Uniform,
        };
        let (a, z) = generate_signed_sbm(&spec, &mut rng).unwrap();
        let m = a.triplets().len() as f64;
        let flipped = a
            .triplets()
            .iter()
            .filter(|&&(i, j, w)| (w > 0.0) != (z.label(i) == z.label(j)))
            .count() as f64;
        assert!((flipped / m - eta).abs() <= 4.0 * (eta * (1.0 - eta) / m).sqrt());

        // eta = 0.5 - eps: within-cluster mean sign is 1 - 2 eta = 2 eps
        let eps = 0.05;
        let spec = SignedSbmSpec { eta: 0.5 - eps, ..spec };
        let (a, z) = generate_signed_sbm(&spec, &mut rng).unwrap();
        let within: Vec<f64> = a
            .triplets()
            .iter()
            .filter(|&&(i, j, _)| z.label(i) == z.label(j))
            .map(|t| t.2)
            .collect();
        let mean = within.iter().sum::<f64>() / within.len() as f64;
        let se = 1.0 / (within.len() as f64).sqrt();
        assert!((mean - 2.0 * eps).abs() < 4.0 * se, "{mean}");
    }

    #[test]
    fn signed_eta_out_of_range() {
        let mut rng = rng_from_seed(5);
        let spec = SignedSbmSpec {
            n: 10,
            k: 2,
            p: 0.5,
            eta: 0.5,
            membership: Membership::Uniform,
        };
        assert!(generate_signed_sbm(&spec, &mut rng).is_err());
    }

    #[test]
    fn expected_matrix_blocks() {
        let z = LabeledPartition::new(vec![0; 3], 1).unwrap();
        let p = expected_matrix(&z, &Connectivity::new(&[vec![0.3]]).unwrap()).unwrap();
        assert!(p.to_dense().iter().all(|&v| v == 0.3));

        let z = LabeledPartition::new(vec![0, 0, 1, 1], 2).unwrap();
        let pi = Connectivity::symmetric(2, 0.5, 0.0).unwrap();
        let d = expected_matrix(&z, &pi).unwrap().to_dense();
        let want = [
            0.5, 0.5, 0.0, 0.0, 0.5, 0.5, 0.0, 0.0, 0.0, 0.0, 0.5, 0.5, 0.0, 0.0, 0.5, 0.5,
        ];
        assert_eq!(d, want);
    }

    #[test]
    fn expected_matrix_matches_dense_product() {
        let mut rng = rng_from_seed(8);
        let z = generate_partition(12, 3, &Membership::Uniform, &mut rng).unwrap();
        let pi = Connectivity::new(&[
            vec![0.5, 0.1, 0.2],
            vec![0.1, 0.4, 0.3],
            vec![0.2, 0.3, 0.9],
        ])
        .unwrap();
        let d = expected_matrix(&z, &pi).unwrap().to_dense();
        // Z Pi Z^T with the one-hot Z
        let n = 12;
        for i in 0..n {
            for j in 0..n {
                let mut v = 0.0;
                for a in 0..3 {
                    for b in 0..3 {
                        let zi = f64::from(u8::from(z.label(i) == a));
                        let zj = f64::from(u8::from(z.label(j) == b));
                        v += zi * pi.get(a, b) * zj;
                    }
                }
                assert_eq!(d[i * n + j], v);
            }
        }
    }

    #[test]
    fn generators_reproducible() {
        let spec = SbmSpec {
            n: 200,
            k: 3,
            pi: fig1_pi().to_rows(),
            membership: Membership::Uniform,
            self_loops: false,
        };
        let a = spec.generate(&mut rng_from_seed(77)).unwrap();
        let b = spec.generate(&mut rng_from_seed(77)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn asymmetric_pi_rejected() {
        assert!(Connectivity::new(&[vec![0.1, 0.2], vec![0.3, 0.1]]).is_err());
        assert!(Connectivity::new(&[vec![1.2]]).is_err());
    }
}
