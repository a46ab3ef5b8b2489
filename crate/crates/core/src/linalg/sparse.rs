use std::collections::HashSet;

use crate::error::{Error, Result};

/// Sparse symmetric matrix stored as upper-triangle triplets `(i, j, w)` with
/// `i <= j`.
///
/// A row-compressed copy of the full symmetric expansion is kept alongside the
/// triplets so that row access (`A_i:`) and matrix-vector products are cheap.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymmetric {
    n: usize,
    triplets: Vec<(usize, usize, f64)>,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSymmetric {
    /// Builds the matrix from upper-triangle triplets. Zero weights are dropped.
    pub fn from_triplets(n: usize, triplets: Vec<(usize, usize, f64)>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(triplets.len());
        for &(i, j, w) in &triplets {
            if i > j {
                return Err(Error::param(format!("triplet ({i}, {j}) has i > j")));
            }
            if j >= n {
                return Err(Error::param(format!("index {j} out of range for n = {n}")));
            }
            if !w.is_finite() {
                return Err(Error::param(format!("non-finite weight at ({i}, {j})")));
            }
            if !seen.insert((i, j)) {
                return Err(Error::param(format!("duplicate entry ({i}, {j})")));
            }
        }
        let mut triplets: Vec<_> = triplets.into_iter().filter(|t| t.2 != 0.0).collect();
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        Ok(Self::build(n, triplets))
    }

    /// Builds from triplets that are already validated, sorted and nonzero.
    pub(crate) fn from_sorted_unchecked(n: usize, triplets: Vec<(usize, usize, f64)>) -> Self {
        Self::build(n, triplets)
    }

    fn build(n: usize, triplets: Vec<(usize, usize, f64)>) -> Self {
        let mut counts = vec![0usize; n + 1];
        for &(i, j, _) in &triplets {
            counts[i + 1] += 1;
            if i != j {
                counts[j + 1] += 1;
            }
        }
        for r in 0..n {
            counts[r + 1] += counts[r];
        }
        let row_ptr = counts;
        let nnz = row_ptr[n];
        let mut fill = row_ptr.clone();
        let mut col_idx = vec![0; nnz];
        let mut values = vec![0.0; nnz];
        // sorted triplets leave every CSR row sorted by column
        for &(i, j, w) in &triplets {
            if i != j {
                col_idx[fill[j]] = i;
                values[fill[j]] = w;
                fill[j] += 1;
            }
            col_idx[fill[i]] = j;
            values[fill[i]] = w;
            fill[i] += 1;
        }
        Self {
            n,
            triplets,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Dense symmetric input; only the upper triangle is read.
    pub fn from_dense(n: usize, dense: &[f64]) -> Result<Self> {
        if dense.len() != n * n {
            return Err(Error::dim("dense matrix must be n x n"));
        }
        let mut t = Vec::new();
        for i in 0..n {
            for j in i..n {
                let w = dense[i * n + j];
                if w != 0.0 {
                    t.push((i, j, w));
                }
            }
        }
        Self::from_triplets(n, t)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Upper-triangle triplets, sorted by `(i, j)`.
    pub fn triplets(&self) -> &[(usize, usize, f64)] {
        &self.triplets
    }

    /// Number of structural nonzeros in the full symmetric matrix.
    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    /// Column indices and values of row `i` of the full symmetric matrix.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.iter()
            .position(|&c| c == j)
            .map_or(0.0, |p| vals[p])
    }

    /// `y = A x` with `y` preallocated.
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&j, w)| w * x[j]).sum();
        }
    }

    /// Row sums of the full symmetric matrix.
    pub fn degrees(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).1.iter().sum()).collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|w| w * w).sum::<f64>().sqrt()
    }

    /// `self + scale * other`.
    pub fn add_scaled(&self, other: &SparseSymmetric, scale: f64) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::dim(format!("n = {} vs n = {}", self.n, other.n)));
        }
        let mut out = Vec::with_capacity(self.triplets.len() + other.triplets.len());
        let (mut a, mut b) = (self.triplets.iter().peekable(), other.triplets.iter().peekable());
        loop {
            let next = match (a.peek(), b.peek()) {
                (None, None) => break,
                (Some(_), None) => *a.next().unwrap(),
                (None, Some(&&(i, j, w))) => {
                    b.next();
                    (i, j, scale * w)
                }
                (Some(&&x), Some(&&y)) => match (x.0, x.1).cmp(&(y.0, y.1)) {
                    std::cmp::Ordering::Less => {
                        a.next();
                        x
                    }
                    std::cmp::Ordering::Greater => {
                        b.next();
                        (y.0, y.1, scale * y.2)
                    }
                    std::cmp::Ordering::Equal => {
                        a.next();
                        b.next();
                        (x.0, x.1, x.2 + scale * y.2)
                    }
                },
            };
            if next.2 != 0.0 {
                out.push(next);
            }
        }
        Ok(Self::build(self.n, out))
    }

    /// `D M D` for the diagonal matrix `D = diag(d)`.
    pub fn scale_symmetric(&self, d: &[f64]) -> Result<Self> {
        if d.len() != self.n {
            return Err(Error::dim("diagonal scaling length must equal n"));
        }
        let t = self
            .triplets
            .iter()
            .map(|&(i, j, w)| (i, j, d[i] * w * d[j]))
            .filter(|t| t.2 != 0.0)
            .collect();
        Ok(Self::build(self.n, t))
    }

    /// `self + shift * I`.
    pub fn shifted(&self, shift: f64) -> Self {
        let ident = Self::build(self.n, (0..self.n).map(|i| (i, i, 1.0)).collect());
        self.add_scaled(&ident, shift).expect("same dimension")
    }

    /// Row-major dense copy. Intended for small matrices.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n;
        let mut d = vec![0.0; n * n];
        for &(i, j, w) in &self.triplets {
            d[i * n + j] = w;
            d[j * n + i] = w;
        }
        d
    }
}

/// `A v` with the symmetric expansion of the stored triplets.
pub fn spmv(a: &SparseSymmetric, v: &[f64]) -> Result<Vec<f64>> {
    if v.len() != a.n() {
        return Err(Error::dim(format!(
            "vector of length {} for n = {}",
            v.len(),
            a.n()
        )));
    }
    let mut y = vec![0.0; a.n()];
    a.mul_vec_into(v, &mut y);
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_off_diagonal_edge() {
        let a = SparseSymmetric::from_triplets(2, vec![(0, 1, 1.0)]).unwrap();
        assert_eq!(spmv(&a, &[1.0, 0.0]).unwrap(), vec![0.0, 1.0]);
    }

    #[test]
    fn diagonal_counted_once() {
        let a = SparseSymmetric::from_triplets(1, vec![(0, 0, 2.0)]).unwrap();
        assert_eq!(spmv(&a, &[3.0]).unwrap(), vec![6.0]);
        assert_eq!(a.nnz(), 1);
    }

    #[test]
    fn dimension_mismatch() {
        let a = SparseSymmetric::from_triplets(2, vec![]).unwrap();
        assert!(matches!(spmv(&a, &[1.0]), Err(Error::Dimension(_))));
    }

    #[test]
    fn rejects_bad_triplets() {
        assert!(SparseSymmetric::from_triplets(2, vec![(1, 0, 1.0)]).is_err());
        assert!(SparseSymmetric::from_triplets(2, vec![(0, 2, 1.0)]).is_err());
        assert!(SparseSymmetric::from_triplets(2, vec![(0, 1, 1.0), (0, 1, 2.0)]).is_err());
    }

    #[test]
    fn add_scaled_merges() {
        let a = SparseSymmetric::from_triplets(3, vec![(0, 1, 1.0), (1, 2, 2.0)]).unwrap();
        let b = SparseSymmetric::from_triplets(3, vec![(0, 0, 1.0), (0, 1, -0.5)]).unwrap();
        let c = a.add_scaled(&b, 2.0).unwrap();
        assert_eq!(c.triplets(), &[(0, 0, 2.0), (1, 2, 2.0)]);
        assert_eq!(c.get(2, 1), 2.0);
    }

    fn dense_mul(n: usize, d: &[f64], v: &[f64]) -> Vec<f64> {
        (0..n).map(|i| (0..n).map(|j| d[i * n + j] * v[j]).sum()).collect()
    }

    #[test]
    fn random_six_by_six_matches_dense() {
        use rand::Rng;
        let mut rng = crate::linalg::rng_from_seed(6);
        let n = 6;
        let mut t = Vec::new();
        for i in 0..n {
            for j in i..n {
                if rng.random_bool(0.6) {
                    t.push((i, j, rng.random_range(-2.0..2.0)));
                }
            }
        }
        let a = SparseSymmetric::from_triplets(n, t).unwrap();
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let got = spmv(&a, &v).unwrap();
        let want = dense_mul(n, &a.to_dense(), &v);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn spmv_equals_dense_multiply(
            n in 1usize..50,
            seed in any::<u64>(),
            density in 0.0f64..1.0,
        ) {
            use rand::Rng;
            let mut rng = crate::linalg::rng_from_seed(seed);
            let mut dense = vec![0.0; n * n];
            for i in 0..n {
                for j in i..n {
                    if rng.random_bool(density) {
                        let w: f64 = rng.random_range(-3.0..3.0);
                        dense[i * n + j] = w;
                        dense[j * n + i] = w;
                    }
                }
            }
            let a = SparseSymmetric::from_dense(n, &dense).unwrap();
            let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let got = spmv(&a, &v).unwrap();
            let want = dense_mul(n, &dense, &v);
            for (g, w) in got.iter().zip(&want) {
                prop_assert!((g - w).abs() < 1e-10);
            }
        }
    }
}
