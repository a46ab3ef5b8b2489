use crate::error::{Error, Result};

/// Assignment of `n` nodes into communities `0..k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabeledPartition {
    labels: Vec<usize>,
    k: usize,
}

impl LabeledPartition {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::param("K must be at least 1"));
        }
        if let Some((i, &l)) = labels.iter().enumerate().find(|(_, &l)| l >= k) {
            return Err(Error::param(format!("label {l} at node {i} is not < K = {k}")));
        }
        Ok(Self { labels, k })
    }

    /// Builds a partition with `k` set to one more than the largest label.
    pub fn from_labels(labels: Vec<usize>) -> Result<Self> {
        let k = labels.iter().max().map_or(1, |m| m + 1);
        Self::new(labels, k)
    }

    pub(crate) fn new_unchecked(labels: Vec<usize>, k: usize) -> Self {
        debug_assert!(labels.iter().all(|&l| l < k));
        Self { labels, k }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn into_labels(self) -> Vec<usize> {
        self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// First empty cluster, if any.
    pub fn first_empty(&self) -> Option<usize> {
        self.sizes().iter().position(|&s| s == 0)
    }

    /// Same partition viewed with a larger number of clusters.
    pub fn with_k(&self, k: usize) -> Result<Self> {
        Self::new(self.labels.clone(), k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_labels() {
        assert!(LabeledPartition::new(vec![0, 2], 2).is_err());
        assert!(LabeledPartition::new(vec![0, 1], 0).is_err());
    }

    #[test]
    fn sizes_and_empty() {
        let z = LabeledPartition::new(vec![0, 0, 2], 3).unwrap();
        assert_eq!(z.sizes(), vec![2, 0, 1]);
        assert_eq!(z.first_empty(), Some(1));
        assert_eq!(LabeledPartition::from_labels(vec![1, 0]).unwrap().k(), 2);
    }
}
