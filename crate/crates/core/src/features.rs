//! Feature vectors with a cached support.
//!
//! Most feature maps in this crate are sparse (one-hot maps are the extreme
//! case), and every quadratic form and rank-1 update only needs to touch the
//! nonzero coordinates.

/// Dense feature vector together with the indices of its nonzero entries.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVec {
    values: Vec<f64>,
    support: Vec<usize>,
}

impl FeatureVec {
    pub fn new(values: Vec<f64>) -> Self {
        let support = values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, _)| i)
            .collect();
        Self { values, support }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            values: vec![0.0; dim],
            support: Vec::new(),
        }
    }

    /// Standard basis vector `e_index` in `dim` dimensions.
    pub fn one_hot(dim: usize, index: usize) -> Self {
        let mut values = vec![0.0; dim];
        values[index] = 1.0;
        Self {
            values,
            support: vec![index],
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    /// Nonzero `(index, value)` pairs in increasing index order.
    pub fn nonzeros(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.support.iter().map(move |&i| (i, self.values[i]))
    }

    pub fn norm(&self) -> f64 {
        self.nonzeros().map(|(_, v)| v * v).sum::<f64>().sqrt()
    }

    /// Inner product with a dense vector of the same dimension.
    pub fn dot(&self, other: &[f64]) -> f64 {
        self.nonzeros().map(|(i, v)| v * other[i]).sum()
    }
}

impl From<Vec<f64>> for FeatureVec {
    fn from(values: Vec<f64>) -> Self {
        Self::new(values)
    }
}
