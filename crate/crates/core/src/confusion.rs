use crate::error::{param, Error, Result};

/// Square table of classification outcomes.
///
/// Entry `(j, k)` counts samples whose true class is `j` and whose predicted
/// class is `k`; rows are true classes and columns are predictions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    labels: Vec<String>,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    /// Builds a matrix from labels and row-major rows (true class per row).
    pub fn new(labels: Vec<String>, rows: Vec<Vec<u64>>) -> Result<Self> {
        let m = labels.len();
        if m < 2 {
            return param(format!("need at least 2 classes, got {m}"));
        }
        if rows.len() != m {
            return Err(Error::Dimension(format!(
                "{m} labels but {} rows",
                rows.len()
            )));
        }
        let mut counts = Vec::with_capacity(m * m);
        for (j, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(Error::Dimension(format!(
                    "row {j} has {} entries, expected {m}",
                    row.len()
                )));
            }
            counts.extend_from_slice(row);
        }
        let cm = Self { labels, counts };
        if cm.total() == 0 {
            return param("confusion matrix has no samples");
        }
        Ok(cm)
    }

    /// Unlabelled matrix with classes named `0..M`.
    pub fn from_rows(rows: Vec<Vec<u64>>) -> Result<Self> {
        let labels = (0..rows.len()).map(|j| j.to_string()).collect();
        Self::new(labels, rows)
    }

    pub fn num_classes(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, true_class: usize, predicted: usize) -> u64 {
        self.counts[true_class * self.num_classes() + predicted]
    }

    pub fn row(&self, j: usize) -> &[u64] {
        let m = self.num_classes();
        &self.counts[j * m..(j + 1) * m]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u64]> {
        self.counts.chunks(self.num_classes())
    }

    /// Number of samples whose true class is `j` (the observed `n_j`).
    pub fn row_sum(&self, j: usize) -> u64 {
        self.row(j).iter().sum()
    }

    /// Number of samples predicted as class `j`.
    pub fn column_sum(&self, j: usize) -> u64 {
        (0..self.num_classes()).map(|u| self.get(u, j)).sum()
    }

    pub fn row_sums(&self) -> Vec<u64> {
        (0..self.num_classes()).map(|j| self.row_sum(j)).collect()
    }

    pub fn trace(&self) -> u64 {
        (0..self.num_classes()).map(|j| self.get(j, j)).sum()
    }

    /// Total sample count `N`.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Reorders classes so that new class `i` is old class `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let m = self.num_classes();
        let mut seen = vec![false; m];
        if order.len() != m
            || order
                .iter()
                .any(|&o| o >= m || std::mem::replace(&mut seen[o], true))
        {
            return param("permutation must list every class exactly once");
        }
        let labels = order.iter().map(|&o| self.labels[o].clone()).collect();
        let rows = order
            .iter()
            .map(|&u| order.iter().map(|&v| self.get(u, v)).collect())
            .collect();
        Self::new(labels, rows)
    }

    /// Multiplies every count by `factor`.
    pub fn scaled(&self, factor: u64) -> Result<Self> {
        if factor == 0 {
            return param("scale factor must be positive");
        }
        let rows = self
            .rows()
            .map(|r| r.iter().map(|c| c * factor).collect())
            .collect();
        Self::new(self.labels.clone(), rows)
    }
}
