//! Multi-class AUC by the Hand & Till pairwise method.
//!
//! For each ordered pair `(i, j)`, `A(i|j)` is the probability that a random
//! class-`i` sample scores higher on column `i` than a random class-`j`
//! sample, with ties counted as one half. It is computed from average-rank
//! sums (the Mann–Whitney identity). The multi-class AUC averages
//! `(A(i|j) + A(j|i)) / 2` over all unordered pairs of populated classes.

use crate::error::{param, Error, Result};
use crate::rank::average_ranks;

/// True class plus one score per class.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredSample {
    pub true_label: usize,
    pub scores: Vec<f64>,
}

impl ScoredSample {
    pub fn new(true_label: usize, scores: Vec<f64>) -> Result<Self> {
        if true_label >= scores.len() {
            return param(format!(
                "label {true_label} out of range for {} score columns",
                scores.len()
            ));
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return param("scores must be finite");
        }
        Ok(Self { true_label, scores })
    }
}

/// `A(positive | negative)` using score column `positive`. `None` when
/// either class has no samples.
pub fn binary_auc(samples: &[ScoredSample], positive: usize, negative: usize) -> Option<f64> {
    let mut scores = Vec::new();
    let mut n_pos = 0usize;
    for s in samples {
        if s.true_label == positive {
            scores.push((true, s.scores[positive]));
            n_pos += 1;
        } else if s.true_label == negative {
            scores.push((false, s.scores[positive]));
        }
    }
    let n_neg = scores.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let values: Vec<f64> = scores.iter().map(|s| s.1).collect();
    let rank_sum: f64 = average_ranks(&values)
        .iter()
        .zip(&scores)
        .filter(|(_, s)| s.0)
        .map(|(r, _)| r)
        .sum();
    let (p, n) = (n_pos as f64, n_neg as f64);
    Some((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// Symmetrized separability of one class pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairwiseAuc {
    pub i: usize,
    pub j: usize,
    /// `A(i|j)`, using score column `i`.
    pub a_ij: f64,
    /// `A(j|i)`, using score column `j`.
    pub a_ji: f64,
}

impl PairwiseAuc {
    pub fn value(&self) -> f64 {
        (self.a_ij + self.a_ji) / 2.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HandTillAuc {
    pub auc: f64,
    /// Pairs `i < j` of populated classes, in lexicographic order.
    pub pairs: Vec<PairwiseAuc>,
    /// Classes that have a score column but no samples.
    pub empty_classes: Vec<usize>,
}

impl HandTillAuc {
    pub fn warnings(&self) -> Vec<String> {
        self.empty_classes
            .iter()
            .map(|c| format!("class {c} has no samples and was excluded from pairing"))
            .collect()
    }
}

/// Macro-averaged pairwise AUC over every pair of populated classes.
pub fn hand_till_auc(samples: &[ScoredSample]) -> Result<HandTillAuc> {
    let Some(first) = samples.first() else {
        return param("no samples");
    };
    let m = first.scores.len();
    if let Some(s) = samples.iter().find(|s| s.scores.len() != m) {
        return Err(Error::Dimension(format!(
            "sample has {} scores, expected {m}",
            s.scores.len()
        )));
    }
    if let Some(s) = samples.iter().find(|s| s.true_label >= m) {
        return param(format!(
            "label {} out of range for {m} classes",
            s.true_label
        ));
    }
    let mut populated = vec![false; m];
    for s in samples {
        populated[s.true_label] = true;
    }
    let classes: Vec<usize> = (0..m).filter(|&c| populated[c]).collect();
    if classes.len() < 2 {
        return param("AUC needs samples from at least 2 classes");
    }
    let mut pairs = Vec::new();
    for (a, &i) in classes.iter().enumerate() {
        for &j in &classes[a + 1..] {
            pairs.push(PairwiseAuc {
                i,
                j,
                a_ij: binary_auc(samples, i, j).expect("populated"),
                a_ji: binary_auc(samples, j, i).expect("populated"),
            });
        }
    }
    let c = classes.len() as f64;
    let auc = 2.0 / (c * (c - 1.0)) * pairs.iter().map(PairwiseAuc::value).sum::<f64>();
    Ok(HandTillAuc {
        auc,
        pairs,
        empty_classes: (0..m).filter(|&c| !populated[c]).collect(),
    })
}
