//! Shared inputs for the benchmarks.

use clfeval_core::ConfusionMatrix;

/// Three-class matrix with 150 samples, rows = true class.
pub fn three_class_matrix() -> ConfusionMatrix {
    ConfusionMatrix::new(
        vec!["Normal".into(), "Pneumonia".into(), "Covid-19".into()],
        vec![vec![38, 7, 5], vec![8, 32, 10], vec![2, 0, 48]],
    )
    .expect("valid matrix")
}
