use crate::error::{param, Result};

/// Closed interval `[low, high]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
}

impl Interval {
    pub fn width(&self) -> f64 {
        self.high - self.low
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.low <= other.low && other.high <= self.high
    }
}

/// Number of sorted samples a `mass` window must hold.
fn window_len(n: usize, mass: f64) -> usize {
    // Small slack so that e.g. 0.95 * 100000 is not rounded up past 95000.
    let k = (mass * n as f64 - 1e-9).ceil() as usize;
    k.clamp(1, n)
}

/// Highest density interval of an ascending sample vector.
///
/// Returns the narrowest window spanning `ceil(mass * n)` consecutive sorted
/// samples; ties go to the lowest start index.
pub fn hdi(sorted: &[f64], mass: f64) -> Result<Interval> {
    if !(mass > 0.0 && mass < 1.0) {
        return param(format!("HDI mass must be in (0, 1), got {mass}"));
    }
    if sorted.len() < 100 {
        return param(format!(
            "HDI needs at least 100 samples, got {}",
            sorted.len()
        ));
    }
    if sorted.iter().any(|x| x.is_nan()) || sorted.windows(2).any(|w| w[0] > w[1]) {
        return param("HDI input must be sorted ascending and free of NaN");
    }
    let k = window_len(sorted.len(), mass);
    let mut best = 0;
    let mut best_width = f64::INFINITY;
    for (start, w) in sorted.windows(k).enumerate() {
        let width = w[k - 1] - w[0];
        if width < best_width {
            best_width = width;
            best = start;
        }
    }
    Ok(Interval {
        low: sorted[best],
        high: sorted[best + k - 1],
    })
}
