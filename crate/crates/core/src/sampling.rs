//! Seeded gamma and Dirichlet variates.
//!
//! Uniforms come from ChaCha12 keyed by a 64-bit seed, with the 64-bit
//! stream id selecting an independent keystream. Gamma variates use the
//! Marsaglia–Tsang squeeze, Dirichlet variates are normalized gammas.

use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{param, Result};

/// Reproducible uniform source identified by `(seed, stream_id)`.
#[derive(Debug, Clone)]
pub struct RandomStream {
    rng: ChaCha12Rng,
}

impl RandomStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self { rng }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via the Marsaglia polar method.
    pub fn normal(&mut self) -> f64 {
        loop {
            let x = 2.0 * self.uniform() - 1.0;
            let y = 2.0 * self.uniform() - 1.0;
            let s = x * x + y * y;
            if s < 1.0 && s > 0.0 {
                return x * (-2.0 * s.ln() / s).sqrt();
            }
        }
    }
}

/// Positive concentration vector of a Dirichlet distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletParams {
    alpha: Vec<f64>,
}

impl DirichletParams {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() {
            return param("Dirichlet parameters must be nonempty");
        }
        if let Some(a) = alpha.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return param(format!(
                "Dirichlet parameter {a} is not a positive finite number"
            ));
        }
        Ok(Self { alpha })
    }

    /// All-ones (uniform) parameters of length `m`.
    pub fn uniform(m: usize) -> Self {
        Self {
            alpha: vec![1.0; m],
        }
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.alpha.iter().sum()
    }

    /// Analytic mean `alpha_i / sum(alpha)`.
    pub fn mean(&self) -> Vec<f64> {
        let t = self.total();
        self.alpha.iter().map(|a| a / t).collect()
    }
}

fn gamma_unchecked(shape: f64, stream: &mut RandomStream) -> f64 {
    if shape < 1.0 {
        // Gamma(a) = Gamma(a + 1) * U^(1/a)
        let g = gamma_unchecked(shape + 1.0, stream);
        return g * stream.uniform().powf(1.0 / shape);
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let (x, v) = loop {
            let x = stream.normal();
            let v = 1.0 + c * x;
            if v > 0.0 {
                break (x, v * v * v);
            }
        };
        let u = stream.uniform();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

/// One draw from Gamma(shape, scale = 1).
pub fn sample_gamma(shape: f64, stream: &mut RandomStream) -> Result<f64> {
    if !(shape.is_finite() && shape > 0.0) {
        return param(format!("gamma shape must be positive, got {shape}"));
    }
    Ok(gamma_unchecked(shape, stream))
}

pub(crate) fn dirichlet_into(alpha: &[f64], stream: &mut RandomStream, out: &mut [f64]) {
    loop {
        let mut sum = 0.0;
        for (o, &a) in out.iter_mut().zip(alpha) {
            *o = gamma_unchecked(a, stream);
            sum += *o;
        }
        // All components underflowing is only possible for tiny shapes.
        if sum > 0.0 && sum.is_finite() {
            out.iter_mut().for_each(|o| *o /= sum);
            return;
        }
    }
}

/// One probability vector from Dir(alpha).
pub fn sample_dirichlet(params: &DirichletParams, stream: &mut RandomStream) -> Vec<f64> {
    let mut out = vec![0.0; params.len()];
    dirichlet_into(params.alpha(), stream, &mut out);
    out
}
