//! Random-walk Metropolis sampler over the same posterior as [`crate::posterior`].
//!
//! This is an independent route to the posterior used to cross-check the
//! direct conjugate sampler. Each probability vector is parameterized by
//! additive log-ratios `z` (last logit pinned to 0, `p = softmax([z, 0])`).
//! Under that map Dir(a) has log density `sum_i a_i ln p_i` up to a constant,
//! the Jacobian contributing the extra `+1` to every exponent.

use crate::confusion::ConfusionMatrix;
use crate::error::{param, Result};
use crate::metrics::MetricId;
use crate::posterior::{ParameterDraw, PosteriorModel, PriorConfig};
use crate::sampling::RandomStream;

const MIN_STEPS: usize = 100_000;
const TARGET_ACCEPTANCE: f64 = 0.3;
const ADAPT_INTERVAL: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetropolisConfig {
    /// Recorded sweeps after burn-in. Each sweep proposes once per vector.
    pub steps: usize,
    /// Sweeps used for step-size adaptation and then discarded.
    pub burn_in: usize,
    pub initial_scale: f64,
}

impl Default for MetropolisConfig {
    fn default() -> Self {
        Self {
            steps: MIN_STEPS,
            burn_in: 10_000,
            initial_scale: 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MetropolisRun {
    pub metrics: Vec<MetricId>,
    /// Post-burn-in values per metric (NaN where undefined).
    pub samples: Vec<Vec<f64>>,
    /// Running mean of `mu` over recorded sweeps.
    pub mu_mean: Vec<f64>,
    /// Post-burn-in acceptance rate across all blocks.
    pub acceptance_rate: f64,
    pub warnings: Vec<String>,
}

impl MetropolisRun {
    /// Mean of the defined values of `id`, if it was recorded.
    pub fn mean(&self, id: MetricId) -> Option<f64> {
        let i = self.metrics.iter().position(|&m| m == id)?;
        let defined: Vec<f64> = self.samples[i]
            .iter()
            .copied()
            .filter(|x| !x.is_nan())
            .collect();
        (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
    }
}

/// One Dirichlet-distributed vector in log-ratio coordinates.
struct Block {
    alpha: Vec<f64>,
    z: Vec<f64>,
    log_target: f64,
    scale: f64,
    proposal: Vec<f64>,
}

fn log_target(alpha: &[f64], z: &[f64]) -> f64 {
    let max = z.iter().copied().fold(0.0f64, f64::max);
    let lse = max + ((-max).exp() + z.iter().map(|x| (x - max).exp()).sum::<f64>()).ln();
    let total: f64 = alpha.iter().sum();
    alpha.iter().zip(z).map(|(a, zi)| a * zi).sum::<f64>() - total * lse
}

fn softmax_into(z: &[f64], out: &mut [f64]) {
    let max = z.iter().copied().fold(0.0f64, f64::max);
    let mut sum = 0.0;
    for (o, zi) in out.iter_mut().zip(z.iter().chain(std::iter::once(&0.0))) {
        *o = (zi - max).exp();
        sum += *o;
    }
    out.iter_mut().for_each(|o| *o /= sum);
}

impl Block {
    fn new(alpha: &[f64], scale: f64) -> Self {
        // Start at the Dirichlet mean.
        let last = *alpha.last().expect("nonempty");
        let z: Vec<f64> = alpha[..alpha.len() - 1]
            .iter()
            .map(|a| (a / last).ln())
            .collect();
        Self {
            log_target: log_target(alpha, &z),
            alpha: alpha.to_vec(),
            proposal: z.clone(),
            z,
            scale,
        }
    }

    fn step(&mut self, stream: &mut RandomStream) -> bool {
        for (p, z) in self.proposal.iter_mut().zip(&self.z) {
            *p = z + self.scale * stream.normal();
        }
        let lt = log_target(&self.alpha, &self.proposal);
        if stream.uniform().ln() < lt - self.log_target {
            std::mem::swap(&mut self.z, &mut self.proposal);
            self.log_target = lt;
            true
        } else {
            false
        }
    }
}

/// Runs the sampler against `model`'s posterior and records `metrics`.
pub fn run_metropolis(
    model: &PosteriorModel,
    metrics: &[MetricId],
    config: &MetropolisConfig,
    stream: &mut RandomStream,
) -> Result<MetropolisRun> {
    if config.steps < MIN_STEPS {
        return param(format!(
            "Metropolis needs at least {MIN_STEPS} steps, got {}",
            config.steps
        ));
    }
    if !(config.initial_scale > 0.0 && config.initial_scale.is_finite()) {
        return param("initial proposal scale must be positive");
    }
    let m = model.num_classes();
    let mut blocks: Vec<Block> = std::iter::once(model.mu_params())
        .chain(model.theta_params())
        .map(|p| Block::new(p.alpha(), config.initial_scale))
        .collect();

    let mut window_accepts = vec![0usize; blocks.len()];
    for sweep in 1..=config.burn_in {
        for (b, acc) in blocks.iter_mut().zip(&mut window_accepts) {
            *acc += b.step(stream) as usize;
        }
        if sweep % ADAPT_INTERVAL == 0 {
            for (b, acc) in blocks.iter_mut().zip(&mut window_accepts) {
                let rate = *acc as f64 / ADAPT_INTERVAL as f64;
                b.scale *= (2.0 * (rate - TARGET_ACCEPTANCE)).exp();
                *acc = 0;
            }
        }
    }

    let mut samples = vec![Vec::with_capacity(config.steps); metrics.len()];
    let mut mu_sum = vec![0.0; m];
    let mut mu = vec![0.0; m];
    let mut theta = vec![vec![0.0; m]; m];
    let mut accepted = 0usize;
    for _ in 0..config.steps {
        for b in blocks.iter_mut() {
            accepted += b.step(stream) as usize;
        }
        softmax_into(&blocks[0].z, &mut mu);
        for (row, b) in theta.iter_mut().zip(&blocks[1..]) {
            softmax_into(&b.z, row);
        }
        mu_sum.iter_mut().zip(&mu).for_each(|(s, x)| *s += x);
        let draw = ParameterDraw::new(mu.clone(), theta.clone())?;
        for (col, &id) in samples.iter_mut().zip(metrics) {
            col.push(draw.metric_value(id).unwrap_or(f64::NAN));
        }
    }

    let acceptance_rate = accepted as f64 / (config.steps * blocks.len()) as f64;
    let mut warnings = Vec::new();
    if !(0.1..=0.6).contains(&acceptance_rate) {
        warnings.push(format!(
            "Metropolis acceptance rate {acceptance_rate:.3} outside [0.1, 0.6]"
        ));
    }
    Ok(MetropolisRun {
        metrics: metrics.to_vec(),
        samples,
        mu_mean: mu_sum.iter().map(|s| s / config.steps as f64).collect(),
        acceptance_rate,
        warnings,
    })
}

/// Fits `prior` to `cm` and samples the posterior with Metropolis.
pub fn metropolis_reference(
    cm: &ConfusionMatrix,
    prior: &PriorConfig,
    metrics: &[MetricId],
    config: &MetropolisConfig,
    stream: &mut RandomStream,
) -> Result<MetropolisRun> {
    let model = PosteriorModel::fit(cm, prior)?;
    run_metropolis(&model, metrics, config, stream)
}
