//! Conjugate Dirichlet–multinomial posterior over classifier metrics.
//!
//! The class prevalence vector `mu` has prior Dir(beta) and each row of
//! classification probabilities `theta_j` has prior Dir(alpha_j). Observing a
//! confusion matrix adds the row sums to `beta` and row `j` to `alpha_j`.
//! The posterior factorizes, so joint draws are independent Dirichlet draws
//! and every metric is a deterministic function of one draw.

use std::thread;

use crate::confusion::ConfusionMatrix;
use crate::error::{param, Error, Result};
use crate::hdi::{hdi, Interval};
use crate::metrics::{harmonic_f1, MetricId};
use crate::sampling::{dirichlet_into, DirichletParams, RandomStream};

/// Draws per substream. Fixed so that results do not depend on worker count.
const BLOCK_SIZE: usize = 4096;

/// Fraction of excluded draws above which a summary carries a warning.
const EXCLUSION_WARN_FRACTION: f64 = 0.01;

/// Dirichlet hyper-parameters for the class prevalence and for each row.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorConfig {
    pub beta: DirichletParams,
    pub alpha_rows: Vec<DirichletParams>,
}

impl PriorConfig {
    /// All-ones prior on every vector.
    pub fn uniform(m: usize) -> Self {
        Self {
            beta: DirichletParams::uniform(m),
            alpha_rows: vec![DirichletParams::uniform(m); m],
        }
    }

    pub fn num_classes(&self) -> usize {
        self.beta.len()
    }

    fn validate(&self) -> Result<()> {
        let m = self.beta.len();
        if m < 2 {
            return param("prior needs at least 2 classes");
        }
        if self.alpha_rows.len() != m || self.alpha_rows.iter().any(|a| a.len() != m) {
            return Err(Error::Dimension(format!(
                "prior rows must form a {m}x{m} grid"
            )));
        }
        Ok(())
    }
}

/// Posterior Dirichlet parameters after the conjugate update.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorModel {
    labels: Vec<String>,
    prior: PriorConfig,
    mu_params: DirichletParams,
    theta_params: Vec<DirichletParams>,
    total: u64,
}

impl PosteriorModel {
    /// Conjugate update of `prior` with the counts of `cm`. No sampling.
    pub fn fit(cm: &ConfusionMatrix, prior: &PriorConfig) -> Result<Self> {
        prior.validate()?;
        let m = cm.num_classes();
        if prior.num_classes() != m {
            return Err(Error::Dimension(format!(
                "prior has {} classes, matrix has {m}",
                prior.num_classes()
            )));
        }
        let mu = prior
            .beta
            .alpha()
            .iter()
            .zip(cm.row_sums())
            .map(|(b, n)| b + n as f64)
            .collect();
        let theta = prior
            .alpha_rows
            .iter()
            .zip(cm.rows())
            .map(|(a, row)| {
                DirichletParams::new(
                    a.alpha()
                        .iter()
                        .zip(row)
                        .map(|(a, c)| a + *c as f64)
                        .collect(),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            labels: cm.labels().to_vec(),
            prior: prior.clone(),
            mu_params: DirichletParams::new(mu)?,
            theta_params: theta,
            total: cm.total(),
        })
    }

    /// Model with no observations: the posterior equals the prior.
    pub fn prior_only(prior: &PriorConfig) -> Result<Self> {
        prior.validate()?;
        let m = prior.num_classes();
        Ok(Self {
            labels: (0..m).map(|j| j.to_string()).collect(),
            prior: prior.clone(),
            mu_params: prior.beta.clone(),
            theta_params: prior.alpha_rows.clone(),
            total: 0,
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.mu_params.len()
    }

    /// Test set size `N` the model was fitted on.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn prior(&self) -> &PriorConfig {
        &self.prior
    }

    pub fn mu_params(&self) -> &DirichletParams {
        &self.mu_params
    }

    pub fn theta_params(&self) -> &[DirichletParams] {
        &self.theta_params
    }

    /// Posterior parameters minus prior, i.e. the observed counts per row.
    pub fn observed_counts(&self) -> Vec<Vec<f64>> {
        self.theta_params
            .iter()
            .zip(&self.prior.alpha_rows)
            .map(|(post, pri)| {
                post.alpha()
                    .iter()
                    .zip(pri.alpha())
                    .map(|(a, b)| a - b)
                    .collect()
            })
            .collect()
    }

    /// Closed-form posterior mean of recall for class `j`.
    pub fn recall_mean(&self, j: usize) -> f64 {
        self.theta_params[j].mean()[j]
    }

    /// One joint draw of `(mu, theta)`.
    pub fn draw(&self, stream: &mut RandomStream) -> ParameterDraw {
        let m = self.num_classes();
        let mut d = ParameterDraw {
            mu: vec![0.0; m],
            theta: vec![0.0; m * m],
        };
        self.draw_into(stream, &mut d);
        d
    }

    fn draw_into(&self, stream: &mut RandomStream, d: &mut ParameterDraw) {
        let m = self.num_classes();
        dirichlet_into(self.mu_params.alpha(), stream, &mut d.mu);
        for (j, params) in self.theta_params.iter().enumerate() {
            dirichlet_into(params.alpha(), stream, &mut d.theta[j * m..(j + 1) * m]);
        }
    }
}

/// Realized class prevalences `mu` and row-conditional prediction
/// probabilities `theta` (row-major, `theta[j][k]` = P(predict k | class j)).
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterDraw {
    mu: Vec<f64>,
    theta: Vec<f64>,
}

impl ParameterDraw {
    pub fn new(mu: Vec<f64>, theta_rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = mu.len();
        if m < 2 || theta_rows.len() != m || theta_rows.iter().any(|r| r.len() != m) {
            return Err(Error::Dimension(
                "theta must be MxM with M = len(mu) >= 2".into(),
            ));
        }
        let valid = |v: &[f64]| {
            v.iter().all(|x| x.is_finite() && *x >= 0.0)
                && (v.iter().sum::<f64>() - 1.0).abs() < 1e-9
        };
        if !valid(&mu) || !theta_rows.iter().all(|r| valid(r)) {
            return param("mu and every theta row must be probability vectors");
        }
        Ok(Self {
            mu,
            theta: theta_rows.concat(),
        })
    }

    /// Maximum-likelihood parameters: `mu_j = n_j / N`, `theta_jk = c_jk / n_j`.
    /// Rows with no samples get a uniform `theta` row.
    pub fn maximum_likelihood(cm: &ConfusionMatrix) -> Self {
        let m = cm.num_classes();
        let n = cm.total() as f64;
        let mu = cm.row_sums().iter().map(|&r| r as f64 / n).collect();
        let mut theta = Vec::with_capacity(m * m);
        for row in cm.rows() {
            let r: u64 = row.iter().sum();
            if r == 0 {
                theta.extend(std::iter::repeat_n(1.0 / m as f64, m));
            } else {
                theta.extend(row.iter().map(|&c| c as f64 / r as f64));
            }
        }
        Self { mu, theta }
    }

    pub fn num_classes(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn theta(&self, j: usize, k: usize) -> f64 {
        self.theta[j * self.num_classes() + k]
    }

    pub fn theta_row(&self, j: usize) -> &[f64] {
        let m = self.num_classes();
        &self.theta[j * m..(j + 1) * m]
    }

    /// Evaluates one metric. `None` when its denominator is zero in this draw.
    pub fn metric_value(&self, id: MetricId) -> Option<f64> {
        MetricEvaluator::new(self).value(id)
    }
}

/// Caches the joint `mu_u * theta_uv` table for repeated metric evaluation.
struct MetricEvaluator<'a> {
    draw: &'a ParameterDraw,
    m: usize,
    joint: Vec<f64>,
}

impl<'a> MetricEvaluator<'a> {
    fn new(draw: &'a ParameterDraw) -> Self {
        let m = draw.num_classes();
        let joint = (0..m * m).map(|i| draw.mu[i / m] * draw.theta[i]).collect();
        Self { draw, m, joint }
    }

    fn p(&self, u: usize, v: usize) -> f64 {
        self.joint[u * self.m + v]
    }

    fn recall(&self, j: usize) -> Option<f64> {
        Some(self.draw.theta(j, j))
    }

    fn precision(&self, j: usize) -> Option<f64> {
        let col: f64 = (0..self.m).map(|u| self.p(u, j)).sum();
        (col > 0.0).then(|| self.p(j, j) / col)
    }

    fn f1(&self, j: usize) -> Option<f64> {
        Some(harmonic_f1(self.precision(j)?, self.recall(j)?))
    }

    fn specificity(&self, j: usize) -> Option<f64> {
        let mut tn = 0.0;
        let mut negatives = 0.0;
        for u in (0..self.m).filter(|&u| u != j) {
            for v in 0..self.m {
                negatives += self.p(u, v);
                if v != j {
                    tn += self.p(u, v);
                }
            }
        }
        (negatives > 0.0).then(|| tn / negatives)
    }

    fn macro_mean(&self, f: impl Fn(&Self, usize) -> Option<f64>) -> Option<f64> {
        let mut sum = 0.0;
        for j in 0..self.m {
            sum += f(self, j)?;
        }
        Some(sum / self.m as f64)
    }

    fn value(&self, id: MetricId) -> Option<f64> {
        match id {
            MetricId::Accuracy => Some((0..self.m).map(|j| self.p(j, j)).sum()),
            MetricId::MacroF1 => self.macro_mean(Self::f1),
            MetricId::MacroPrecision => self.macro_mean(Self::precision),
            MetricId::MacroRecall => self.macro_mean(Self::recall),
            MetricId::MacroSpecificity => self.macro_mean(Self::specificity),
            MetricId::Precision(j) => self.precision(j),
            MetricId::Recall(j) => self.recall(j),
            MetricId::F1(j) => self.f1(j),
            MetricId::Specificity(j) => self.specificity(j),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateOptions {
    pub samples: usize,
    pub mass: f64,
    pub workers: usize,
    /// Keep the per-metric sample vectors in the result.
    pub keep_samples: bool,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self {
            samples: 100_000,
            mass: 0.95,
            workers: 1,
            keep_samples: false,
        }
    }
}

/// Monte Carlo summary of one metric's posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    pub metric: MetricId,
    pub mean: f64,
    pub std: f64,
    /// `std / sqrt(sample_count)`.
    pub mc_error: f64,
    pub hdi: Interval,
    /// Draws contributing to the summary.
    pub sample_count: usize,
    /// Draws in which the metric was undefined.
    pub excluded: usize,
    pub warning: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Estimation {
    pub summaries: Vec<PosteriorSummary>,
    /// Defined draws per metric in draw order, when requested.
    pub samples: Option<Vec<Vec<f64>>>,
}

fn run_block(
    model: &PosteriorModel,
    metrics: &[MetricId],
    seed: u64,
    block: usize,
    len: usize,
) -> Vec<Vec<f64>> {
    let mut stream = RandomStream::new(seed, block as u64);
    let m = model.num_classes();
    let mut draw = ParameterDraw {
        mu: vec![0.0; m],
        theta: vec![0.0; m * m],
    };
    let mut out = vec![Vec::with_capacity(len); metrics.len()];
    for _ in 0..len {
        model.draw_into(&mut stream, &mut draw);
        let eval = MetricEvaluator::new(&draw);
        for (col, &id) in out.iter_mut().zip(metrics) {
            col.push(eval.value(id).unwrap_or(f64::NAN));
        }
    }
    out
}

/// Draws `options.samples` joint parameter sets and summarizes each metric.
///
/// Draws are generated in fixed-size blocks, block `b` using substream
/// `(seed, b)`, and concatenated in block order, so the output is identical
/// for any worker count.
pub fn estimate(
    model: &PosteriorModel,
    metrics: &[MetricId],
    seed: u64,
    options: &EstimateOptions,
) -> Result<Estimation> {
    let s = options.samples;
    if s < 1000 {
        return param(format!("need at least 1000 samples, got {s}"));
    }
    if !(options.mass > 0.0 && options.mass < 1.0) {
        return param(format!("HDI mass must be in (0, 1), got {}", options.mass));
    }
    let m = model.num_classes();
    if let Some(bad) = metrics.iter().find(|id| id.class().is_some_and(|j| j >= m)) {
        return param(format!("metric {bad} refers to a class outside 0..{m}"));
    }

    let n_blocks = s.div_ceil(BLOCK_SIZE);
    let block_len = |b: usize| BLOCK_SIZE.min(s - b * BLOCK_SIZE);
    let workers = options.workers.clamp(1, n_blocks);
    let mut blocks: Vec<Option<Vec<Vec<f64>>>> = vec![None; n_blocks];
    if workers == 1 {
        for (b, slot) in blocks.iter_mut().enumerate() {
            *slot = Some(run_block(model, metrics, seed, b, block_len(b)));
        }
    } else {
        let results = thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    scope.spawn(move || {
                        (w..n_blocks)
                            .step_by(workers)
                            .map(|b| (b, run_block(model, metrics, seed, b, block_len(b))))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("sampling worker panicked"))
                .collect::<Vec<_>>()
        });
        for (b, block) in results.into_iter().flatten() {
            blocks[b] = Some(block);
        }
    }

    let mut columns: Vec<Vec<f64>> = vec![Vec::with_capacity(s); metrics.len()];
    for block in blocks
        .into_iter()
        .map(|b| b.expect("every block is sampled"))
    {
        for (col, part) in columns.iter_mut().zip(block) {
            col.extend(part.into_iter().filter(|x| !x.is_nan()));
        }
    }

    let summaries = metrics
        .iter()
        .zip(&columns)
        .map(|(&id, col)| summarize(id, col, s, options.mass))
        .collect::<Result<Vec<_>>>()?;
    Ok(Estimation {
        summaries,
        samples: options.keep_samples.then_some(columns),
    })
}

fn summarize(
    metric: MetricId,
    samples: &[f64],
    drawn: usize,
    mass: f64,
) -> Result<PosteriorSummary> {
    let n = samples.len();
    if n < 100 {
        return param(format!("metric {metric} is undefined in almost every draw"));
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    let std = var.sqrt();
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let excluded = drawn - n;
    let warning = (excluded as f64 > EXCLUSION_WARN_FRACTION * drawn as f64)
        .then(|| format!("{metric}: {excluded} of {drawn} draws excluded (undefined denominator)"));
    Ok(PosteriorSummary {
        metric,
        mean,
        std,
        mc_error: std / (n as f64).sqrt(),
        hdi: hdi(&sorted, mass)?,
        sample_count: n,
        excluded,
        warning,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramBin {
    pub low: f64,
    pub high: f64,
    pub count: usize,
}

/// Equal-width histogram over the sample range.
pub fn histogram(samples: &[f64], bins: usize) -> Result<Vec<HistogramBin>> {
    if bins == 0 || samples.is_empty() {
        return param("histogram needs samples and at least one bin");
    }
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(lo.is_finite() && hi.is_finite()) {
        return param("histogram samples must be finite");
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &x in samples {
        let i = if width > 0.0 {
            (((x - lo) / width) as usize).min(bins - 1)
        } else {
            0
        };
        counts[i] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| HistogramBin {
            low: lo + width * i as f64,
            high: if i + 1 == bins {
                hi
            } else {
                lo + width * (i + 1) as f64
            },
            count,
        })
        .collect())
}
