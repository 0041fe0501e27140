//! Seeded simulation of the exponential loss model.
//!
//! Losses are drawn by inverse CDF, `X = -R ln U`, with `U` built from the
//! top 53 bits of a ChaCha8 stream (`rand_chacha::ChaCha8Rng`, seeded with
//! `seed_from_u64(seed)`). Batch `b` reads stream number `b` of that
//! generator, so the concatenated sample stream and every estimate are
//! bit-identical whatever the number of worker threads.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{invalid, Result};
use crate::model::{check_coverage, UserRiskProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(rename = "samples")]
    pub sample_count: usize,
    pub seed: u64,
    #[serde(rename = "batches", default = "default_batches")]
    pub batch_count: usize,
}

fn default_batches() -> usize {
    SimConfig::DEFAULT_BATCHES
}

impl SimConfig {
    pub const DEFAULT_BATCHES: usize = 50;
    pub const DEFAULT_SAMPLES: usize = 1_000_000;

    pub fn new(sample_count: usize, seed: u64, batch_count: usize) -> Result<Self> {
        let config = Self {
            sample_count,
            seed,
            batch_count,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_count < 2 {
            return Err(invalid(
                "sim.batches",
                format!("need at least 2, got {}", self.batch_count),
            ));
        }
        if self.sample_count < self.batch_count {
            return Err(invalid(
                "sim.samples",
                format!(
                    "need at least as many samples as batches ({}), got {}",
                    self.batch_count, self.sample_count
                ),
            ));
        }
        Ok(())
    }

    fn batch_len(&self, b: usize) -> usize {
        let base = self.sample_count / self.batch_count;
        base + usize::from(b < self.sample_count % self.batch_count)
    }
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            sample_count: Self::DEFAULT_SAMPLES,
            seed: 42,
            batch_count: Self::DEFAULT_BATCHES,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithCI {
    pub point: f64,
    /// 95% half-width from batch means.
    pub half_width: f64,
    pub sample_count: usize,
}

impl EstimateWithCI {
    pub fn covers(&self, value: f64) -> bool {
        (self.point - value).abs() <= self.half_width
    }

    fn scaled(&self, factor: f64) -> Self {
        Self {
            point: factor * self.point,
            half_width: factor.abs() * self.half_width,
            sample_count: self.sample_count,
        }
    }
}

/// Uniform on the open interval `(0, 1)`.
#[inline]
fn open_unit(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

fn batch_rng(seed: u64, batch: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch as u64);
    rng
}

fn check_risk(risk: f64) -> Result<()> {
    if risk.is_finite() && risk >= 0.0 {
        Ok(())
    } else {
        Err(invalid(
            "risk",
            format!("must be finite and >= 0, got {risk}"),
        ))
    }
}

/// Deterministic stream of `config.sample_count` exponential losses with
/// mean `risk`. Zero risk yields a stream of zeros.
pub fn sample_losses(risk: f64, config: &SimConfig) -> Result<impl Iterator<Item = f64>> {
    check_risk(risk)?;
    config.validate()?;
    let config = *config;
    Ok((0..config.batch_count).flat_map(move |b| {
        let mut rng = batch_rng(config.seed, b);
        (0..config.batch_len(b)).map(move |_| -risk * open_unit(&mut rng).ln())
    }))
}

/// Sum of `f(X)` over each batch.
fn batch_sums(risk: f64, config: &SimConfig, f: impl Fn(f64) -> f64 + Sync) -> Vec<f64> {
    let run = |b: usize| {
        let mut rng = batch_rng(config.seed, b);
        let mut sum = 0.0;
        for _ in 0..config.batch_len(b) {
            sum += f(-risk * open_unit(&mut rng).ln());
        }
        sum
    };
    #[cfg(feature = "parallel")]
    return (0..config.batch_count).into_par_iter().map(run).collect();
    #[cfg(not(feature = "parallel"))]
    return (0..config.batch_count).map(run).collect();
}

fn batch_means_estimate(sums: &[f64], config: &SimConfig) -> EstimateWithCI {
    let b = sums.len();
    let total: f64 = sums.iter().sum();
    let point = total / config.sample_count as f64;
    let means: Vec<f64> = sums
        .iter()
        .enumerate()
        .map(|(i, s)| s / config.batch_len(i) as f64)
        .collect();
    let grand = means.iter().sum::<f64>() / b as f64;
    let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (b - 1) as f64;
    let quantile = StudentsT::new(0.0, 1.0, (b - 1) as f64)
        .expect("degrees of freedom are positive")
        .inverse_cdf(0.975);
    EstimateWithCI {
        point,
        half_width: quantile * (var / b as f64).sqrt(),
        sample_count: config.sample_count,
    }
}

/// Estimate of `E[f(X)]` with a batch-means confidence interval.
pub fn estimate_mean(
    risk: f64,
    config: &SimConfig,
    f: impl Fn(f64) -> f64 + Sync,
) -> Result<EstimateWithCI> {
    check_risk(risk)?;
    config.validate()?;
    Ok(batch_means_estimate(&batch_sums(risk, config, f), config))
}

/// Empirical `E(X)`, `E(ξ) = E((1-s)X)` and `E(sX)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossAccounting {
    pub direct: EstimateWithCI,
    pub effective: EstimateWithCI,
    pub payout: EstimateWithCI,
}

/// The three estimates share one sample stream, so effective loss and
/// payout are exactly `(1-s)` and `s` times the direct-loss estimate.
pub fn estimate_loss_accounting(
    risk: f64,
    coverage: f64,
    config: &SimConfig,
) -> Result<LossAccounting> {
    check_coverage(coverage)?;
    let direct = estimate_mean(risk, config, |x| x)?;
    Ok(LossAccounting {
        direct,
        effective: direct.scaled(1.0 - coverage),
        payout: direct.scaled(coverage),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentRegime {
    /// `2tR < 1`: finite variance, the interval is meaningful.
    FiniteVariance,
    /// `tR < 1 ≤ 2tR`: the mean exists but the estimator has infinite variance.
    VarianceUnbounded,
    /// `tR ≥ 1`: the expectation itself is infinite.
    Divergent,
}

impl MomentRegime {
    pub fn classify(exponent: f64, risk: f64) -> Self {
        let tr = exponent * risk;
        if tr >= 1.0 {
            MomentRegime::Divergent
        } else if 2.0 * tr >= 1.0 {
            MomentRegime::VarianceUnbounded
        } else {
            MomentRegime::FiniteVariance
        }
    }

    pub fn advisory(self) -> Option<&'static str> {
        match self {
            MomentRegime::FiniteVariance => None,
            MomentRegime::VarianceUnbounded => Some(
                "variance-unbounded: 2*gamma*(1-s)*R >= 1, the mean exists but the confidence interval is not valid",
            ),
            MomentRegime::Divergent => Some(
                "divergent: gamma*(1-s)*R >= 1, E[H(xi)] is infinite and the estimate does not converge",
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossFactorEstimate {
    pub estimate: EstimateWithCI,
    pub regime: MomentRegime,
}

/// Empirical `E[e^{tX}]`; `t = 0` gives exactly 1.
pub fn estimate_exponential_moment(
    risk: f64,
    exponent: f64,
    config: &SimConfig,
) -> Result<LossFactorEstimate> {
    if !(exponent.is_finite() && exponent >= 0.0) {
        return Err(invalid(
            "exponent",
            format!("must be finite and >= 0, got {exponent}"),
        ));
    }
    Ok(LossFactorEstimate {
        estimate: estimate_mean(risk, config, |x| (exponent * x).exp())?,
        regime: MomentRegime::classify(exponent, risk),
    })
}

/// Empirical `E[H(ξ)] = E[e^{γ(1-s)X}]`.
pub fn estimate_loss_factor(
    risk: f64,
    profile: UserRiskProfile,
    coverage: f64,
    config: &SimConfig,
) -> Result<LossFactorEstimate> {
    check_coverage(coverage)?;
    estimate_exponential_moment(risk, profile.retained_aversion(coverage), config)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    /// `(sample count, running mean of e^{tX})` at each stage.
    pub stages: Vec<(usize, f64)>,
    /// Last stage over first stage.
    pub growth: f64,
    /// The last two stages agree to within [`STABILIZATION_TOLERANCE`].
    pub stabilized: bool,
}

pub const STABILIZATION_TOLERANCE: f64 = 0.01;

/// Default stage sizes `10^3, 10^4, ..., 10^7`.
pub fn default_stages() -> Vec<usize> {
    (3..=7).map(|k| 10usize.pow(k)).collect()
}

/// Running estimate of `E[e^{γ(1-s)X}]` on nested prefixes of one sample
/// stream. In the divergent regime the estimate keeps climbing as rarer,
/// larger losses enter the sample.
pub fn divergence_probe(
    risk: f64,
    profile: UserRiskProfile,
    coverage: f64,
    seed: u64,
    stages: &[usize],
) -> Result<DivergenceReport> {
    check_coverage(coverage)?;
    check_risk(risk)?;
    let mut stages = stages.to_vec();
    stages.sort_unstable();
    stages.dedup();
    let Some(&largest) = stages.last() else {
        return Err(invalid("stages", "need at least one stage"));
    };
    if stages[0] == 0 {
        return Err(invalid("stages", "stage sizes must be positive"));
    }
    let exponent = profile.retained_aversion(coverage);
    let config = SimConfig::new(largest.max(2), seed, 2)?;

    let mut out = Vec::with_capacity(stages.len());
    let mut next = stages.iter().peekable();
    let mut sum = 0.0;
    for (i, x) in sample_losses(risk, &config)?.take(largest).enumerate() {
        sum += (exponent * x).exp();
        if next.peek().is_some_and(|&&n| n == i + 1) {
            out.push((i + 1, sum / (i + 1) as f64));
            next.next();
        }
    }
    let first = out[0].1;
    let last = out[out.len() - 1].1;
    let stabilized = out.len() >= 2 && {
        let prev = out[out.len() - 2].1;
        ((last - prev) / prev).abs() < STABILIZATION_TOLERANCE
    };
    Ok(DivergenceReport {
        stages: out,
        growth: last / first,
        stabilized,
    })
}
