//! Participant-level bootstrap: mean, percentile confidence interval, and a
//! two-sided p-value for the paired difference against a reference source.

use super::MetricError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const DEFAULT_RESAMPLES: usize = 2000;
pub const MIN_RESAMPLES: usize = 100;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BootstrapSummary {
    pub n: usize,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Two-sided percentile test of the paired difference against the
    /// reference values, when a reference was supplied.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_value: Option<f64>,
}

/// Resamples participants with replacement. `paired_reference`, when given,
/// must align index-by-index with `values` (same participants in the same
/// order); the p-value tests whether the mean paired difference is zero.
pub fn bootstrap_summary(
    values: &[f64],
    resamples: usize,
    seed: u64,
    paired_reference: Option<&[f64]>,
) -> Result<BootstrapSummary, MetricError> {
    if values.len() < 2 {
        return Err(MetricError::TooFewParticipants {
            needed: 2,
            got: values.len(),
        });
    }
    if resamples < MIN_RESAMPLES {
        return Err(MetricError::InvalidParameter(format!(
            "bootstrap needs at least {MIN_RESAMPLES} resamples, got {resamples}"
        )));
    }
    if let Some(reference) = paired_reference {
        if reference.len() != values.len() {
            return Err(MetricError::InvalidParameter(format!(
                "paired reference has {} values, expected {}",
                reference.len(),
                values.len()
            )));
        }
    }

    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut means = Vec::with_capacity(resamples);
    let mut diff_le = 0usize;
    let mut diff_ge = 0usize;
    for _ in 0..resamples {
        let mut sum = 0.0;
        let mut diff_sum = 0.0;
        for _ in 0..n {
            let idx = rng.random_range(0..n);
            sum += values[idx];
            if let Some(reference) = paired_reference {
                diff_sum += values[idx] - reference[idx];
            }
        }
        means.push(sum / n as f64);
        if paired_reference.is_some() {
            let d = diff_sum / n as f64;
            if d <= 0.0 {
                diff_le += 1;
            }
            if d >= 0.0 {
                diff_ge += 1;
            }
        }
    }
    means.sort_by(f64::total_cmp);
    let ci_low = percentile(&means, 2.5).min(mean);
    let ci_high = percentile(&means, 97.5).max(mean);
    let p_value = paired_reference.map(|_| {
        // Add-one smoothing keeps the p-value strictly positive at finite B.
        let lo = (diff_le + 1) as f64 / (resamples + 1) as f64;
        let hi = (diff_ge + 1) as f64 / (resamples + 1) as f64;
        (2.0 * lo.min(hi)).min(1.0)
    });
    Ok(BootstrapSummary {
        n,
        mean,
        ci_low,
        ci_high,
        p_value,
    })
}

/// Linear-interpolation percentile of pre-sorted data (the common "type 7"
/// definition), `q` in percent.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = q / 100.0 * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}
