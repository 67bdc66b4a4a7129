//! Posterior summaries of a chain and the selection rule `ĝ_j < τ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::ChainTrace;

/// Default cutoff on the posterior mean of `g_j`. A convention borrowed from
/// the median-probability rule on inclusion probabilities.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub g_mean: Vec<f64>,
    pub g_median: Vec<f64>,
    /// `1 − g_mean`, comparable to an inclusion probability.
    pub inclusion_score: Vec<f64>,
    pub beta_mean: Vec<f64>,
    pub selected: Vec<bool>,
    pub threshold: f64,
    /// Number of post-burn-in draws summarized.
    pub draws: usize,
}

impl PosteriorSummary {
    pub fn p(&self) -> usize {
        self.g_mean.len()
    }

    /// 0-based indices of the selected predictors.
    pub fn selected_indices(&self) -> Vec<usize> {
        self.selected
            .iter()
            .enumerate()
            .filter_map(|(j, &s)| s.then_some(j))
            .collect()
    }

    /// Re-applies the selection rule at a different threshold.
    pub fn with_threshold(&self, threshold: f64) -> Result<Self> {
        check_threshold(threshold)?;
        Ok(Self {
            selected: self.g_mean.iter().map(|&g| g < threshold).collect(),
            threshold,
            ..self.clone()
        })
    }
}

fn check_threshold(threshold: f64) -> Result<()> {
    if threshold > 0.0 && threshold < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "threshold {threshold} must lie in (0, 1)"
        )))
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Median with midpoint interpolation for even counts.
pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Summarizes the post-burn-in rows of one or more chains, pooled.
pub fn summarize_pooled(traces: &[&ChainTrace], threshold: f64) -> Result<PosteriorSummary> {
    check_threshold(threshold)?;
    let p = traces.first().map_or(0, |t| t.p());
    let mut g_cols = vec![Vec::new(); p];
    let mut beta_cols = vec![Vec::new(); p];
    for tr in traces {
        for j in 0..p {
            g_cols[j].extend(tr.g_column(j));
            beta_cols[j].extend(tr.beta_column(j));
        }
    }
    let draws = g_cols.first().map_or(0, Vec::len);
    if draws == 0 {
        return Err(Error::EmptyTrace);
    }
    let g_mean: Vec<f64> = g_cols.iter().map(|c| mean(c)).collect();
    Ok(PosteriorSummary {
        g_median: g_cols.iter().map(|c| median(c)).collect(),
        inclusion_score: g_mean.iter().map(|g| 1.0 - g).collect(),
        beta_mean: beta_cols.iter().map(|c| mean(c)).collect(),
        selected: g_mean.iter().map(|&g| g < threshold).collect(),
        g_mean,
        threshold,
        draws,
    })
}

pub fn summarize(trace: &ChainTrace, threshold: f64) -> Result<PosteriorSummary> {
    summarize_pooled(&[trace], threshold)
}

/// Posterior mean of β over the post-burn-in rows.
pub fn shrinkage_estimate(trace: &ChainTrace) -> Result<Vec<f64>> {
    if trace.kept_len() == 0 {
        return Err(Error::EmptyTrace);
    }
    Ok((0..trace.p())
        .map(|j| mean(&trace.beta_column(j)))
        .collect())
}
