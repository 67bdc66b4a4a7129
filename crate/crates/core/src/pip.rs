//! Indicator-based baseline: stochastic search variable selection under
//! Zellner's g-prior with a Jeffreys prior on σ² and no intercept.
//!
//! For a model `γ` with `q` active columns,
//! `p(y | γ) ∝ (1+g)^(−q/2) · (yᵀy − g/(1+g) · yᵀP_γ y)^(−n/2)`,
//! where `P_γ` projects onto the active columns. The constant is shared by
//! every `γ`, so ratios between models are exact Bayes factors.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ols_fit, Dataset, OlsFit};
use crate::rng::{stream, Block};

/// Largest p accepted by the Gibbs baseline.
pub const MAX_GIBBS_P: usize = 25;
/// Largest p accepted by exhaustive enumeration.
pub const MAX_ENUMERATION_P: usize = 15;

#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorState {
    pub gamma: Vec<bool>,
    pub log_marginal: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipConfig {
    /// Zellner scale; `None` means the unit-information choice `g = n`.
    pub g_scale: Option<f64>,
    pub prior_inclusion: f64,
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
}

impl PipConfig {
    pub fn new(iterations: usize, seed: u64) -> Self {
        Self {
            g_scale: None,
            prior_inclusion: 0.5,
            iterations,
            burn_in: iterations / 10,
            seed,
        }
    }

    fn g_scale_for(&self, n: usize) -> f64 {
        self.g_scale.unwrap_or(n as f64)
    }

    fn validate(&self, p: usize) -> Result<()> {
        if p > MAX_GIBBS_P {
            return Err(Error::InvalidConfig(format!(
                "SSVS baseline supports p <= {MAX_GIBBS_P}, got {p}"
            )));
        }
        if self.iterations == 0 || self.burn_in >= self.iterations {
            return Err(Error::InvalidConfig(format!(
                "need 0 <= burn-in ({}) < iterations ({})",
                self.burn_in, self.iterations
            )));
        }
        if !(self.prior_inclusion > 0.0 && self.prior_inclusion < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "prior inclusion {} outside (0, 1)",
                self.prior_inclusion
            )));
        }
        if let Some(g) = self.g_scale {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "g scale {g} must be positive"
                )));
            }
        }
        Ok(())
    }
}

fn active(gamma: &[bool]) -> Vec<usize> {
    gamma
        .iter()
        .enumerate()
        .filter_map(|(j, &on)| on.then_some(j))
        .collect()
}

/// `log p(y | γ)` up to a constant shared by all γ, from sufficient statistics.
pub fn log_marginal_from_fit(ols: &OlsFit, gamma: &[bool], g_scale: f64) -> Result<f64> {
    if gamma.len() != ols.p() {
        return Err(Error::ShapeMismatch(format!(
            "gamma has length {} but p = {}",
            gamma.len(),
            ols.p()
        )));
    }
    if !(g_scale > 0.0 && g_scale.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "g scale {g_scale} must be positive"
        )));
    }
    let n = ols.n as f64;
    let idx = active(gamma);
    if idx.is_empty() {
        return Ok(-0.5 * n * ols.yty.ln());
    }
    let q = idx.len();
    let sub = DMatrix::from_fn(q, q, |r, c| ols.xtx[(idx[r], idx[c])]);
    let rhs = DVector::from_fn(q, |r, _| ols.xty[idx[r]]);
    let chol = Cholesky::new(sub).ok_or(Error::RankDeficient { rcond: 0.0 })?;
    let explained = rhs.dot(&chol.solve(&rhs));
    let shrink = g_scale / (1.0 + g_scale);
    let resid = ols.yty - shrink * explained;
    if resid.is_nan() || resid <= 0.0 {
        return Err(Error::RankDeficient { rcond: 0.0 });
    }
    Ok(-0.5 * q as f64 * g_scale.ln_1p() - 0.5 * n * resid.ln())
}

/// `log p(y | γ)` for a dataset.
pub fn log_marginal_gamma(dataset: &Dataset, gamma: &[bool], g_scale: f64) -> Result<f64> {
    let ols = ols_fit(dataset)?;
    log_marginal_from_fit(&ols, gamma, g_scale)
}

fn log_prior(gamma: &[bool], prior_inclusion: f64) -> f64 {
    let q = gamma.iter().filter(|&&on| on).count() as f64;
    q * prior_inclusion.ln() + (gamma.len() as f64 - q) * (-prior_inclusion).ln_1p()
}

/// Gibbs sampler over γ; returns posterior inclusion probabilities.
pub fn ssvs_pip(dataset: &Dataset, config: &PipConfig) -> Result<Vec<f64>> {
    let ols = ols_fit(dataset)?;
    ssvs_pip_with_fit(&ols, config)
}

pub fn ssvs_pip_with_fit(ols: &OlsFit, config: &PipConfig) -> Result<Vec<f64>> {
    let p = ols.p();
    config.validate(p)?;
    let g_scale = config.g_scale_for(ols.n);
    let log_odds_prior = config.prior_inclusion.ln() - (-config.prior_inclusion).ln_1p();
    let mut rng = stream(config.seed, 0, Block::Indicator);

    let mut state = IndicatorState {
        gamma: vec![false; p],
        log_marginal: log_marginal_from_fit(ols, &vec![false; p], g_scale)?,
    };
    let mut counts = vec![0usize; p];
    let mut kept = 0usize;
    for t in 0..config.iterations {
        for j in 0..p {
            let mut flipped = state.gamma.clone();
            flipped[j] = !flipped[j];
            let lm_flipped = log_marginal_from_fit(ols, &flipped, g_scale)?;
            let (lm_in, lm_out) = if state.gamma[j] {
                (state.log_marginal, lm_flipped)
            } else {
                (lm_flipped, state.log_marginal)
            };
            let log_odds = lm_in - lm_out + log_odds_prior;
            let prob_in = 1.0 / (1.0 + (-log_odds).exp());
            let include = rng.random::<f64>() < prob_in;
            if include != state.gamma[j] {
                state.gamma = flipped;
                state.log_marginal = lm_flipped;
            }
        }
        if t >= config.burn_in {
            kept += 1;
            for (c, &on) in counts.iter_mut().zip(&state.gamma) {
                *c += on as usize;
            }
        }
    }
    Ok(counts.iter().map(|&c| c as f64 / kept as f64).collect())
}

/// Exact inclusion probabilities by enumerating all `2^p` models.
pub fn exact_pip(ols: &OlsFit, g_scale: f64, prior_inclusion: f64) -> Result<Vec<f64>> {
    let p = ols.p();
    if p > MAX_ENUMERATION_P {
        return Err(Error::InvalidConfig(format!(
            "enumeration supports p <= {MAX_ENUMERATION_P}, got {p}"
        )));
    }
    let mut log_post = Vec::with_capacity(1 << p);
    for mask in 0u32..(1 << p) {
        let gamma: Vec<bool> = (0..p).map(|j| mask >> j & 1 == 1).collect();
        log_post.push(
            log_marginal_from_fit(ols, &gamma, g_scale)? + log_prior(&gamma, prior_inclusion),
        );
    }
    let max = log_post.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = log_post.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    Ok((0..p)
        .map(|j| {
            weights
                .iter()
                .enumerate()
                .filter(|(mask, _)| mask >> j & 1 == 1)
                .map(|(_, w)| w)
                .sum::<f64>()
                / total
        })
        .collect())
}
