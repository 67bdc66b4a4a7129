//! Report formats written by the command-line tool.
//!
//! Reports carry no timestamps or timings, so identical inputs give
//! byte-identical files.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Dataset, Hyperparameters, OlsFit};
use crate::oracle::{GridOracleResult, PairGrid};
use crate::sampler::{acceptance_rate, ChainTrace, SamplerConfig};
use crate::selection::{summarize, summarize_pooled, PosteriorSummary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableReport {
    pub name: String,
    pub g_mean: f64,
    pub g_median: f64,
    pub inclusion_score: f64,
    pub beta_mean: f64,
    pub beta_ols: f64,
    pub selected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub chain: u64,
    pub acceptance_rate: f64,
    pub variables: Vec<VariableReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub seed: u64,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub chains: usize,
    pub threshold: f64,
    pub hyperparameters: Hyperparameters,
    /// Mean acceptance rate over chains.
    pub acceptance_rate: f64,
    pub draws: usize,
    /// Pooled over all chains.
    pub variables: Vec<VariableReport>,
    pub selected: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_chain: Vec<ChainReport>,
}

fn variables(names: &[String], s: &PosteriorSummary, ols: &OlsFit) -> Vec<VariableReport> {
    (0..s.p())
        .map(|j| VariableReport {
            name: names[j].clone(),
            g_mean: s.g_mean[j],
            g_median: s.g_median[j],
            inclusion_score: s.inclusion_score[j],
            beta_mean: s.beta_mean[j],
            beta_ols: ols.beta_hat[j],
            selected: s.selected[j],
        })
        .collect()
}

impl FitReport {
    pub fn build(
        dataset: &Dataset,
        ols: &OlsFit,
        hyper: &Hyperparameters,
        config: &SamplerConfig,
        traces: &[ChainTrace],
        threshold: f64,
    ) -> Result<Self> {
        if traces.is_empty() {
            return Err(Error::EmptyTrace);
        }
        let refs: Vec<&ChainTrace> = traces.iter().collect();
        let pooled = summarize_pooled(&refs, threshold)?;
        let rates = traces
            .iter()
            .map(acceptance_rate)
            .collect::<Result<Vec<_>>>()?;
        let per_chain = if traces.len() > 1 {
            traces
                .iter()
                .zip(&rates)
                .map(|(t, &r)| {
                    Ok(ChainReport {
                        chain: t.chain,
                        acceptance_rate: r,
                        variables: variables(dataset.names(), &summarize(t, threshold)?, ols),
                    })
                })
                .collect::<Result<Vec<_>>>()?
        } else {
            Vec::new()
        };
        Ok(Self {
            seed: config.seed,
            iterations: config.iterations,
            burn_in: config.burn_in,
            thin: config.thin,
            chains: traces.len(),
            threshold,
            hyperparameters: hyper.clone(),
            acceptance_rate: rates.iter().sum::<f64>() / rates.len() as f64,
            draws: pooled.draws,
            selected: pooled
                .selected_indices()
                .into_iter()
                .map(|j| dataset.names()[j].clone())
                .collect(),
            variables: variables(dataset.names(), &pooled, ols),
            per_chain,
        })
    }
}

/// Summary of a trace file, without the dataset that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummaryReport {
    pub burn_in: usize,
    pub threshold: f64,
    pub acceptance_rate: f64,
    pub draws: usize,
    pub variables: Vec<TraceVariable>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceVariable {
    pub name: String,
    pub g_mean: f64,
    pub g_median: f64,
    pub inclusion_score: f64,
    pub beta_mean: f64,
    pub selected: bool,
}

impl TraceSummaryReport {
    pub fn build(trace: &ChainTrace, threshold: f64) -> Result<Self> {
        let s = summarize(trace, threshold)?;
        Ok(Self {
            burn_in: trace.burn_in,
            threshold,
            acceptance_rate: acceptance_rate(trace)?,
            draws: s.draws,
            variables: (0..s.p())
                .map(|j| TraceVariable {
                    name: format!("x{}", j + 1),
                    g_mean: s.g_mean[j],
                    g_median: s.g_median[j],
                    inclusion_score: s.inclusion_score[j],
                    beta_mean: s.beta_mean[j],
                    selected: s.selected[j],
                })
                .collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipVariable {
    pub name: String,
    pub g_mean: f64,
    pub one_minus_g_mean: f64,
    pub g_median: f64,
    pub one_minus_g_median: f64,
    pub pip: f64,
    pub beta_mean: f64,
    pub beta_ols: f64,
    pub selected_kg: bool,
    pub selected_pip: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparePipReport {
    pub seed: u64,
    pub iterations: usize,
    pub threshold: f64,
    pub variables: Vec<PipVariable>,
    /// Whether both methods select the same set.
    pub agree: bool,
}

impl ComparePipReport {
    pub fn build(
        dataset: &Dataset,
        ols: &OlsFit,
        summary: &PosteriorSummary,
        pip: &[f64],
        seed: u64,
        iterations: usize,
    ) -> Self {
        let variables: Vec<PipVariable> = (0..summary.p())
            .map(|j| PipVariable {
                name: dataset.names()[j].clone(),
                g_mean: summary.g_mean[j],
                one_minus_g_mean: 1.0 - summary.g_mean[j],
                g_median: summary.g_median[j],
                one_minus_g_median: 1.0 - summary.g_median[j],
                pip: pip[j],
                beta_mean: summary.beta_mean[j],
                beta_ols: ols.beta_hat[j],
                selected_kg: summary.selected[j],
                selected_pip: pip[j] > 0.5,
            })
            .collect();
        let agree = variables.iter().all(|v| v.selected_kg == v.selected_pip);
        Self {
            seed,
            iterations,
            threshold: summary.threshold,
            variables,
            agree,
        }
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| Error::Format(e.to_string()))
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    std::fs::write(path, to_json(value)?).map_err(|e| Error::io(path, e))
}

/// `g,density` rows of a normalized one-dimensional grid.
pub fn write_grid_csv<W: Write>(grid: &GridOracleResult, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["g", "density"]).map_err(csv_err)?;
    for (g, d) in grid.grid.iter().zip(&grid.density) {
        w.write_record([g.to_string(), d.to_string()])
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Format(e.to_string()))
}

/// `g_j,g_k,log_density` rows in row-major order.
pub fn write_pair_csv<W: Write>(grid: &PairGrid, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let hj = format!("g_{}", grid.j + 1);
    let hk = format!("g_{}", grid.k + 1);
    w.write_record([hj.as_str(), hk.as_str(), "log_density"])
        .map_err(csv_err)?;
    let m = grid.m();
    for r in 0..m {
        for c in 0..m {
            w.write_record([
                grid.values[r].to_string(),
                grid.values[c].to_string(),
                grid.at(r, c).to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| Error::Format(e.to_string()))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ols_fit, ModelState};
    use crate::sampler::run_chain;
    use crate::simgen::gen_sim_p2;

    #[test]
    fn fit_report_is_deterministic() {
        let (ds, _) = gen_sim_p2(11, 30).unwrap();
        let ols = ols_fit(&ds).unwrap();
        let hyper = Hyperparameters::default();
        let cfg = SamplerConfig::new(300, 5);
        let make = || {
            let tr = run_chain(&ds, &hyper, &cfg, &ModelState::default_init(&ols)).unwrap();
            to_json(&FitReport::build(&ds, &ols, &hyper, &cfg, &[tr], 0.5).unwrap()).unwrap()
        };
        let a = make();
        assert_eq!(a, make());
        let parsed: FitReport = serde_json::from_str(&a).unwrap();
        assert_eq!(parsed.variables.len(), 2);
        assert_eq!(parsed.draws, 270);
        assert!(parsed.per_chain.is_empty());
    }
}
