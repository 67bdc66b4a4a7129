//! Seeded generators for the two simulation designs and for general
//! synthetic linear models.
//!
//! Draw order is fixed: predictors column by column, then the noise vector,
//! then (only when equicorrelation is requested) one shared factor per row.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{read_dataset_file, write_dataset_file, ResponseColumn};
use crate::model::Dataset;

pub const DEFAULT_N: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Design {
    pub true_beta: Vec<f64>,
    pub noise_sd: f64,
    /// Common correlation between predictors, in `[0, 1)`.
    pub equicorrelation: f64,
}

impl Design {
    pub fn new(true_beta: Vec<f64>) -> Self {
        Self {
            true_beta,
            noise_sd: 1.0,
            equicorrelation: 0.0,
        }
    }

    /// `y = 2 x₁ + ε`, two predictors.
    pub fn p2() -> Self {
        Self::new(vec![2.0, 0.0])
    }

    /// `y = 2 (x₁ + x₂ + x₈) + ε`, ten predictors.
    pub fn p10() -> Self {
        let mut beta = vec![0.0; 10];
        for j in [0, 1, 7] {
            beta[j] = 2.0;
        }
        Self::new(beta)
    }

    pub fn p(&self) -> usize {
        self.true_beta.len()
    }

    pub fn generate(&self, seed: u64, n: usize) -> Result<Dataset> {
        let p = self.p();
        if p == 0 {
            return Err(Error::InvalidConfig(
                "design needs at least one predictor".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.equicorrelation) {
            return Err(Error::InvalidConfig(format!(
                "equicorrelation {} outside [0, 1)",
                self.equicorrelation
            )));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::InvalidConfig(format!("noise sd {}", self.noise_sd)));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = DMatrix::zeros(n, p);
        for j in 0..p {
            for i in 0..n {
                x[(i, j)] = StandardNormal.sample(&mut rng);
            }
        }
        let noise: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        if self.equicorrelation > 0.0 {
            let rho: f64 = self.equicorrelation;
            for i in 0..n {
                let shared: f64 = StandardNormal.sample(&mut rng);
                for j in 0..p {
                    x[(i, j)] = (1.0 - rho).sqrt() * x[(i, j)] + rho.sqrt() * shared;
                }
            }
        }
        let beta = DVector::from_column_slice(&self.true_beta);
        let y = &x * beta + DVector::from_vec(noise) * self.noise_sd;
        Dataset::new(x, y, None)
    }
}

/// Manifest written beside a generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub design: String,
    pub seed: u64,
    pub n: usize,
    pub p: usize,
    pub true_beta: Vec<f64>,
    pub noise_sd: f64,
    pub equicorrelation: f64,
}

impl Manifest {
    pub fn new(design_name: &str, seed: u64, n: usize, design: &Design) -> Self {
        Self {
            design: design_name.to_string(),
            seed,
            n,
            p: design.p(),
            true_beta: design.true_beta.clone(),
            noise_sd: design.noise_sd,
            equicorrelation: design.equicorrelation,
        }
    }
}

pub fn write_manifest(manifest: &Manifest, path: &Path) -> Result<()> {
    let json = serde_json::to_string_pretty(manifest).map_err(|e| Error::Format(e.to_string()))?;
    std::fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
}

pub fn gen_sim_p2(seed: u64, n: usize) -> Result<(Dataset, Vec<f64>)> {
    if n < 3 {
        return Err(Error::InvalidConfig(format!(
            "p = 2 design needs n >= 3, got {n}"
        )));
    }
    let design = Design::p2();
    Ok((design.generate(seed, n)?, design.true_beta))
}

pub fn gen_sim_p10(seed: u64, n: usize) -> Result<(Dataset, Vec<f64>)> {
    if n <= 10 {
        return Err(Error::InvalidConfig(format!(
            "p = 10 design needs n > 10, got {n}"
        )));
    }
    let design = Design::p10();
    Ok((design.generate(seed, n)?, design.true_beta))
}

/// Writes the dataset to `path` and reads it back.
pub fn csv_roundtrip(dataset: &Dataset, path: &Path) -> Result<Dataset> {
    write_dataset_file(dataset, path)?;
    read_dataset_file(path, &ResponseColumn::Name("y".into()))
}
