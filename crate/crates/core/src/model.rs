//! Domain types shared by every other module, plus the OLS reference fit.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reject a design when the reciprocal condition number of XᵀX falls below this.
pub const RCOND_TOLERANCE: f64 = 1e-12;

/// Observed data: an `n × p` design and a length-`n` response.
///
/// No intercept column is added and nothing is standardized unless
/// [`Dataset::standardized`] is called explicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: DVector<f64>,
    names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset, checking shapes only. Call [`Dataset::validate`]
    /// before fitting.
    pub fn new(x: DMatrix<f64>, y: DVector<f64>, names: Option<Vec<String>>) -> Result<Self> {
        if y.len() != x.nrows() {
            return Err(Error::ShapeMismatch(format!(
                "response has length {} but design has {} rows",
                y.len(),
                x.nrows()
            )));
        }
        if x.nrows() == 0 || x.ncols() == 0 {
            return Err(Error::ShapeMismatch(format!(
                "design must be non-empty, got {}x{}",
                x.nrows(),
                x.ncols()
            )));
        }
        let names = match names {
            Some(names) if names.len() != x.ncols() => {
                return Err(Error::ShapeMismatch(format!(
                    "{} names for {} predictors",
                    names.len(),
                    x.ncols()
                )))
            }
            Some(names) => names,
            None => (1..=x.ncols()).map(|j| format!("x{j}")).collect(),
        };
        Ok(Self { x, y, names })
    }

    /// Builds a dataset from row-major predictor rows.
    pub fn from_rows(rows: &[Vec<f64>], y: &[f64]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::ShapeMismatch("ragged predictor rows".into()));
        }
        let x = DMatrix::from_fn(n, p, |i, j| rows[i][j]);
        Self::new(x, DVector::from_column_slice(y), None)
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Checks finite entries and a well-conditioned Gram matrix. The
    /// sampler additionally needs `n > p`; see [`Dataset::require_overdetermined`].
    pub fn validate(&self) -> Result<&Self> {
        if self.x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("design matrix"));
        }
        if self.y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("response"));
        }
        let rcond = gram_rcond(&self.gram());
        if rcond.is_nan() || rcond < RCOND_TOLERANCE {
            return Err(Error::RankDeficient { rcond });
        }
        Ok(self)
    }

    pub fn require_overdetermined(&self) -> Result<()> {
        if self.n() <= self.p() {
            return Err(Error::TooFewRows {
                n: self.n(),
                p: self.p(),
            });
        }
        Ok(())
    }

    pub fn gram(&self) -> DMatrix<f64> {
        self.x.tr_mul(&self.x)
    }

    /// Centers every column and scales it to unit sample variance. The
    /// response is left untouched. Constant columns are only centered.
    pub fn standardized(&self) -> Self {
        let n = self.n() as f64;
        let mut x = self.x.clone();
        for mut col in x.column_iter_mut() {
            let mean = col.sum() / n;
            col.add_scalar_mut(-mean);
            let sd = (col.norm_squared() / (n - 1.0).max(1.0)).sqrt();
            if sd > 0.0 {
                col /= sd;
            }
        }
        Self {
            x,
            y: self.y.clone(),
            names: self.names.clone(),
        }
    }

    /// Returns a copy with rows reordered by `perm`.
    pub fn permute_rows(&self, perm: &[usize]) -> Self {
        let x = DMatrix::from_fn(self.n(), self.p(), |i, j| self.x[(perm[i], j)]);
        let y = DVector::from_fn(self.n(), |i, _| self.y[perm[i]]);
        Self {
            x,
            y,
            names: self.names.clone(),
        }
    }
}

fn gram_rcond(xtx: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(xtx.clone());
    let max = eig
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let min = eig
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if max <= 0.0 || !max.is_finite() {
        0.0
    } else {
        min / max
    }
}

/// Prior hyperparameters and Metropolis proposal shapes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    /// Beta(a, b) prior shapes for each `g_j`.
    pub a: f64,
    pub b: f64,
    /// IG(alpha, theta) prior on κ.
    pub alpha: f64,
    pub theta: f64,
    /// Prior mean of β used by the κ and σ² conditionals. `None` means zero.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta0: Option<Vec<f64>>,
    /// Beta proposal shapes for the Metropolis step on G.
    pub proposal_a: f64,
    pub proposal_b: f64,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Self {
            a: 0.5,
            b: 0.5,
            alpha: 1.0,
            theta: 1.0,
            beta0: None,
            proposal_a: 1.0,
            proposal_b: 1.0,
        }
    }
}

impl Hyperparameters {
    pub fn with_beta_prior(a: f64, b: f64) -> Self {
        Self {
            a,
            b,
            ..Self::default()
        }
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        let scalars = [
            ("a", self.a),
            ("b", self.b),
            ("alpha", self.alpha),
            ("theta", self.theta),
            ("proposal_a", self.proposal_a),
            ("proposal_b", self.proposal_b),
        ];
        for (name, v) in scalars {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if let Some(beta0) = &self.beta0 {
            if beta0.len() != p {
                return Err(Error::ShapeMismatch(format!(
                    "beta0 has length {} but p = {p}",
                    beta0.len()
                )));
            }
            if beta0.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("beta0"));
            }
        }
        Ok(())
    }

    pub fn beta0(&self, p: usize) -> DVector<f64> {
        match &self.beta0 {
            Some(b) => DVector::from_column_slice(b),
            None => DVector::zeros(p),
        }
    }
}

/// One point `(β, G, κ, σ²)` of the parameter space.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub beta: DVector<f64>,
    pub g: DVector<f64>,
    pub kappa: f64,
    pub sigma2: f64,
}

impl ModelState {
    pub fn validate(&self, p: usize) -> Result<()> {
        if self.beta.len() != p || self.g.len() != p {
            return Err(Error::ShapeMismatch(format!(
                "state has |beta| = {}, |g| = {}, expected {p}",
                self.beta.len(),
                self.g.len()
            )));
        }
        if self.beta.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("beta"));
        }
        if let Some(g) = self.g.iter().find(|&&g| !(g > 0.0 && g < 1.0)) {
            return Err(Error::Domain(format!("g = {g} outside (0, 1)")));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::Domain(format!(
                "kappa = {} must be positive",
                self.kappa
            )));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::Domain(format!(
                "sigma2 = {} must be positive",
                self.sigma2
            )));
        }
        Ok(())
    }

    /// Starting point used when the caller supplies none: β at the OLS fit,
    /// every `g_j = 0.5`, κ = 1 and σ² at the unbiased residual variance.
    pub fn default_init(ols: &OlsFit) -> Self {
        let p = ols.p();
        let dof = (ols.n - p).max(1) as f64;
        let sigma2 = (ols.s2 / dof).max(f64::MIN_POSITIVE.sqrt());
        Self {
            beta: ols.beta_hat.clone(),
            g: DVector::from_element(p, 0.5),
            kappa: 1.0,
            sigma2,
        }
    }
}

/// OLS fit plus the sufficient statistics every conditional needs.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub beta_hat: DVector<f64>,
    /// Residual sum of squares `‖y − X β̂‖²`.
    pub s2: f64,
    pub xtx: DMatrix<f64>,
    pub xty: DVector<f64>,
    pub yty: f64,
    pub n: usize,
}

impl OlsFit {
    pub fn p(&self) -> usize {
        self.beta_hat.len()
    }
}

/// Least-squares fit through a QR factorization of X.
pub fn ols_fit(dataset: &Dataset) -> Result<OlsFit> {
    dataset.validate()?;
    let x = dataset.x();
    let y = dataset.y();
    let qr = x.clone().qr();
    let qty = qr.q().tr_mul(y);
    let beta_hat = qr
        .r()
        .solve_upper_triangular(&qty)
        .ok_or(Error::RankDeficient { rcond: 0.0 })?;
    let resid = y - x * &beta_hat;
    Ok(OlsFit {
        s2: resid.norm_squared(),
        xtx: dataset.gram(),
        xty: x.tr_mul(y),
        yty: y.norm_squared(),
        n: dataset.n(),
        beta_hat,
    })
}
