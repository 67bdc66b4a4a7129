//! Conditional posteriors of every parameter block.
//!
//! All densities are evaluated on the log scale. The precision-like matrix
//! `A(G, κ) = XᵀX + (1/κ) G XᵀX G` appears in the β conditional and in the
//! marginal posterior of G; it is Cholesky-factorized on every call.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};
use crate::model::{Hyperparameters, ModelState, OlsFit};

/// g values are clamped into `[G_CLAMP, 1 - G_CLAMP]` before any logarithm.
pub const G_CLAMP: f64 = 1e-12;

/// Clamps a value already known to lie in the open unit interval away from
/// the endpoints, where finite precision would send a log to `-inf`.
#[inline]
pub fn clamp_g(g: f64) -> f64 {
    g.clamp(G_CLAMP, 1.0 - G_CLAMP)
}

fn check_open_unit(g: &DVector<f64>) -> Result<()> {
    match g.iter().find(|&&v| !(v > 0.0 && v < 1.0)) {
        Some(v) => Err(Error::Domain(format!("g = {v} outside (0, 1)"))),
        None => Ok(()),
    }
}

fn check_closed_unit(g: &DVector<f64>) -> Result<()> {
    match g.iter().find(|&&v| !(0.0..=1.0).contains(&v)) {
        Some(v) => Err(Error::Domain(format!("g = {v} outside [0, 1]"))),
        None => Ok(()),
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} = {v} must be positive")))
    }
}

/// `G M G` for diagonal `G`.
pub fn sandwich(g: &DVector<f64>, m: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| g[i] * m[(i, j)] * g[j])
}

/// Quadratic form `vᵀ G M G v`.
pub fn sandwich_quad(g: &DVector<f64>, m: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    let gv = v.component_mul(g);
    gv.dot(&(m * &gv))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianParams {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseGammaParams {
    pub shape: f64,
    pub scale: f64,
}

impl InverseGammaParams {
    pub fn mean(&self) -> Option<f64> {
        (self.shape > 1.0).then(|| self.scale / (self.shape - 1.0))
    }

    pub fn variance(&self) -> Option<f64> {
        (self.shape > 2.0).then(|| {
            let a = self.shape;
            self.scale * self.scale / ((a - 1.0) * (a - 1.0) * (a - 2.0))
        })
    }

    /// Draws through the reciprocal of a Gamma(shape, 1/scale) variate.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let gamma = Gamma::new(self.shape, 1.0 / self.scale)
            .expect("inverse-gamma parameters are validated positive");
        1.0 / gamma.sample(rng)
    }
}

/// Cholesky factor of `A(G, κ) = XᵀX + (1/κ) G XᵀX G`.
pub struct PrecisionFactor {
    chol: Cholesky<f64, Dyn>,
}

impl PrecisionFactor {
    pub fn new(xtx: &DMatrix<f64>, g: &DVector<f64>, kappa: f64) -> Result<Self> {
        let a = xtx + sandwich(g, xtx) / kappa;
        let chol = Cholesky::new(a).ok_or(Error::SingularSystem)?;
        Ok(Self { chol })
    }

    pub fn log_det(&self) -> f64 {
        2.0 * self
            .chol
            .l_dirty()
            .diagonal()
            .iter()
            .map(|d| d.ln())
            .sum::<f64>()
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        self.chol.inverse()
    }

    /// Draws `mean + σ L⁻ᵀ z`, whose covariance is `σ² A⁻¹`.
    pub fn sample_gaussian<R: Rng + ?Sized>(
        &self,
        mean: &DVector<f64>,
        sigma2: f64,
        rng: &mut R,
    ) -> DVector<f64> {
        let p = mean.len();
        let z = DVector::from_fn(p, |_, _| StandardNormal.sample(rng));
        let l = self.chol.l();
        let w = l
            .tr_solve_upper_triangular(&z)
            .expect("Cholesky factor has a positive diagonal");
        mean + w * sigma2.sqrt()
    }
}

/// Full conditional of β: `N(A⁻¹Xᵀy, σ² A⁻¹)`.
pub fn beta_conditional(
    ols: &OlsFit,
    g: &DVector<f64>,
    kappa: f64,
    sigma2: f64,
) -> Result<GaussianParams> {
    check_closed_unit(g)?;
    check_positive("kappa", kappa)?;
    check_positive("sigma2", sigma2)?;
    let factor = PrecisionFactor::new(&ols.xtx, g, kappa)?;
    let mean = factor.solve(&ols.xty);
    let mut covariance = factor.inverse() * sigma2;
    // symmetrize away rounding in the inverse
    covariance = (&covariance + covariance.transpose()) * 0.5;
    Ok(GaussianParams { mean, covariance })
}

/// Unnormalized log marginal posterior of G given κ and σ², with β
/// integrated out:
///
/// `a Σ log g_j + (b−1) Σ log(1−g_j) − ½ log|A| + yᵀX A⁻¹ Xᵀy / (2σ²)`.
pub fn log_post_g(
    ols: &OlsFit,
    g: &DVector<f64>,
    kappa: f64,
    sigma2: f64,
    a: f64,
    b: f64,
) -> Result<f64> {
    check_open_unit(g)?;
    check_positive("kappa", kappa)?;
    check_positive("sigma2", sigma2)?;
    let g = g.map(clamp_g);
    let factor = PrecisionFactor::new(&ols.xtx, &g, kappa)?;
    let prior: f64 = g
        .iter()
        .map(|&gj| a * gj.ln() + (b - 1.0) * (-gj).ln_1p())
        .sum();
    let quad = ols.xty.dot(&factor.solve(&ols.xty));
    Ok(prior - 0.5 * factor.log_det() + quad / (2.0 * sigma2))
}

/// Log of the single-coordinate posterior of `g_j` under an orthogonal
/// design, up to an additive constant.
pub fn log_post_gj_orthogonal(
    xjty: f64,
    xjtxj: f64,
    gj: f64,
    kappa: f64,
    sigma2: f64,
    a: f64,
    b: f64,
) -> Result<f64> {
    if !(gj > 0.0 && gj < 1.0) {
        return Err(Error::Domain(format!("g = {gj} outside (0, 1)")));
    }
    check_positive("x_j'x_j", xjtxj)?;
    check_positive("kappa", kappa)?;
    check_positive("sigma2", sigma2)?;
    let gj = clamp_g(gj);
    let denom = kappa + gj * gj;
    Ok(a * gj.ln() + (b - 1.0) * (-gj).ln_1p() - 0.5 * denom.ln()
        + kappa * xjty * xjty / (2.0 * sigma2 * xjtxj * denom))
}

/// Full conditional of κ: `IG(p/2 + α, (β−β₀)ᵀ G XᵀX G (β−β₀) / (2σ²) + θ)`.
pub fn kappa_conditional(
    state: &ModelState,
    ols: &OlsFit,
    hyper: &Hyperparameters,
) -> InverseGammaParams {
    let p = ols.p();
    let diff = &state.beta - hyper.beta0(p);
    let quad = sandwich_quad(&state.g, &ols.xtx, &diff);
    InverseGammaParams {
        shape: p as f64 / 2.0 + hyper.alpha,
        scale: quad / (2.0 * state.sigma2) + hyper.theta,
    }
}

/// Full conditional of σ² under the Jeffreys prior:
/// `IG((n+p)/2, s²/2 + ½(β−β̂)ᵀXᵀX(β−β̂) + (β−β₀)ᵀ G XᵀX G (β−β₀) / (2κ))`.
pub fn sigma2_conditional(
    state: &ModelState,
    ols: &OlsFit,
    hyper: &Hyperparameters,
) -> InverseGammaParams {
    let p = ols.p();
    let to_ols = &state.beta - &ols.beta_hat;
    let fit_term = to_ols.dot(&(&ols.xtx * &to_ols));
    let diff = &state.beta - hyper.beta0(p);
    let prior_term = sandwich_quad(&state.g, &ols.xtx, &diff);
    InverseGammaParams {
        shape: (ols.n + p) as f64 / 2.0,
        scale: 0.5 * ols.s2 + 0.5 * fit_term + prior_term / (2.0 * state.kappa),
    }
}
