//! Deterministic quadrature for the orthogonal-design posterior of a single
//! `g_j`, used as ground truth for the sampler, plus the two-coordinate grid
//! of the joint G posterior.
//!
//! The single-coordinate density is
//! `g^a (1−g)^(b−1) (κ+g²)^(−½) exp{κ c / (2σ² (κ+g²))}` with
//! `c = (x_jᵀy)² / x_jᵀx_j`. For `b < 1` it diverges at `g = 1`, so grids are
//! open: `g_k = k / (m+1)`, `k = 1..m`.
//!
//! Moments are computed separately with Gauss-Legendre rules after
//! substitutions that flatten both endpoint behaviours: `g = u^(1/(a+1))` on
//! `(0, ½]` absorbs `g^a dg`, and `1 − g = s^(1/b)` on `[½, 1)` absorbs
//! `(1−g)^(b−1) dg`. The integrands left over are smooth, so the moments
//! converge quickly and do not depend on the truncation of the open grid.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::OlsFit;
use crate::par::{self, Execution};
use crate::posteriors::{log_post_g, log_post_gj_orthogonal};
use crate::quadrature::{log_sum_exp, log_trapezoid, trapezoid, GaussLegendre};

pub const DEFAULT_GRID_POINTS: usize = 2000;
pub const MIN_GRID_POINTS: usize = 100;

/// Gauss-Legendre nodes per panel for moment integrals.
const NODES_PER_PANEL: usize = 16;

/// Parameters of one orthogonal-design `g_j` posterior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrthogonalGj {
    pub xjty: f64,
    pub xjtxj: f64,
    pub kappa: f64,
    pub sigma2: f64,
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridOracleResult {
    pub grid: Vec<f64>,
    /// Density on `grid`, normalized so its trapezoid integral over the grid is 1.
    pub density: Vec<f64>,
    pub mean: f64,
    pub median: f64,
    /// Grid point with the largest density.
    pub argmax: f64,
    /// Mean implied by the truncated trapezoid density itself.
    pub grid_mean: f64,
}

impl GridOracleResult {
    pub fn argmax_index(&self) -> usize {
        self.grid
            .iter()
            .position(|&g| g == self.argmax)
            .expect("argmax is a grid point")
    }
}

/// Open uniform grid `k / (m+1)`, `k = 1..=m`.
pub fn open_grid(m: usize) -> Vec<f64> {
    (1..=m).map(|k| k as f64 / (m + 1) as f64).collect()
}

impl OrthogonalGj {
    pub fn new(xjty: f64, xjtxj: f64, kappa: f64, sigma2: f64, a: f64, b: f64) -> Result<Self> {
        let positive = [
            ("x_j'x_j", xjtxj),
            ("kappa", kappa),
            ("sigma2", sigma2),
            ("a", a),
            ("b", b),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("{name} = {v} must be positive")));
            }
        }
        if !xjty.is_finite() {
            return Err(Error::Domain(format!("x_j'y = {xjty} must be finite")));
        }
        Ok(Self {
            xjty,
            xjtxj,
            kappa,
            sigma2,
            a,
            b,
        })
    }

    /// Coordinate `j` of an orthogonal fit.
    pub fn from_fit(
        ols: &OlsFit,
        j: usize,
        kappa: f64,
        sigma2: f64,
        a: f64,
        b: f64,
    ) -> Result<Self> {
        Self::new(ols.xty[j], ols.xtx[(j, j)], kappa, sigma2, a, b)
    }

    pub fn log_density(&self, g: f64) -> Result<f64> {
        log_post_gj_orthogonal(
            self.xjty,
            self.xjtxj,
            g,
            self.kappa,
            self.sigma2,
            self.a,
            self.b,
        )
    }

    /// Log density with the `g^a` and `(1−g)^(b−1)` factors removed.
    fn log_smooth_part(&self, g: f64) -> f64 {
        let d = self.kappa + g * g;
        -0.5 * d.ln() + self.kappa * self.xjty * self.xjty / (2.0 * self.sigma2 * self.xjtxj * d)
    }

    /// Quadrature nodes `(g, log weight·density)` covering `[lo, hi] ⊂ [0, 1]`.
    fn log_nodes(&self, lo: f64, hi: f64, panels: usize) -> Vec<(f64, f64)> {
        let gl = GaussLegendre::new(NODES_PER_PANEL);
        let (a, b) = (self.a, self.b);
        let mut out = Vec::new();
        // left piece: g = u^(1/(a+1)), g^a dg = du / (a+1)
        let (l0, l1) = (lo.max(0.0), hi.min(0.5));
        if l1 > l0 {
            let (u0, u1) = (l0.powf(a + 1.0), l1.powf(a + 1.0));
            for (u, w) in gl.composite(u0, u1, panels) {
                let g = u.powf(1.0 / (a + 1.0));
                let lw =
                    w.ln() - (a + 1.0).ln() + (b - 1.0) * (-g).ln_1p() + self.log_smooth_part(g);
                out.push((g, lw));
            }
        }
        // right piece: 1 − g = s^(1/b), (1−g)^(b−1) dg = ds / b
        let (r0, r1) = (lo.max(0.5), hi.min(1.0));
        if r1 > r0 {
            let (s0, s1) = ((1.0 - r1).powf(b), (1.0 - r0).powf(b));
            for (s, w) in gl.composite(s0, s1, panels) {
                let g = 1.0 - s.powf(1.0 / b);
                let lw = w.ln() - b.ln() + a * g.ln() + self.log_smooth_part(g);
                out.push((g, lw));
            }
        }
        out
    }

    fn panels_for(m: usize) -> usize {
        (m / NODES_PER_PANEL).max(8)
    }

    /// Log of the normalizing constant of the untruncated density.
    pub fn log_normalizer(&self, panels: usize) -> f64 {
        log_sum_exp(
            self.log_nodes(0.0, 1.0, panels)
                .into_iter()
                .map(|(_, lw)| lw),
        )
    }

    /// Posterior mean of `g_j` by substitution quadrature.
    pub fn mean(&self, panels: usize) -> f64 {
        let nodes = self.log_nodes(0.0, 1.0, panels);
        let log_z = log_sum_exp(nodes.iter().map(|&(_, lw)| lw));
        nodes.iter().map(|&(g, lw)| g * (lw - log_z).exp()).sum()
    }

    /// Probability mass of `[lo, hi]`.
    pub fn interval_mass(&self, lo: f64, hi: f64, panels: usize) -> f64 {
        let log_z = self.log_normalizer(panels);
        self.log_nodes(lo, hi, panels)
            .into_iter()
            .map(|(_, lw)| (lw - log_z).exp())
            .sum()
    }

    /// Masses of consecutive bins delimited by `edges`.
    pub fn bin_masses(&self, edges: &[f64], panels: usize) -> Vec<f64> {
        let log_z = self.log_normalizer(panels);
        edges
            .windows(2)
            .map(|e| {
                self.log_nodes(e[0], e[1], panels)
                    .into_iter()
                    .map(|(_, lw)| (lw - log_z).exp())
                    .sum()
            })
            .collect()
    }

    /// Median by bisection on the quadrature CDF.
    pub fn median(&self, panels: usize) -> f64 {
        let log_z = self.log_normalizer(panels);
        let cdf = |x: f64| -> f64 {
            self.log_nodes(0.0, x, panels)
                .into_iter()
                .map(|(_, lw)| (lw - log_z).exp())
                .sum()
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if cdf(mid) < 0.5 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Evaluates the density on the open grid of `m` points.
    pub fn grid(&self, m: usize) -> Result<GridOracleResult> {
        if m < MIN_GRID_POINTS {
            return Err(Error::Domain(format!(
                "grid needs at least {MIN_GRID_POINTS} points, got {m}"
            )));
        }
        let grid = open_grid(m);
        let log_f = grid
            .iter()
            .map(|&g| self.log_density(g))
            .collect::<Result<Vec<_>>>()?;
        let log_z = log_trapezoid(&grid, &log_f);
        let density: Vec<f64> = log_f.iter().map(|v| (v - log_z).exp()).collect();
        let argmax_idx = density
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.total_cmp(y.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let weighted: Vec<f64> = grid.iter().zip(&density).map(|(g, d)| g * d).collect();
        let panels = Self::panels_for(m);
        Ok(GridOracleResult {
            argmax: grid[argmax_idx],
            grid_mean: trapezoid(&grid, &weighted),
            mean: self.mean(panels),
            median: self.median(panels),
            grid,
            density,
        })
    }
}

/// Oracle grid for one orthogonal coordinate.
#[allow(clippy::too_many_arguments)]
pub fn grid_posterior_gj(
    xjty: f64,
    xjtxj: f64,
    kappa: f64,
    sigma2: f64,
    a: f64,
    b: f64,
    m: usize,
) -> Result<GridOracleResult> {
    OrthogonalGj::new(xjty, xjtxj, kappa, sigma2, a, b)?.grid(m)
}

/// Cross-checks the G marginal evaluator against brute-force integration of
/// the joint density over β for a single-predictor dataset.
///
/// For each `g` on an open grid the joint `N(y | xβ, σ²I) · N(β | 0,
/// κσ²/(g² xᵀx)) · g^(a−1)(1−g)^(b−1)` is integrated over β by the trapezoid
/// rule on `beta_points` nodes spanning ±`beta_span_sd` conditional standard
/// deviations. Both curves are normalized over the g grid and the largest
/// pointwise difference is returned.
#[derive(Debug, Clone, Copy)]
pub struct MarginalCheck {
    pub g_points: usize,
    pub beta_points: usize,
    pub beta_span_sd: f64,
}

impl Default for MarginalCheck {
    fn default() -> Self {
        Self {
            g_points: 200,
            beta_points: 2001,
            beta_span_sd: 10.0,
        }
    }
}

impl MarginalCheck {
    pub fn run(
        &self,
        x: &[f64],
        y: &[f64],
        kappa: f64,
        sigma2: f64,
        a: f64,
        b: f64,
    ) -> Result<f64> {
        if x.len() != y.len() || x.is_empty() {
            return Err(Error::Domain("need equal-length, non-empty x and y".into()));
        }
        for (name, v) in [("kappa", kappa), ("sigma2", sigma2), ("a", a), ("b", b)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("{name} = {v} must be positive")));
            }
        }
        if self.g_points < 2 || self.beta_points < 3 {
            return Err(Error::Domain("quadrature grids too small".into()));
        }
        let xtx: f64 = x.iter().map(|v| v * v).sum();
        let xty: f64 = x.iter().zip(y).map(|(u, v)| u * v).sum();
        let yty: f64 = y.iter().map(|v| v * v).sum();
        if xtx.is_nan() || xtx <= 0.0 {
            return Err(Error::Domain("predictor is identically zero".into()));
        }
        let grid = open_grid(self.g_points);

        let direct: Vec<f64> = grid
            .iter()
            .map(|&g| {
                let precision = xtx * (1.0 + g * g / kappa) / sigma2;
                let center = xty / sigma2 / precision;
                let sd = precision.recip().sqrt();
                let half = self.beta_span_sd * sd;
                let step = 2.0 * half / (self.beta_points - 1) as f64;
                let betas: Vec<f64> = (0..self.beta_points)
                    .map(|i| center - half + i as f64 * step)
                    .collect();
                let log_joint: Vec<f64> = betas
                    .iter()
                    .map(|&beta| {
                        let rss = yty - 2.0 * beta * xty + beta * beta * xtx;
                        -rss / (2.0 * sigma2) + g.ln()
                            - g * g * xtx * beta * beta / (2.0 * kappa * sigma2)
                            + (a - 1.0) * g.ln()
                            + (b - 1.0) * (-g).ln_1p()
                    })
                    .collect();
                log_trapezoid(&betas, &log_joint)
            })
            .collect();

        let ols = OlsFit {
            beta_hat: DVector::from_element(1, xty / xtx),
            s2: yty - xty * xty / xtx,
            xtx: nalgebra::DMatrix::from_element(1, 1, xtx),
            xty: DVector::from_element(1, xty),
            yty,
            n: x.len(),
        };
        let closed: Vec<f64> = grid
            .iter()
            .map(|&g| log_post_g(&ols, &DVector::from_element(1, g), kappa, sigma2, a, b))
            .collect::<Result<_>>()?;

        let normalize = |log_f: &[f64]| -> Vec<f64> {
            let log_z = log_trapezoid(&grid, log_f);
            log_f.iter().map(|v| (v - log_z).exp()).collect()
        };
        let d1 = normalize(&direct);
        let d2 = normalize(&closed);
        Ok(d1
            .iter()
            .zip(&d2)
            .map(|(u, v)| (u - v).abs())
            .fold(0.0, f64::max))
    }
}

/// [`MarginalCheck::run`] with default grids on a `p = 1` dataset.
pub fn marginal_check_p1(
    dataset: &crate::model::Dataset,
    kappa: f64,
    sigma2: f64,
    a: f64,
    b: f64,
) -> Result<f64> {
    if dataset.p() != 1 {
        return Err(Error::Domain(format!(
            "need p = 1, got p = {}",
            dataset.p()
        )));
    }
    let x: Vec<f64> = dataset.x().column(0).iter().cloned().collect();
    let y: Vec<f64> = dataset.y().iter().cloned().collect();
    MarginalCheck::default().run(&x, &y, kappa, sigma2, a, b)
}

/// `m × m` grid of `log p(G | y, σ², κ)` over coordinates `(j, k)`, with
/// every other coordinate held at `fill`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairGrid {
    pub j: usize,
    pub k: usize,
    pub values: Vec<f64>,
    /// Row-major: entry `r * m + c` is at `(g_j, g_k) = (values[r], values[c])`.
    pub log_density: Vec<f64>,
}

impl PairGrid {
    pub fn m(&self) -> usize {
        self.values.len()
    }

    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.log_density[r * self.m() + c]
    }

    /// `(row, col)` of the largest log density.
    pub fn argmax(&self) -> (usize, usize) {
        let idx = self
            .log_density
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        (idx / self.m(), idx % self.m())
    }
}

#[allow(clippy::too_many_arguments)]
pub fn pair_grid(
    ols: &OlsFit,
    j: usize,
    k: usize,
    fill: f64,
    kappa: f64,
    sigma2: f64,
    a: f64,
    b: f64,
    m: usize,
    exec: Execution,
) -> Result<PairGrid> {
    let p = ols.p();
    if j >= p || k >= p || j == k {
        return Err(Error::InvalidConfig(format!(
            "pair ({j}, {k}) invalid for p = {p}"
        )));
    }
    if m < 2 {
        return Err(Error::InvalidConfig(format!(
            "grid size {m} must be at least 2"
        )));
    }
    if !(fill > 0.0 && fill < 1.0) {
        return Err(Error::InvalidConfig(format!("fill {fill} outside (0, 1)")));
    }
    let values = open_grid(m);
    let rows = par::try_map_indices(m, exec, |r| {
        let mut g = DVector::from_element(p, fill);
        g[j] = values[r];
        values
            .iter()
            .map(|&gk| {
                g[k] = gk;
                log_post_g(ols, &g, kappa, sigma2, a, b)
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    Ok(PairGrid {
        j,
        k,
        values,
        log_density: rows.into_iter().flatten().collect(),
    })
}
