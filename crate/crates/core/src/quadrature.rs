//! Small quadrature toolkit: Gauss-Legendre rules, composite panels and
//! log-space trapezoid sums.

use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Newton iteration on the Legendre recurrence from the Chebyshev-like
    /// initial guesses; accurate to machine precision for `n` up to a few
    /// hundred.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "need at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Nodes and weights mapped onto `[lo, hi]`.
    pub fn on(&self, lo: f64, hi: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    /// Composite rule: `panels` equal sub-intervals of `[lo, hi]`.
    pub fn composite(&self, lo: f64, hi: f64, panels: usize) -> Vec<(f64, f64)> {
        let h = (hi - lo) / panels as f64;
        (0..panels)
            .flat_map(|k| {
                let a = lo + k as f64 * h;
                let b = if k + 1 == panels { hi } else { a + h };
                self.on(a, b).collect::<Vec<_>>()
            })
            .collect()
    }
}

/// `(P_n(x), P_n'(x))`.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// `log Σ exp(v_i)` with the maximum shifted out.
pub fn log_sum_exp(values: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.into_iter().collect();
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Log of the trapezoid integral of `exp(log_f)` sampled at `xs`.
pub fn log_trapezoid(xs: &[f64], log_f: &[f64]) -> f64 {
    assert_eq!(xs.len(), log_f.len());
    let max = log_f.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let f: Vec<f64> = log_f.iter().map(|v| (v - max).exp()).collect();
    max + trapezoid(xs, &f).ln()
}

pub fn trapezoid(xs: &[f64], f: &[f64]) -> f64 {
    xs.windows(2)
        .zip(f.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}
