//! Statistical checks of the full sampler against independent quadrature.

use kappag::model::{ols_fit, Dataset, Hyperparameters, ModelState};
use kappag::par::Execution;
use kappag::sampler::{run_chain, run_chains, ChainTrace, SamplerConfig};
use kappag::selection::{mean, summarize};
use kappag::simgen::{gen_sim_p2, Design};
use nalgebra::{DMatrix, DVector};

/// Batch-means standard error.
fn mc_se(xs: &[f64]) -> f64 {
    let batches = 50;
    let size = xs.len() / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| mean(&xs[b * size..(b + 1) * size]))
        .collect();
    let m = mean(&means);
    let var = means.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (var / batches as f64).sqrt()
}

/// Posterior of g for p = 1 with β and σ² integrated out analytically:
/// `p(g, κ | y) ∝ g^a (1−g)^(b−1) (κ+g²)^(−1/2) IG(κ; α, θ) S^(−n/2)` with
/// `S = y'y − κ/(κ+g²) (x'y)²/x'x`. κ is integrated on a log grid.
/// Returns bin masses on `edges` and the posterior mean of g.
fn full_posterior_g(ds: &Dataset, h: &Hyperparameters, edges: &[f64]) -> (Vec<f64>, f64) {
    let x = ds.x().column(0);
    let y = ds.y();
    let (xtx, xty, yty) = (x.dot(&x), x.dot(y), y.dot(y));
    let n = ds.n() as f64;
    let log_joint = |g: f64, kappa: f64| {
        let s = yty - kappa / (kappa + g * g) * xty * xty / xtx;
        h.a * g.ln() + (h.b - 1.0) * (1.0 - g).ln()
            - 0.5 * (kappa + g * g).ln()
            - (h.alpha + 1.0) * kappa.ln()
            - h.theta / kappa
            - 0.5 * n * s.ln()
    };
    // g = 1 − t², which absorbs the (1−g)^(b−1) singularity for b = 1/2
    let gt = 4000;
    let kt = 1500;
    let (lk0, lk1) = (-12.0f64, 40.0f64);
    let mut g_vals = Vec::with_capacity(gt);
    let mut log_w = Vec::with_capacity(gt);
    for i in 0..gt {
        let t = (i as f64 + 0.5) / gt as f64;
        let g = 1.0 - t * t;
        let inner: Vec<f64> = (0..kt)
            .map(|k| {
                let lk = lk0 + (k as f64 + 0.5) / kt as f64 * (lk1 - lk0);
                log_joint(g, lk.exp()) + lk
            })
            .collect();
        let m = inner.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + inner.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        g_vals.push(g);
        log_w.push(lse + (2.0 * t).ln());
    }
    let m = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_w.iter().map(|v| (v - m).exp()).collect();
    let total: f64 = w.iter().sum();
    let mut masses = vec![0.0; edges.len() - 1];
    let mut g_mean = 0.0;
    for (g, wi) in g_vals.iter().zip(&w) {
        let bin = edges.partition_point(|e| e <= g).clamp(1, edges.len() - 1) - 1;
        masses[bin] += wi / total;
        g_mean += g * wi / total;
    }
    (masses, g_mean)
}

fn histogram(xs: &[f64], edges: &[f64]) -> Vec<f64> {
    let mut h = vec![0.0; edges.len() - 1];
    for &x in xs {
        let bin = edges.partition_point(|e| *e <= x).clamp(1, edges.len() - 1) - 1;
        h[bin] += 1.0 / xs.len() as f64;
    }
    h
}

#[test]
fn full_sampler_matches_two_dimensional_quadrature() {
    let ds = Design::new(vec![0.6]).generate(17, 30).unwrap();
    let hyper = Hyperparameters::default();
    let ols = ols_fit(&ds).unwrap();
    let cfg = SamplerConfig::new(60_000, 3);
    let tr = run_chain(&ds, &hyper, &cfg, &ModelState::default_init(&ols)).unwrap();
    let draws = tr.g_column(0);

    let edges: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
    let (oracle, oracle_mean) = full_posterior_g(&ds, &hyper, &edges);
    let tv: f64 = 0.5
        * histogram(&draws, &edges)
            .iter()
            .zip(&oracle)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>();
    let sampled = mean(&draws);
    let tol = (3.0 * mc_se(&draws)).max(0.02);
    assert!(tv < 0.05, "tv {tv}");
    assert!(
        (sampled - oracle_mean).abs() < tol,
        "{sampled} vs {oracle_mean} (tol {tol})"
    );
}

#[test]
fn null_response_leaves_g_near_prior_shape() {
    // y orthogonal to x: the G marginal at fixed κ, σ² is increasing in g
    let x = DMatrix::from_column_slice(8, 1, &[1.0, 1.0, 1.0, 1.0, -1.0, -1.0, -1.0, -1.0]);
    let y = DVector::from_column_slice(&[1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0]);
    let ds = Dataset::new(x, y, None).unwrap();
    let ols = ols_fit(&ds).unwrap();
    let tr = run_chain(
        &ds,
        &Hyperparameters::default(),
        &SamplerConfig::new(20_000, 9),
        &ModelState::default_init(&ols),
    )
    .unwrap();
    let s = summarize(&tr, 0.5).unwrap();
    assert!(s.g_mean[0] > 0.5, "{}", s.g_mean[0]);
    assert!(s.beta_mean[0].abs() < 0.1);
}

#[test]
fn seeds_agree_on_p2() {
    let (ds, _) = gen_sim_p2(21, 30).unwrap();
    let ols = ols_fit(&ds).unwrap();
    let hyper = Hyperparameters::default();
    let run = |seed| {
        let tr = run_chain(
            &ds,
            &hyper,
            &SamplerConfig::new(20_000, seed),
            &ModelState::default_init(&ols),
        )
        .unwrap();
        summarize(&tr, 0.5).unwrap()
    };
    let (a, b) = (run(1), run(2));
    for j in 0..2 {
        assert!((a.g_mean[j] - b.g_mean[j]).abs() < 0.05, "{j}: {a:?} {b:?}");
    }
}

#[test]
fn halves_of_a_long_chain_agree() {
    let (ds, _) = gen_sim_p2(22, 30).unwrap();
    let ols = ols_fit(&ds).unwrap();
    let tr = run_chain(
        &ds,
        &Hyperparameters::default(),
        &SamplerConfig::new(40_000, 5),
        &ModelState::default_init(&ols),
    )
    .unwrap();
    let kept: Vec<usize> = tr.kept_rows().collect();
    let (first, second) = kept.split_at(kept.len() / 2);
    for j in 0..2 {
        let m1 = mean(&tr.select_rows(first).g_column(j));
        let m2 = mean(&tr.select_rows(second).g_column(j));
        assert!((m1 - m2).abs() < 0.05, "{j}: {m1} {m2}");
    }
}

fn rao_blackwell_check(tr: &ChainTrace, beta_hat: f64) {
    // orthogonal p = 1: E[β | g, κ, σ², y] = κ/(κ+g²) β̂
    let rows: Vec<usize> = tr.kept_rows().collect();
    let rb: Vec<f64> = rows
        .iter()
        .map(|&t| {
            let g = tr.g_row(t)[0];
            tr.kappa[t] / (tr.kappa[t] + g * g) * beta_hat
        })
        .collect();
    let beta = tr.beta_column(0);
    let se = mc_se(&beta);
    assert!(
        (mean(&beta) - mean(&rb)).abs() < 4.0 * se + 1e-3,
        "{} {}",
        mean(&beta),
        mean(&rb)
    );
}

#[test]
fn shrinkage_matches_rao_blackwell_estimate() {
    let ds = Design::new(vec![1.0]).generate(4, 30).unwrap();
    let ols = ols_fit(&ds).unwrap();
    let tr = run_chain(
        &ds,
        &Hyperparameters::default(),
        &SamplerConfig::new(40_000, 8),
        &ModelState::default_init(&ols),
    )
    .unwrap();
    rao_blackwell_check(&tr, ols.beta_hat[0]);
}

#[test]
fn parallel_and_sequential_chains_are_identical() {
    let (ds, _) = gen_sim_p2(3, 30).unwrap();
    let ols = ols_fit(&ds).unwrap();
    let hyper = Hyperparameters::default();
    let cfg = SamplerConfig::new(500, 4);
    let init = ModelState::default_init(&ols);
    let seq = run_chains(&ds, &hyper, &cfg, &init, 4, Execution::Sequential).unwrap();
    let par = run_chains(&ds, &hyper, &cfg, &init, 4, Execution::Parallel).unwrap();
    assert_eq!(seq, par);
    assert_ne!(seq[0].g_column(0), seq[1].g_column(0));
}
