use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use kappag::model::{ols_fit, Hyperparameters, ModelState};
use kappag::oracle::pair_grid;
use kappag::par::Execution;
use kappag::sampler::{run_chains, SamplerConfig};
use kappag::simgen::gen_sim_p10;

fn chains(c: &mut Criterion) {
    let (ds, _) = gen_sim_p10(1, 30).unwrap();
    let ols = ols_fit(&ds).unwrap();
    let init = ModelState::default_init(&ols);
    let hyper = Hyperparameters::with_beta_prior(0.3, 0.3);
    let cfg = SamplerConfig::new(2_000, 1);
    let mut group = c.benchmark_group("run_chains_4x2000_p10");
    group.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{exec:?}")),
            &exec,
            |b, &e| b.iter(|| run_chains(&ds, &hyper, &cfg, &init, 4, e).unwrap()),
        );
    }
    group.finish();
}

fn grid(c: &mut Criterion) {
    let (ds, _) = gen_sim_p10(1, 30).unwrap();
    let ols = ols_fit(&ds).unwrap();
    let mut group = c.benchmark_group("pair_grid_200");
    group.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{exec:?}")),
            &exec,
            |b, &e| b.iter(|| pair_grid(&ols, 0, 2, 0.5, 1.0, 1.0, 0.5, 0.5, 200, e).unwrap()),
        );
    }
    group.finish();
}

criterion_group!(benches, chains, grid);
criterion_main!(benches);
