use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use kappag::io::{read_dataset_file, read_trace, write_trace_files, ResponseColumn, TraceHeader};
use kappag::model::{ols_fit, Dataset, Hyperparameters, ModelState};
use kappag::oracle::{pair_grid, OrthogonalGj, DEFAULT_GRID_POINTS, MIN_GRID_POINTS};
use kappag::par::Execution;
use kappag::pip::{ssvs_pip_with_fit, PipConfig};
use kappag::report::{
    write_grid_csv, write_json, write_pair_csv, ComparePipReport, FitReport, TraceSummaryReport,
};
use kappag::sampler::{run_chains, GUpdate, SamplerConfig};
use kappag::selection::{summarize_pooled, DEFAULT_THRESHOLD};
use kappag::simgen::{write_manifest, Design, Manifest, DEFAULT_N};
use kappag::{Error, Result};

#[derive(Parser)]
#[command(
    name = "kappag",
    version,
    about = "Variable selection with kappa-G priors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a simulated dataset and its manifest.
    Simulate(SimulateArgs),
    /// Run the sampler and write a JSON report.
    Fit(FitArgs),
    /// Evaluate the posterior of g_j (or a pair) on a grid.
    Grid(GridArgs),
    /// Run the sampler and the indicator baseline side by side.
    ComparePip(ComparePipArgs),
    /// Summarize a trace CSV written by `fit --trace-out`.
    Summarize(SummarizeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum DesignName {
    P2,
    P10,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    design: DesignName,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_N)]
    n: usize,
    /// Output directory; receives data.csv and manifest.json.
    #[arg(long, env = "KAPPAG_OUT_DIR", default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    data: PathBuf,
    /// Response column, by name or 0-based index.
    #[arg(long, default_value = "y")]
    response: String,
}

#[derive(Args)]
struct PriorArgs {
    #[arg(long, default_value_t = 0.5)]
    a: f64,
    #[arg(long, default_value_t = 0.5)]
    b: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    theta: f64,
}

impl PriorArgs {
    fn hyper(&self) -> Hyperparameters {
        Hyperparameters {
            alpha: self.alpha,
            theta: self.theta,
            ..Hyperparameters::with_beta_prior(self.a, self.b)
        }
    }
}

#[derive(Args)]
struct ChainArgs {
    #[arg(long, default_value_t = 20_000, value_parser = clap::value_parser!(u64).range(1..))]
    iters: u64,
    /// Defaults to a tenth of the iterations.
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    #[arg(long, default_value_t = 1)]
    chains: usize,
    #[arg(long, default_value_t = 1)]
    thin: usize,
    #[arg(long, value_enum, default_value_t = GUpdateArg::Auto)]
    g_update: GUpdateArg,
    /// Run chains on one thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum GUpdateArg {
    Joint,
    PerCoordinate,
    Auto,
}

impl ChainArgs {
    fn config(&self) -> Result<SamplerConfig> {
        if self.chains == 0 {
            return Err(Error::InvalidConfig("chains must be at least 1".into()));
        }
        let iterations = self.iters as usize;
        let mut cfg = SamplerConfig::new(iterations, self.seed);
        if let Some(b) = self.burn_in {
            cfg.burn_in = b;
        }
        cfg.thin = self.thin;
        cfg.g_update = match self.g_update {
            GUpdateArg::Joint => GUpdate::Joint,
            GUpdateArg::PerCoordinate => GUpdate::PerCoordinate,
            GUpdateArg::Auto => GUpdate::Auto,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn exec(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::default()
        }
    }
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    prior: PriorArgs,
    #[command(flatten)]
    chain: ChainArgs,
    /// Write the first chain's trace CSV here (plus a .json header).
    #[arg(long)]
    trace_out: Option<PathBuf>,
    /// Report path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GridArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    kappa: f64,
    #[arg(long)]
    sigma2: f64,
    #[arg(long, default_value_t = 0.5)]
    a: f64,
    #[arg(long, default_value_t = 0.5)]
    b: f64,
    /// 1-based predictor index for the one-dimensional grid, which uses the
    /// orthogonal-design density.
    #[arg(long, default_value_t = 1)]
    j: usize,
    /// Two 1-based indices for a joint grid instead.
    #[arg(long, num_args = 2)]
    pair: Option<Vec<usize>>,
    #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
    m: usize,
    /// Value of the coordinates not on the pair grid.
    #[arg(long, default_value_t = 0.5)]
    fill: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ComparePipArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    prior: PriorArgs,
    #[command(flatten)]
    chain: ChainArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SummarizeArgs {
    #[arg(long)]
    trace: PathBuf,
    /// Overrides the burn-in recorded in the trace's .json header.
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load(args: &DataArgs) -> Result<Dataset> {
    let ds = read_dataset_file(&args.data, &ResponseColumn::parse(&args.response))?;
    ds.validate()?;
    Ok(ds)
}

fn emit<T: serde::Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => write_json(value, p),
        None => {
            print!("{}", kappag::report::to_json(value)?);
            Ok(())
        }
    }
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    let (name, design) = match args.design {
        DesignName::P2 => ("p2", Design::p2()),
        DesignName::P10 => ("p10", Design::p10()),
    };
    if args.n <= design.p() {
        return Err(Error::InvalidConfig(format!(
            "n = {} must exceed p = {}",
            args.n,
            design.p()
        )));
    }
    let ds = design.generate(args.seed, args.n)?;
    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    kappag::io::write_dataset_file(&ds, &args.out.join("data.csv"))?;
    let manifest = Manifest::new(name, args.seed, args.n, &design);
    write_manifest(&manifest, &args.out.join("manifest.json"))
}

fn fit(args: &FitArgs) -> Result<()> {
    let ds = load(&args.data)?;
    let hyper = args.prior.hyper();
    hyper.validate(ds.p())?;
    let cfg = args.chain.config()?;
    ds.require_overdetermined()?;
    let ols = ols_fit(&ds)?;
    let init = ModelState::default_init(&ols);
    let traces = run_chains(
        &ds,
        &hyper,
        &cfg,
        &init,
        args.chain.chains,
        args.chain.exec(),
    )?;
    let report = FitReport::build(&ds, &ols, &hyper, &cfg, &traces, args.chain.threshold)?;
    if let Some(path) = &args.trace_out {
        let header = TraceHeader {
            seed: cfg.seed,
            chain: 0,
            iterations: cfg.iterations,
            burn_in: cfg.burn_in,
            thin: cfg.thin,
            hyperparameters: hyper.clone(),
        };
        write_trace_files(&traces[0], &header, path)?;
    }
    emit(&report, args.out.as_deref())
}

fn grid(args: &GridArgs) -> Result<()> {
    let min_m = if args.pair.is_some() {
        2
    } else {
        MIN_GRID_POINTS
    };
    if args.m < min_m {
        return Err(Error::InvalidConfig(format!(
            "--m {} is below the minimum of {min_m}",
            args.m
        )));
    }
    let ds = load(&args.data)?;
    let ols = ols_fit(&ds)?;
    let create = || std::fs::File::create(&args.out).map_err(|e| Error::io(&args.out, e));
    let to_index = |j: usize| {
        if j == 0 || j > ds.p() {
            Err(Error::InvalidConfig(format!(
                "index {j} outside 1..={}",
                ds.p()
            )))
        } else {
            Ok(j - 1)
        }
    };
    match &args.pair {
        Some(pair) => {
            let g = pair_grid(
                &ols,
                to_index(pair[0])?,
                to_index(pair[1])?,
                args.fill,
                args.kappa,
                args.sigma2,
                args.a,
                args.b,
                args.m,
                Execution::default(),
            )?;
            write_pair_csv(&g, create()?)
        }
        None => {
            let j = to_index(args.j)?;
            let g = OrthogonalGj::from_fit(&ols, j, args.kappa, args.sigma2, args.a, args.b)?
                .grid(args.m)?;
            write_grid_csv(&g, create()?)
        }
    }
}

fn compare_pip(args: &ComparePipArgs) -> Result<()> {
    let ds = load(&args.data)?;
    let hyper = args.prior.hyper();
    hyper.validate(ds.p())?;
    let cfg = args.chain.config()?;
    ds.require_overdetermined()?;
    let ols = ols_fit(&ds)?;
    let init = ModelState::default_init(&ols);
    let traces = run_chains(
        &ds,
        &hyper,
        &cfg,
        &init,
        args.chain.chains,
        args.chain.exec(),
    )?;
    let refs: Vec<_> = traces.iter().collect();
    let summary = summarize_pooled(&refs, args.chain.threshold)?;
    let mut pip_cfg = PipConfig::new(cfg.iterations, cfg.seed);
    pip_cfg.burn_in = cfg.burn_in;
    let pip = ssvs_pip_with_fit(&ols, &pip_cfg)?;
    let report = ComparePipReport::build(&ds, &ols, &summary, &pip, cfg.seed, cfg.iterations);
    emit(&report, args.out.as_deref())
}

fn summarize(args: &SummarizeArgs) -> Result<()> {
    let header_path = args.trace.with_extension("json");
    let header: Option<TraceHeader> = if header_path.exists() {
        let text = std::fs::read_to_string(&header_path).map_err(|e| Error::io(&header_path, e))?;
        Some(serde_json::from_str(&text).map_err(|e| Error::Format(e.to_string()))?)
    } else {
        None
    };
    let burn_in = args
        .burn_in
        .or(header.as_ref().map(|h| h.burn_in))
        .unwrap_or(0);
    let seed = header.as_ref().map_or(0, |h| h.seed);
    let file = std::fs::File::open(&args.trace).map_err(|e| Error::io(&args.trace, e))?;
    let trace = read_trace(file, seed, burn_in)?;
    emit(
        &TraceSummaryReport::build(&trace, args.threshold)?,
        args.out.as_deref(),
    )
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Fit(a) => fit(a),
        Command::Grid(a) => grid(a),
        Command::ComparePip(a) => compare_pip(a),
        Command::Summarize(a) => summarize(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
