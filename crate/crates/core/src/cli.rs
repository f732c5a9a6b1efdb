//! Command-line front end. Exit codes: 0 success, 1 input error, 2 numerical stall.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use chrono::Utc;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::experiments::{self, InputGrid, StudyConfig};
use crate::models::{ModelKind, NonlinearModel};
use crate::params::{DeviationVector, ParameterSpec};
use crate::report::{MetricsBlock, Payload, RunReport, SimulationSummary, Timestamps};
use crate::selection::{self, SelectionConfig};
use crate::solver::{self, SolveResult, SolveStatus, SolverConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_STALL: i32 = 2;

/// Environment variable that overrides `--jobs`.
pub const JOBS_ENV: &str = "SPARSE_NLS_JOBS";

#[derive(Debug, Parser)]
#[command(
    name = "sparse-nls",
    version,
    about = "Sparse parameter selection for nonlinear least squares"
)]
pub struct Cli {
    /// Worker threads for parallel work (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    /// Log verbosity: -v info, -vv debug.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one dataset at a fixed L1 radius.
    Fit(FitArgs),
    /// Search the radius that selects a target number of parameters.
    Select(SelectArgs),
    /// Write a synthetic `t,x,y` dataset.
    Simulate(SimulateArgs),
    /// Run a study config (timing benchmark by default).
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Data CSV with header `t,x,y`.
    #[arg(long)]
    pub data: PathBuf,
    /// Model id: `headneck` or `expsum<p>`.
    #[arg(long, default_value = "expsum6")]
    pub model: ModelKind,
    /// Parameter spec JSON replacing the model's bundled spec.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Solver settings as JSON (fields of the solver config).
    #[arg(long)]
    pub solver_config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub starts: usize,
    /// Report JSON path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub common: ModelArgs,
    /// L1 radius on the normalized deviations.
    #[arg(long, conflicts_with = "unregularized")]
    pub radius: Option<f64>,
    /// Plain Levenberg–Marquardt (infinite radius).
    #[arg(long)]
    pub unregularized: bool,
    /// Also write the iteration trace as CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub common: ModelArgs,
    /// Number of parameters to select.
    #[arg(long)]
    pub nstar: usize,
    #[arg(long, default_value_t = 1.0)]
    pub t_init: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub threshold: f64,
    #[arg(long, default_value_t = 100)]
    pub max_rounds: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GridArg {
    /// Model default.
    Auto,
    Reference,
    Log,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value = "expsum6")]
    pub model: ModelKind,
    /// Comma-separated true deviations, normalized frame.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub theta0: Vec<f64>,
    #[arg(long)]
    pub n: usize,
    /// Noise as a fraction of the clean RMS.
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 60.0)]
    pub sample_rate: f64,
    #[arg(long, value_enum, default_value_t = GridArg::Auto)]
    pub grid: GridArg,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
    /// Optional report JSON path.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Study config JSON.
    pub config: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Long-format CSV of the study cells.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

/// Parses arguments, runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    init_logging(cli.verbose);
    let mut echo: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    if let Some(prog) = args.first().and_then(|a| Path::new(a).file_name()) {
        echo[0] = prog.to_string_lossy().into_owned();
    }
    let jobs = match jobs_override(cli.jobs) {
        Ok(j) => j,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker threads: {e}");
            return EXIT_INPUT;
        }
    };
    match pool.install(|| dispatch(&cli.command, echo)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}

fn jobs_override(flag: usize) -> Result<usize> {
    match std::env::var(JOBS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::Argument(format!("{JOBS_ENV} must be a non-negative integer, got `{v}`"))),
        Err(_) => Ok(flag),
    }
}

/// Numerical failures map to 2, everything else to 1.
pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Solver { .. }
        | Error::Subproblem { .. }
        | Error::AllStartsFailed(_)
        | Error::SelectionExhausted { .. }
        | Error::Study { .. } => EXIT_STALL,
        _ => EXIT_INPUT,
    }
}

fn dispatch(cmd: &Command, echo: Vec<String>) -> Result<i32> {
    match cmd {
        Command::Fit(a) => cmd_fit(a, echo),
        Command::Select(a) => cmd_select(a, echo),
        Command::Simulate(a) => cmd_simulate(a, echo),
        Command::Bench(a) => cmd_bench(a, echo),
    }
}

struct Loaded {
    model: Box<dyn NonlinearModel>,
    data: Dataset,
    solver: SolverConfig,
    spec_name: String,
    config: serde_json::Value,
}

fn load_common(a: &ModelArgs) -> Result<Loaded> {
    let spec = a.spec.as_deref().map(ParameterSpec::load).transpose()?;
    let model = a.model.build(spec)?;
    let solver = match &a.solver_config {
        Some(p) => read_json::<SolverConfig>(p)?,
        None => SolverConfig::default(),
    };
    solver.validate()?;
    if a.starts == 0 {
        return Err(Error::Argument("--starts must be >= 1".into()));
    }
    let data = Dataset::load_csv(&a.data)?;
    let config = json!({
        "model": a.model.to_string(),
        "spec": model.spec(),
        "solver": solver,
        "seed": a.seed,
        "starts": a.starts,
        "data": file_digest(&a.data)?,
    });
    Ok(Loaded {
        spec_name: model.spec().name().to_owned(),
        model,
        data,
        solver,
        config,
    })
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::input(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::input(path, format!("line {} column {}: {e}", e.line(), e.column())))
}

fn file_digest(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::input(path, e))?;
    Ok(crate::report::config_hash(&serde_json::Value::String(
        bytes.iter().map(|b| format!("{b:02x}")).collect(),
    )))
}

fn status_code(res: &SolveResult) -> i32 {
    match res.status {
        SolveStatus::Stalled => EXIT_STALL,
        _ => EXIT_OK,
    }
}

fn active_names(model: &dyn NonlinearModel, res: &SolveResult) -> Vec<String> {
    model
        .spec()
        .free_names()
        .into_iter()
        .zip(&res.active_mask)
        .filter(|(_, &a)| a)
        .map(|(n, _)| n)
        .collect()
}

fn write_report(report: &RunReport, out: Option<&Path>) -> Result<()> {
    if let Some(p) = out {
        report.save(p)?;
    }
    Ok(())
}

fn cmd_fit(a: &FitArgs, echo: Vec<String>) -> Result<i32> {
    let started = Utc::now();
    let mut l = load_common(&a.common)?;
    l.solver.radius = match (a.radius, a.unregularized) {
        (Some(r), _) => r,
        (None, true) => f64::INFINITY,
        (None, false) => l.solver.radius,
    };
    let res = solver::fit_multistart(l.model.as_ref(), &l.data, &l.solver, a.common.starts, a.common.seed)?;
    if let Some(p) = &a.trace {
        let file = std::fs::File::create(p).map_err(|e| Error::input(p, e))?;
        res.write_trace_csv(std::io::BufWriter::new(file))?;
    }
    match res.vaf {
        Some(v) => println!("VAF {v:.3}%  SSE {:.6e}  status {:?}", res.sse, res.status),
        None => println!("SSE {:.6e}  status {:?}", res.sse, res.status),
    }
    println!("active: {}", active_names(l.model.as_ref(), &res).join(", "));
    l.config["radius"] = json!(l.solver.radius.is_finite().then_some(l.solver.radius));
    let code = status_code(&res);
    let metrics = MetricsBlock {
        vaf: res.vaf,
        ..Default::default()
    };
    let report = RunReport::new(
        echo,
        &json!({"command": "fit", "config": l.config}),
        Some(l.spec_name),
        Payload::Fit(res),
        metrics,
        Timestamps::since(started),
    );
    write_report(&report, a.common.out.as_deref())?;
    Ok(code)
}

fn cmd_select(a: &SelectArgs, echo: Vec<String>) -> Result<i32> {
    let started = Utc::now();
    let cfg = SelectionConfig {
        n_star: a.nstar,
        t_init: a.t_init,
        select_threshold: a.threshold,
        max_rounds: a.max_rounds,
        starts: a.common.starts,
        seed: a.common.seed,
        ..Default::default()
    };
    // Reject an impossible target before touching the data.
    let spec = a.common.spec.as_deref().map(ParameterSpec::load).transpose()?;
    cfg.validate(a.common.model.build(spec)?.spec().dim())?;
    let l = load_common(&a.common)?;
    let out = selection::select(l.model.as_ref(), &l.data, &cfg, &l.solver)?;
    println!("{:>5}  {:>12}  {:>9}", "round", "T", "NumParams");
    for r in &out.round_trace {
        println!("{:>5}  {:>12.6}  {:>9}", r.round, r.radius, r.num_params);
    }
    println!("selected: {}", out.selected.join(", "));
    if let Some(v) = out.result.vaf {
        println!("VAF {v:.3}%");
    }
    let code = status_code(&out.result);
    let metrics = MetricsBlock {
        vaf: out.result.vaf,
        ..Default::default()
    };
    let report = RunReport::new(
        echo,
        &json!({"command": "select", "config": l.config, "selection": cfg}),
        Some(l.spec_name),
        Payload::Select(out),
        metrics,
        Timestamps::since(started),
    );
    write_report(&report, a.common.out.as_deref())?;
    Ok(code)
}

fn cmd_simulate(a: &SimulateArgs, echo: Vec<String>) -> Result<i32> {
    let started = Utc::now();
    let model = a.model.build(None)?;
    if a.n < 2 {
        return Err(Error::Argument("--n must be >= 2".into()));
    }
    let mut study = StudyConfig::new(a.model, a.theta0.clone(), vec![a.n]);
    study.sigma = a.sigma;
    study.sample_rate = a.sample_rate;
    study.grid = match a.grid {
        GridArg::Auto => None,
        GridArg::Reference => Some(InputGrid::Reference),
        GridArg::Log => Some(InputGrid::LogSpaced { lo: 0.01, hi: 20.0 }),
    };
    study.validate(model.as_ref())?;
    let truth = DeviationVector::new(a.theta0.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let data = experiments::simulate(
        model.as_ref(),
        &truth,
        a.n,
        a.sigma,
        study.grid(),
        a.sample_rate,
        &mut rng,
    )?;
    data.save_csv(&a.out)?;
    println!(
        "wrote {} samples ({:.3} s at {} Hz) to {}",
        data.len(),
        data.duration(),
        data.sample_rate,
        a.out.display()
    );
    if let Some(rp) = &a.report {
        let summary = SimulationSummary {
            model: a.model.to_string(),
            params: model.spec().physical_at(&truth)?,
            truth: a.theta0.clone(),
            samples: data.len(),
            sample_rate: data.sample_rate,
            duration: data.duration(),
            sigma: a.sigma,
            seed: a.seed,
            data_path: a.out.display().to_string(),
        };
        let config = json!({"command": "simulate", "study": study, "seed": a.seed});
        let report = RunReport::new(
            echo,
            &config,
            Some(model.spec().name().to_owned()),
            Payload::Simulate(summary),
            MetricsBlock::default(),
            Timestamps::since(started),
        );
        report.save(rp)?;
    }
    Ok(EXIT_OK)
}

fn cmd_bench(a: &BenchArgs, echo: Vec<String>) -> Result<i32> {
    let started = Utc::now();
    let cfg: StudyConfig = read_json(&a.config)?;
    let mut study = experiments::run_study(cfg.study, &cfg)?;
    let benchmark = study.timing.take();
    if let Some(t) = &benchmark {
        println!(
            "LM-Lasso median {:.4} s, simplex median {:.4} s, speedup {:.1}x (target SSE {:.4e}, reached: {})",
            t.lm_median, t.baseline_median, t.speedup, t.target_sse, t.baseline.reached_target
        );
    }
    for c in &study.cells {
        println!(
            "n={} {}: R={} rmse={:.3e} recovery={:.2}",
            c.n, c.method, c.replications, c.rmse_support, c.recovery_rate
        );
    }
    if let Some(s) = study.consistency_slope {
        println!("log-log RMSE slope {s:.3}");
    }
    if let Some(p) = &a.csv {
        let file = std::fs::File::create(p).map_err(|e| Error::input(p, e))?;
        study.write_csv(std::io::BufWriter::new(file))?;
    }
    let lasso = study.cells.iter().rev().find(|c| c.method == "lasso");
    let metrics = MetricsBlock {
        vaf: None,
        bias: lasso.map(|c| c.bias.clone()),
        variance: lasso.map(|c| c.variance.clone()),
        improvement: lasso.and_then(|c| c.variance_improvement),
    };
    let model = cfg.model.to_string();
    let mut timestamps = Timestamps::since(started);
    timestamps.benchmark = benchmark;
    let report = RunReport::new(
        echo,
        &json!({"command": "bench", "study": cfg}),
        Some(model),
        Payload::Study(study),
        metrics,
        timestamps,
    );
    write_report(&report, a.out.as_deref())?;
    Ok(EXIT_OK)
}
