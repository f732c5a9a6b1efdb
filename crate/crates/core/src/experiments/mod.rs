//! Monte Carlo studies on synthetic data.
//!
//! Every replication draws its own dataset from a ChaCha stream keyed by
//! `(seed, n, replication)`, so a study is a pure function of its config and results do not
//! depend on the number of worker threads.

mod baseline;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{self, Dataset};
use crate::error::{Error, Result};
use crate::metrics::{self, ReplicationSet};
use crate::models::{self, ModelKind, NonlinearModel};
use crate::params::DeviationVector;
use crate::selection::{self, SelectionConfig};
use crate::solver::{self, SolveStatus, SolverConfig};

pub use baseline::{nelder_mead_exact_penalty, BaselineConfig, BaselineResult};

/// Largest tolerated fraction of failed replications.
pub const MAX_FAILURE_FRACTION: f64 = 0.2;

/// Input series `x` of a simulated dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputGrid {
    /// Pseudorandom steps from [`data::generate_reference`].
    Reference,
    /// Log-spaced abscissae on `[lo, hi]`.
    LogSpaced { lo: f64, hi: f64 },
}

impl InputGrid {
    pub fn default_for(model: ModelKind) -> Self {
        match model {
            ModelKind::ExpSum(_) => InputGrid::LogSpaced { lo: 0.01, hi: 20.0 },
            ModelKind::HeadNeck => InputGrid::Reference,
        }
    }
}

/// How the L1 radius of the regularized fit is chosen in each replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum RadiusPolicy {
    Unregularized,
    Fixed {
        radius: f64,
    },
    /// The L1 norm of the true deviations.
    Oracle,
    /// Radius search for `n_star` parameters.
    Select(SelectionConfig),
    /// Fixed penalty weight on `S_n + nλ‖d‖₁`. The weight is set from the known noise level,
    /// `nλ = scale · 2σ · max_k ‖J_k‖` with `J` taken at the truth, and each replication
    /// calibrates its radius until the constraint multiplier equals `nλ`. `scale` defaults
    /// to `sqrt(2 ln 2p)`.
    Penalty {
        #[serde(default)]
        scale: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub model: ModelKind,
    /// True deviations from the typical values, normalized frame.
    pub truth: Vec<f64>,
    pub sample_sizes: Vec<usize>,
    /// Noise standard deviation as a fraction of the clean signal RMS.
    pub sigma: f64,
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    pub radius_policy: RadiusPolicy,
    /// Study run by the `bench` command.
    #[serde(default = "default_study")]
    pub study: StudyKind,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Defaults to a model-specific grid.
    #[serde(default)]
    pub grid: Option<InputGrid>,
    #[serde(default = "default_sample_rate")]
    pub sample_rate: f64,
    /// Fits per replication for the fixed and oracle policies.
    #[serde(default = "default_starts")]
    pub starts: usize,
    /// Magnitude above which an estimated deviation counts as selected.
    #[serde(default = "default_support_threshold")]
    pub support_threshold: f64,
    #[serde(default)]
    pub baseline: BaselineConfig,
}

fn default_study() -> StudyKind {
    StudyKind::Timing
}

fn default_sample_rate() -> f64 {
    60.0
}

fn default_starts() -> usize {
    1
}

fn default_support_threshold() -> f64 {
    1e-3
}

impl StudyConfig {
    pub fn new(model: ModelKind, truth: Vec<f64>, sample_sizes: Vec<usize>) -> Self {
        StudyConfig {
            model,
            truth,
            sample_sizes,
            sigma: 0.01,
            replications: 100,
            seed: 0,
            radius_policy: RadiusPolicy::Oracle,
            study: default_study(),
            solver: SolverConfig::default(),
            grid: None,
            sample_rate: default_sample_rate(),
            starts: default_starts(),
            support_threshold: default_support_threshold(),
            baseline: BaselineConfig::default(),
        }
    }

    pub fn from_json_str(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }

    pub fn grid(&self) -> InputGrid {
        self.grid.unwrap_or_else(|| InputGrid::default_for(self.model))
    }

    pub fn validate(&self, model: &dyn NonlinearModel) -> Result<()> {
        let bad = |m: String| Err(Error::Argument(format!("invalid study config: {m}")));
        let spec = model.spec();
        if self.truth.len() != spec.dim() {
            return bad(format!(
                "truth has {} entries, model has {} free parameters",
                self.truth.len(),
                spec.dim()
            ));
        }
        let typical = spec.typical_normalized();
        for ((name, t), d) in spec.free_names().iter().zip(&typical).zip(&self.truth) {
            if !(t + d >= 0.0 && t + d <= 1.0) {
                return bad(format!("truth for `{name}` leaves the parameter box"));
            }
        }
        if self.replications < 2 {
            return bad("replications must be >= 2".into());
        }
        if self.sample_sizes.is_empty() || self.sample_sizes[0] < 2 {
            return bad("need at least one sample size >= 2".into());
        }
        if self.sample_sizes.windows(2).any(|w| w[1] <= w[0]) {
            return bad("sample sizes must be strictly increasing".into());
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return bad("sigma must be finite and >= 0".into());
        }
        if !(self.sample_rate > 0.0) {
            return bad("sample rate must be > 0".into());
        }
        if self.starts == 0 {
            return bad("starts must be >= 1".into());
        }
        if let InputGrid::LogSpaced { lo, hi } = self.grid() {
            if !(lo > 0.0 && hi > lo) {
                return bad("log grid needs 0 < lo < hi".into());
            }
        }
        match &self.radius_policy {
            RadiusPolicy::Fixed { radius } if !(*radius >= 0.0) => bad("radius must be >= 0".into()),
            RadiusPolicy::Select(sc) => sc.validate(spec.dim()),
            RadiusPolicy::Penalty { scale: Some(z) } if !(*z > 0.0 && z.is_finite()) => {
                bad("penalty scale must be finite and > 0".into())
            }
            _ => Ok(()),
        }?;
        self.solver.validate()
    }

    fn support(&self) -> Vec<usize> {
        (0..self.truth.len()).filter(|&k| self.truth[k] != 0.0).collect()
    }

    fn rng(&self, n: usize, rep: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(((n as u64) << 32) ^ rep as u64);
        rng
    }
}

/// Noisy observations of the model at `truth`: the clean output plus Gaussian noise with
/// standard deviation `sigma` times the clean RMS.
pub fn simulate(
    model: &dyn NonlinearModel,
    truth: &DeviationVector,
    n: usize,
    sigma: f64,
    grid: InputGrid,
    sample_rate: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Dataset> {
    let base = match grid {
        InputGrid::Reference => data::generate_reference(n as f64 / sample_rate, sample_rate, rng.next_u64())?,
        InputGrid::LogSpaced { lo, hi } => {
            let ratio = hi / lo;
            let denom = n.saturating_sub(1).max(1) as f64;
            let x = (0..n).map(|i| lo * ratio.powf(i as f64 / denom)).collect();
            Dataset::uniform(x, vec![0.0; n], sample_rate)?
        }
    };
    let params = model.spec().physical_at(truth)?;
    let clean = model.predict(&base, &params)?;
    let rms = (clean.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    let y = clean
        .iter()
        .map(|v| {
            let z: f64 = StandardNormal.sample(rng);
            v + sigma * rms * z
        })
        .collect();
    base.with_y(y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    BiasVariance,
    Consistency,
    Oracle,
    Timing,
}

/// Aggregates for one sample size and one estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyCell {
    pub n: usize,
    pub method: String,
    /// Replications that produced an estimate.
    pub replications: usize,
    pub failures: usize,
    pub not_converged: usize,
    pub mean: Vec<f64>,
    pub bias: Vec<f64>,
    pub variance: Vec<f64>,
    pub median_bias: f64,
    /// Root mean squared error over the true support.
    pub rmse_support: f64,
    /// Fraction of replications whose selected set equals the true support.
    pub recovery_rate: f64,
    /// Normal QQ correlation per support coordinate; `None` when the estimates do not vary.
    pub qq_correlation: Vec<Option<f64>>,
    /// Against the unregularized cell at the same `n`, when both exist.
    pub variance_improvement: Option<f64>,
    pub median_radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetCount {
    pub subset: Vec<String>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub n: usize,
    pub radius: f64,
    pub repeats: usize,
    pub lm_seconds: Vec<f64>,
    pub baseline_seconds: Vec<f64>,
    pub lm_median: f64,
    pub baseline_median: f64,
    pub speedup: f64,
    pub lm_sse: f64,
    pub target_sse: f64,
    pub baseline: BaselineResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub study: StudyKind,
    pub model: String,
    pub labels: Vec<String>,
    pub truth: Vec<f64>,
    pub support: Vec<String>,
    pub sigma: f64,
    pub seed: u64,
    pub cells: Vec<StudyCell>,
    pub consistency_slope: Option<f64>,
    /// Selected subsets at the largest sample size, most frequent first.
    pub subsets: Vec<SubsetCount>,
    pub most_frequent_subset: Option<Vec<String>>,
    pub timing: Option<TimingReport>,
}

impl StudyReport {
    fn new(kind: StudyKind, model: &dyn NonlinearModel, cfg: &StudyConfig) -> Self {
        let labels = model.spec().free_names();
        StudyReport {
            study: kind,
            model: model.id().to_owned(),
            support: cfg.support().into_iter().map(|k| labels[k].clone()).collect(),
            labels,
            truth: cfg.truth.clone(),
            sigma: cfg.sigma,
            seed: cfg.seed,
            cells: Vec::new(),
            consistency_slope: None,
            subsets: Vec::new(),
            most_frequent_subset: None,
            timing: None,
        }
    }

    pub fn cell(&self, n: usize, method: &str) -> Option<&StudyCell> {
        self.cells.iter().find(|c| c.n == n && c.method == method)
    }

    /// Long-format table `n,method,parameter,mean,bias,variance` for plotting.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        out.write_record(["n", "method", "parameter", "mean", "bias", "variance"])?;
        for c in &self.cells {
            for (k, label) in self.labels.iter().enumerate() {
                out.write_record([
                    c.n.to_string(),
                    c.method.clone(),
                    label.clone(),
                    c.mean[k].to_string(),
                    c.bias[k].to_string(),
                    c.variance[k].to_string(),
                ])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

struct RepFit {
    deviations: Vec<f64>,
    status: SolveStatus,
    radius: f64,
    selected: Option<Vec<String>>,
}

struct Batch {
    fits: Vec<RepFit>,
    failures: Vec<String>,
}

fn fit_replication(
    model: &dyn NonlinearModel,
    cfg: &StudyConfig,
    policy: &RadiusPolicy,
    data: &Dataset,
    rep_seed: u64,
) -> Result<RepFit> {
    let radius = match policy {
        RadiusPolicy::Unregularized => f64::INFINITY,
        RadiusPolicy::Fixed { radius } => *radius,
        RadiusPolicy::Oracle => cfg.truth.iter().map(|v| v.abs()).sum(),
        RadiusPolicy::Penalty { scale } => {
            let (radius, res) = penalty_fit(model, cfg, data, *scale)?;
            return Ok(RepFit {
                deviations: res.deviations,
                status: res.status,
                radius,
                selected: None,
            });
        }
        RadiusPolicy::Select(sc) => {
            let sc = SelectionConfig {
                seed: rep_seed,
                ..sc.clone()
            };
            let out = selection::select(model, data, &sc, &cfg.solver)?;
            return Ok(RepFit {
                deviations: out.result.deviations,
                status: out.result.status,
                radius: out.radius,
                selected: Some(out.selected),
            });
        }
    };
    let solver_cfg = SolverConfig {
        radius,
        ..cfg.solver.clone()
    };
    let inits = solver::multistart_inits(model, radius, cfg.starts, rep_seed)?;
    let res = solver::fit_from_inits(model, data, &inits, &solver_cfg)?;
    Ok(RepFit {
        deviations: res.deviations,
        status: res.status,
        radius,
        selected: None,
    })
}

/// Sup norm of the gradient of `S_n` at `d`. On a solution with an active constraint this is
/// the multiplier of the L1 constraint.
fn gradient_sup(model: &dyn NonlinearModel, data: &Dataset, d: &DeviationVector) -> Result<f64> {
    let eval = models::evaluate(model, data, d)?;
    let r = nalgebra::DVector::from_column_slice(&eval.residuals);
    Ok((eval.jacobian.transpose() * r).amax() * 2.0)
}

/// Target multiplier `nλ` of the penalty policy for one dataset.
fn penalty_weight(model: &dyn NonlinearModel, cfg: &StudyConfig, data: &Dataset, scale: Option<f64>) -> Result<f64> {
    let p = model.spec().dim();
    let scale = scale.unwrap_or_else(|| (2.0 * (2.0 * p as f64).ln()).sqrt());
    let truth = DeviationVector::new(cfg.truth.clone());
    let clean = model.predict(data, &model.spec().physical_at(&truth)?)?;
    let noise_sd = cfg.sigma * (models::sum_squares(&clean) / clean.len() as f64).sqrt();
    let jac = models::evaluate(model, data, &truth)?.jacobian;
    let col = jac.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    Ok(scale * 2.0 * noise_sd * col)
}

/// Radius at which the constrained fit solves the penalized problem of the penalty policy,
/// found by bisection on the monotone multiplier, and the fit at that radius.
fn penalty_fit(
    model: &dyn NonlinearModel,
    cfg: &StudyConfig,
    data: &Dataset,
    scale: Option<f64>,
) -> Result<(f64, solver::SolveResult)> {
    const RADIUS_RTOL: f64 = 1e-9;
    const MAX_BISECTIONS: usize = 200;
    let target = penalty_weight(model, cfg, data, scale)?;
    let init = DeviationVector::zeros(model.spec().dim());
    let fit_at = |radius: f64| {
        let sc = SolverConfig {
            radius,
            ..cfg.solver.clone()
        };
        solver::fit(model, data, &init, &sc)
    };
    let free = fit_at(f64::INFINITY)?;
    let mut hi = free.l1_norm();
    let mut lo = 0.0;
    let mut best = (hi, free);
    if gradient_sup(model, data, &init)? <= target {
        return Ok((0.0, fit_at(0.0)?));
    }
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= RADIUS_RTOL * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let res = fit_at(mid)?;
        if gradient_sup(model, data, &res.deviation())? > target {
            lo = mid;
        } else {
            hi = mid;
            best = (mid, res);
        }
    }
    Ok(best)
}

fn run_batch(
    model: &dyn NonlinearModel,
    cfg: &StudyConfig,
    n: usize,
    policies: &[&RadiusPolicy],
) -> Result<Vec<Batch>> {
    let truth = DeviationVector::new(cfg.truth.clone());
    let grid = cfg.grid();
    let per_rep: Vec<Vec<Result<RepFit>>> = (0..cfg.replications)
        .into_par_iter()
        .map(|rep| {
            let mut rng = cfg.rng(n, rep);
            let rep_seed = rng.next_u64();
            match simulate(model, &truth, n, cfg.sigma, grid, cfg.sample_rate, &mut rng) {
                Ok(data) => policies
                    .iter()
                    .map(|p| fit_replication(model, cfg, p, &data, rep_seed))
                    .collect(),
                Err(e) => policies.iter().map(|_| Err(Error::Argument(e.to_string()))).collect(),
            }
        })
        .collect();

    let mut batches: Vec<Batch> = policies
        .iter()
        .map(|_| Batch {
            fits: Vec::new(),
            failures: Vec::new(),
        })
        .collect();
    for (rep, outs) in per_rep.into_iter().enumerate() {
        for (b, out) in batches.iter_mut().zip(outs) {
            match out {
                Ok(f) => b.fits.push(f),
                Err(e) => {
                    log::warn!("n={n} replication {rep} failed: {e}");
                    b.failures.push(format!("replication {rep}: {e}"));
                }
            }
        }
    }
    let total = cfg.replications;
    for b in &batches {
        if b.failures.len() as f64 > MAX_FAILURE_FRACTION * total as f64 || b.fits.is_empty() {
            return Err(Error::Study {
                failed: b.failures.len(),
                total,
            });
        }
    }
    Ok(batches)
}

fn summarize(cfg: &StudyConfig, labels: &[String], n: usize, method: &str, batch: &Batch) -> Result<StudyCell> {
    let estimates: Vec<Vec<f64>> = batch.fits.iter().map(|f| f.deviations.clone()).collect();
    let reps = ReplicationSet::new(labels.to_vec(), estimates, Some(cfg.truth.clone()))?;
    let r = reps.replications();
    let bias = reps.biases()?;
    let variance = if r >= 2 {
        reps.variances()?
    } else {
        vec![0.0; labels.len()]
    };
    let support = cfg.support();
    let mut sq = 0.0;
    for row in &reps.estimates {
        for &k in &support {
            sq += (row[k] - cfg.truth[k]).powi(2);
        }
    }
    let rmse_support = if support.is_empty() {
        0.0
    } else {
        (sq / (r * support.len()) as f64).sqrt()
    };
    let recovered = reps
        .estimates
        .iter()
        .filter(|row| (0..row.len()).all(|k| (row[k].abs() > cfg.support_threshold) == (cfg.truth[k] != 0.0)))
        .count();
    let qq_correlation = support
        .iter()
        .map(|&k| {
            let col: Vec<f64> = reps.estimates.iter().map(|row| row[k]).collect();
            metrics::normal_qq_correlation(&col).ok()
        })
        .collect();
    let radii: Vec<f64> = batch.fits.iter().map(|f| f.radius).filter(|v| v.is_finite()).collect();
    Ok(StudyCell {
        n,
        method: method.to_owned(),
        replications: r,
        failures: batch.failures.len(),
        not_converged: batch.fits.iter().filter(|f| f.status != SolveStatus::Converged).count(),
        mean: reps.means(),
        median_bias: metrics::median(&bias),
        bias,
        variance,
        rmse_support,
        recovery_rate: recovered as f64 / r as f64,
        qq_correlation,
        variance_improvement: None,
        median_radius: (!radii.is_empty()).then(|| metrics::median(&radii)),
    })
}

fn record_subsets(report: &mut StudyReport, batch: &Batch) {
    let chosen: Vec<Vec<String>> = batch.fits.iter().filter_map(|f| f.selected.clone()).collect();
    if chosen.is_empty() {
        return;
    }
    let mut counts: Vec<SubsetCount> = metrics::subset_frequencies(chosen)
        .into_iter()
        .map(|(subset, count)| SubsetCount { subset, count })
        .collect();
    counts.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.subset.cmp(&b.subset)));
    report.most_frequent_subset = counts.first().map(|c| c.subset.clone());
    report.subsets = counts;
}

fn method_name(policy: &RadiusPolicy) -> &'static str {
    match policy {
        RadiusPolicy::Unregularized => "unregularized",
        _ => "lasso",
    }
}

fn build_model(cfg: &StudyConfig) -> Result<Box<dyn NonlinearModel>> {
    let model = cfg.model.build(None)?;
    cfg.validate(model.as_ref())?;
    Ok(model)
}

/// Regularized and unregularized fits of the same replications; bias, variance and the
/// variance improvement of the regularized estimator per sample size.
pub fn run_bias_variance_study(cfg: &StudyConfig) -> Result<StudyReport> {
    let model = build_model(cfg)?;
    let mut report = StudyReport::new(StudyKind::BiasVariance, model.as_ref(), cfg);
    let unreg = RadiusPolicy::Unregularized;
    for &n in &cfg.sample_sizes {
        let batches = run_batch(model.as_ref(), cfg, n, &[&cfg.radius_policy, &unreg])?;
        let mut reg_cell = summarize(cfg, &report.labels, n, "lasso", &batches[0])?;
        let unreg_cell = summarize(cfg, &report.labels, n, "unregularized", &batches[1])?;
        let reg_set = ReplicationSet::new(
            report.labels.clone(),
            batches[0].fits.iter().map(|f| f.deviations.clone()).collect(),
            None,
        )?;
        let unreg_set = ReplicationSet::new(
            report.labels.clone(),
            batches[1].fits.iter().map(|f| f.deviations.clone()).collect(),
            None,
        )?;
        reg_cell.variance_improvement = metrics::variance_improvement(&reg_set, &unreg_set).ok();
        if n == *cfg.sample_sizes.last().unwrap() {
            record_subsets(&mut report, &batches[0]);
        }
        report.cells.push(reg_cell);
        report.cells.push(unreg_cell);
    }
    Ok(report)
}

/// RMSE on the true support per sample size and its log-log slope against `n`.
pub fn run_consistency_study(cfg: &StudyConfig) -> Result<StudyReport> {
    let model = build_model(cfg)?;
    let sizes = &cfg.sample_sizes;
    if sizes.len() < 3 || sizes[sizes.len() - 1] < 4 * sizes[0] {
        return Err(Error::Argument(
            "consistency study needs >= 3 sample sizes spanning at least 4x".into(),
        ));
    }
    if cfg.support().is_empty() {
        return Err(Error::Argument("consistency study needs a nonzero truth".into()));
    }
    let mut report = StudyReport::new(StudyKind::Consistency, model.as_ref(), cfg);
    let method = method_name(&cfg.radius_policy);
    for &n in sizes {
        let batches = run_batch(model.as_ref(), cfg, n, &[&cfg.radius_policy])?;
        report
            .cells
            .push(summarize(cfg, &report.labels, n, method, &batches[0])?);
    }
    let ns: Vec<f64> = sizes.iter().map(|&n| n as f64).collect();
    let rmse: Vec<f64> = report.cells.iter().map(|c| c.rmse_support).collect();
    report.consistency_slope = metrics::log_log_slope(&ns, &rmse).ok();
    Ok(report)
}

/// Exact-support recovery rate and normality of the support estimates per sample size.
pub fn run_oracle_study(cfg: &StudyConfig) -> Result<StudyReport> {
    let model = build_model(cfg)?;
    let s = cfg.support().len();
    if s == 0 || s >= cfg.truth.len() {
        return Err(Error::Argument("oracle study needs a support of size 0 < s < p".into()));
    }
    let mut report = StudyReport::new(StudyKind::Oracle, model.as_ref(), cfg);
    let method = method_name(&cfg.radius_policy);
    for &n in &cfg.sample_sizes {
        let batches = run_batch(model.as_ref(), cfg, n, &[&cfg.radius_policy])?;
        if n == *cfg.sample_sizes.last().unwrap() {
            record_subsets(&mut report, &batches[0]);
        }
        report
            .cells
            .push(summarize(cfg, &report.labels, n, method, &batches[0])?);
    }
    Ok(report)
}

/// Wall-clock comparison of the LM-Lasso fit with the simplex exact-penalty baseline on one
/// dataset of the first sample size. The baseline clock stops once it matches the LM
/// residual sum of squares within `baseline.match_rtol`.
pub fn run_timing_benchmark(cfg: &StudyConfig) -> Result<StudyReport> {
    let model = build_model(cfg)?;
    let model = model.as_ref();
    let n = cfg.sample_sizes[0];
    let mut rng = cfg.rng(n, 0);
    let rep_seed = rng.next_u64();
    let truth = DeviationVector::new(cfg.truth.clone());
    let data = simulate(model, &truth, n, cfg.sigma, cfg.grid(), cfg.sample_rate, &mut rng)?;
    let radius = match &cfg.radius_policy {
        RadiusPolicy::Unregularized => f64::INFINITY,
        RadiusPolicy::Fixed { radius } => *radius,
        RadiusPolicy::Oracle => truth.l1_norm(),
        RadiusPolicy::Penalty { scale } => penalty_fit(model, cfg, &data, *scale)?.0,
        RadiusPolicy::Select(_) => fit_replication(model, cfg, &cfg.radius_policy, &data, rep_seed)?.radius,
    };
    let repeats = cfg.baseline.repeats.max(1);
    let solver_cfg = SolverConfig {
        radius,
        ..cfg.solver.clone()
    };
    let init = DeviationVector::zeros(model.spec().dim());
    let mut lm_seconds = Vec::with_capacity(repeats);
    let mut lm_sse = f64::NAN;
    for _ in 0..repeats {
        let started = std::time::Instant::now();
        let res = solver::fit(model, &data, &init, &solver_cfg)?;
        lm_seconds.push(started.elapsed().as_secs_f64());
        lm_sse = res.sse;
    }
    let target_sse = lm_sse * (1.0 + cfg.baseline.match_rtol);
    let mut baseline_seconds = Vec::with_capacity(repeats);
    let mut last = None;
    for _ in 0..repeats {
        let res = nelder_mead_exact_penalty(model, &data, radius, target_sse, &cfg.baseline)?;
        baseline_seconds.push(res.seconds);
        last = Some(res);
    }
    let lm_median = metrics::median(&lm_seconds);
    let baseline_median = metrics::median(&baseline_seconds);
    let mut report = StudyReport::new(StudyKind::Timing, model, cfg);
    report.timing = Some(TimingReport {
        n,
        radius,
        repeats,
        lm_seconds,
        baseline_seconds,
        lm_median,
        baseline_median,
        speedup: baseline_median / lm_median,
        lm_sse,
        target_sse,
        baseline: last.expect("at least one repeat"),
    });
    Ok(report)
}

/// Dispatches on the study kind.
pub fn run_study(kind: StudyKind, cfg: &StudyConfig) -> Result<StudyReport> {
    match kind {
        StudyKind::BiasVariance => run_bias_variance_study(cfg),
        StudyKind::Consistency => run_consistency_study(cfg),
        StudyKind::Oracle => run_oracle_study(cfg),
        StudyKind::Timing => run_timing_benchmark(cfg),
    }
}
