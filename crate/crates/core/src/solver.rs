//! Levenberg–Marquardt outer loop with an L1-ball-constrained step.
//!
//! Each outer iteration linearizes the residuals at the current deviation vector, forms
//! `Λ = JᵀJ + μ·diag(JᵀJ)` and solves the constrained subproblem from [`crate::l1`]. A
//! candidate is accepted only if it strictly decreases the residual sum of squares; then
//! `μ ← μ/ν` and the model is relinearized. Otherwise `μ ← μ·ν` and the subproblem is
//! re-solved at the same linearization. With an infinite radius this is plain LM.

use std::io::Write;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::l1::{self, SubproblemOptions, SubproblemSpec};
use crate::metrics;
use crate::models::{self, NonlinearModel};
use crate::params::DeviationVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub mu0: f64,
    pub nu: f64,
    pub max_outer: usize,
    /// Convergence threshold on the infinity norm of an accepted step.
    pub step_tol: f64,
    /// L1 radius `T_θ` on the normalized deviations; infinite means unregularized.
    #[serde(with = "radius_serde")]
    pub radius: f64,
    pub subproblem_tol: f64,
    pub subproblem_max_iter: usize,
    /// Damping beyond which the solve is reported as stalled.
    pub mu_max: f64,
    /// Deviation magnitude above which a parameter counts as active.
    pub active_threshold: f64,
    pub step_model: StepModel,
}

/// Quadratic model minimized over the L1 ball at every outer iteration.
///
/// Both models share the unconstrained step `θʲ − Λ⁻¹Jᵀr` and differ only when the ball
/// is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepModel {
    /// `‖Λ^½(x − θʲ) + Λ^-½Jᵀr‖²`, the damped Gauss–Newton model. Its constrained fixed
    /// points are first-order points of the constrained least-squares problem.
    #[default]
    GaussNewton,
    /// `‖Λ(x − θʲ) + Jᵀr‖²`, which weights the model error by `Λ²`. With a non-uniform
    /// damping diagonal its constrained fixed points can be non-stationary.
    LambdaSquared,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            mu0: 1e-3,
            nu: 2.0,
            max_outer: 200,
            step_tol: 1e-6,
            radius: f64::INFINITY,
            subproblem_tol: l1::DEFAULT_TOL,
            subproblem_max_iter: l1::DEFAULT_MAX_ITER,
            mu_max: 1e10,
            active_threshold: 1e-3,
            step_model: StepModel::GaussNewton,
        }
    }
}

impl SolverConfig {
    pub fn with_radius(radius: f64) -> Self {
        SolverConfig {
            radius,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Argument(format!("invalid solver config: {what}")));
        if !(self.mu0 > 0.0) {
            return bad("mu0 must be > 0");
        }
        if !(self.nu > 1.0) {
            return bad("nu must be > 1");
        }
        if !(self.step_tol > 0.0 && self.subproblem_tol > 0.0 && self.active_threshold > 0.0) {
            return bad("tolerances must be > 0");
        }
        if !(self.radius >= 0.0) {
            return bad("radius must be >= 0");
        }
        if self.max_outer == 0 || self.subproblem_max_iter == 0 {
            return bad("iteration limits must be >= 1");
        }
        Ok(())
    }
}

/// Serializes an infinite radius as `null`.
pub(crate) mod radius_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &f64, s: S) -> Result<S::Ok, S::Error> {
        if r.is_finite() {
            s.serialize_f64(*r)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    /// Damping exceeded `mu_max` without an acceptable step.
    Stalled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub sse: f64,
    pub mu: f64,
    pub step_inf: f64,
    pub l1_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub deviations: Vec<f64>,
    /// Physical values of the free parameters.
    pub params: Vec<f64>,
    pub sse: f64,
    pub vaf: Option<f64>,
    pub status: SolveStatus,
    pub outer_iters: usize,
    pub rejected_steps: usize,
    /// Accepted iterates; row 0 is the starting point.
    pub trace: Vec<TraceRow>,
    pub active_mask: Vec<bool>,
    #[serde(with = "radius_serde")]
    pub radius: f64,
    /// Seconds spent in [`fit`]; not serialized so reports stay reproducible.
    #[serde(skip)]
    pub wall_time: f64,
}

impl SolveResult {
    pub fn deviation(&self) -> DeviationVector {
        DeviationVector::new(self.deviations.clone())
    }

    pub fn l1_norm(&self) -> f64 {
        self.deviations.iter().map(|v| v.abs()).sum()
    }

    pub fn num_active(&self) -> usize {
        self.active_mask.iter().filter(|&&a| a).count()
    }

    /// Residual sum of squares if the result satisfies its L1 constraint, else infinity.
    pub fn penalized_objective(&self) -> f64 {
        if self.l1_norm() <= self.radius + 1e-9 {
            self.sse
        } else {
            f64::INFINITY
        }
    }

    pub fn write_trace_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        for row in &self.trace {
            out.serialize(row)?;
        }
        out.flush()?;
        Ok(())
    }
}

const EIGEN_FLOOR: f64 = 1e-14;

fn damping_diagonal(jtj: &DMatrix<f64>) -> Vec<f64> {
    let diag: Vec<f64> = jtj.diagonal().iter().copied().collect();
    let floor = diag.iter().fold(0.0f64, |m, &v| m.max(v)) * 1e-12;
    diag.into_iter().map(|v| v.max(floor).max(f64::MIN_POSITIVE)).collect()
}

/// Root and inverse root of a symmetric positive semidefinite matrix. Eigenvalues are
/// floored relative to the largest so rank-deficient `JᵀJ` stays usable.
fn sqrt_pair(lambda: DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let eig = lambda.symmetric_eigen();
    let top = eig.eigenvalues.max();
    if !(top > 0.0) || !top.is_finite() {
        return Err(Error::Argument(format!("Λ has no positive eigenvalue (max {top:e})")));
    }
    let vals = eig.eigenvalues.map(|e| e.max(top * EIGEN_FLOOR));
    let v = &eig.eigenvectors;
    let root = v * DMatrix::from_diagonal(&vals.map(f64::sqrt)) * v.transpose();
    let inv = v * DMatrix::from_diagonal(&vals.map(|e| 1.0 / e.sqrt())) * v.transpose();
    let sym = |m: DMatrix<f64>| (&m + m.transpose()) * 0.5;
    Ok((sym(root), sym(inv)))
}

fn step_subproblem(
    lambda: DMatrix<f64>,
    d: &DVector<f64>,
    jtr: &DVector<f64>,
    cfg: &SolverConfig,
) -> Result<SubproblemSpec> {
    match cfg.step_model {
        StepModel::LambdaSquared => {
            let target = &lambda * d - jtr;
            SubproblemSpec::new(lambda, target, cfg.radius)
        }
        StepModel::GaussNewton => {
            let (root, inv) = sqrt_pair(lambda)?;
            let target = &root * d - inv * jtr;
            SubproblemSpec::new(root, target, cfg.radius)
        }
    }
}

pub fn fit(
    model: &dyn NonlinearModel,
    data: &Dataset,
    init: &DeviationVector,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    cfg.validate()?;
    let started = Instant::now();
    let spec = model.spec();
    if init.len() != spec.dim() {
        return Err(Error::Argument(format!(
            "initial deviation has {} entries, model has {} free parameters",
            init.len(),
            spec.dim()
        )));
    }
    let wrap = |iteration: usize| {
        move |e: Error| Error::Solver {
            iteration,
            source: Box::new(e),
        }
    };

    let init = if init.l1_norm() > cfg.radius {
        log::debug!("initial point outside the L1 ball; projecting");
        DeviationVector::new(l1::project_l1(&init.values, cfg.radius)?)
    } else {
        init.clone()
    };
    let mut d = DVector::from_column_slice(&init.values);
    let mut eval = models::evaluate(model, data, &init).map_err(wrap(0))?;
    let mut sse = eval.sse();
    let mut mu = cfg.mu0;
    let mut trace = vec![TraceRow {
        iter: 0,
        sse,
        mu,
        step_inf: 0.0,
        l1_norm: d.lp_norm(1),
    }];
    let mut rejected = 0;
    let mut status = SolveStatus::MaxIterations;
    let sub_opts = SubproblemOptions {
        tol: cfg.subproblem_tol,
        max_iter: cfg.subproblem_max_iter,
        ..Default::default()
    };

    let mut outer = 0;
    'outer: while outer < cfg.max_outer {
        outer += 1;
        let jt = eval.jacobian.transpose();
        let jtj = &jt * &eval.jacobian;
        let jtr = &jt * DVector::from_column_slice(&eval.residuals);
        let damp = damping_diagonal(&jtj);
        loop {
            if mu > cfg.mu_max {
                status = SolveStatus::Stalled;
                break 'outer;
            }
            let mut lambda = jtj.clone();
            for (k, dk) in damp.iter().enumerate() {
                lambda[(k, k)] += mu * dk;
            }
            let sp = step_subproblem(lambda, &d, &jtr, cfg).map_err(wrap(outer))?;
            let cand = match l1::solve_subproblem_with(&sp, d.as_slice(), &sub_opts) {
                Ok(sol) => sol.x,
                Err(Error::Subproblem { best, residual, .. }) => {
                    log::debug!("subproblem stopped at residual {residual:e}; using best iterate");
                    best
                }
                Err(e) => return Err(wrap(outer)(e)),
            };
            let cand = DVector::from_vec(cand);
            let step_inf = (&cand - &d).amax();
            let small = step_inf < cfg.step_tol;
            if step_inf == 0.0 {
                status = SolveStatus::Converged;
                break 'outer;
            }
            let cand_dev = DeviationVector::new(cand.iter().copied().collect());
            // A step below tolerance ends the solve; it is still taken when it does not hurt.
            let accepted = match models::residuals(model, data, &cand_dev) {
                Ok(r) => {
                    let s = models::sum_squares(&r);
                    (s < sse || (small && s <= sse)).then_some(s)
                }
                Err(e) => {
                    log::debug!("candidate rejected: {e}");
                    None
                }
            };
            match accepted {
                Some(s) => {
                    d = cand;
                    sse = s;
                    mu /= cfg.nu;
                    trace.push(TraceRow {
                        iter: outer,
                        sse,
                        mu,
                        step_inf,
                        l1_norm: d.lp_norm(1),
                    });
                    eval = models::evaluate(model, data, &cand_dev).map_err(wrap(outer))?;
                    if step_inf < cfg.step_tol {
                        status = SolveStatus::Converged;
                        break 'outer;
                    }
                    break;
                }
                None if small => {
                    status = SolveStatus::Converged;
                    break 'outer;
                }
                None => {
                    rejected += 1;
                    mu *= cfg.nu;
                }
            }
        }
    }

    let deviations: Vec<f64> = d.iter().copied().collect();
    let dev = DeviationVector::new(deviations.clone());
    let params = spec.physical_at(&dev)?;
    let vaf = metrics::vaf_from_sse(&data.y, sse).ok();
    Ok(SolveResult {
        active_mask: deviations.iter().map(|v| v.abs() > cfg.active_threshold).collect(),
        deviations,
        params,
        sse,
        vaf,
        status,
        outer_iters: outer,
        rejected_steps: rejected,
        trace,
        radius: cfg.radius,
        wall_time: started.elapsed().as_secs_f64(),
    })
}

/// Initial deviations for a multistart run: the typical point, then uniform draws over the
/// parameter box projected onto the L1 ball.
pub fn multistart_inits(
    model: &dyn NonlinearModel,
    radius: f64,
    n_starts: usize,
    seed: u64,
) -> Result<Vec<DeviationVector>> {
    let typical = model.spec().typical_normalized();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inits = vec![DeviationVector::zeros(typical.len())];
    for _ in 1..n_starts {
        let raw: Vec<f64> = typical.iter().map(|t| rng.random_range(0.0..1.0) - t).collect();
        let proj = if radius.is_finite() {
            l1::project_l1(&raw, radius)?
        } else {
            raw
        };
        inits.push(DeviationVector::new(proj));
    }
    Ok(inits)
}

/// Objectives closer than this fraction of `Σy²` count as tied.
const OBJECTIVE_TIE_RTOL: f64 = 1e-14;

/// Runs [`fit`] from several starts and keeps the feasible result with the smallest
/// residual sum of squares. Near-equal objectives go to the smaller L1 norm, then to the
/// lower start index.
pub fn fit_multistart(
    model: &dyn NonlinearModel,
    data: &Dataset,
    cfg: &SolverConfig,
    n_starts: usize,
    seed: u64,
) -> Result<SolveResult> {
    if n_starts == 0 {
        return Err(Error::Argument("need at least one start".into()));
    }
    let inits = multistart_inits(model, cfg.radius, n_starts, seed)?;
    fit_from_inits(model, data, &inits, cfg)
}

/// Fits from each initialization (in parallel) and keeps the best result by the
/// [`fit_multistart`] ordering.
pub fn fit_from_inits(
    model: &dyn NonlinearModel,
    data: &Dataset,
    inits: &[DeviationVector],
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    if inits.is_empty() {
        return Err(Error::Argument("need at least one start".into()));
    }
    let outcomes: Vec<Result<SolveResult>> = inits.par_iter().map(|init| fit(model, data, init, cfg)).collect();
    let tie = OBJECTIVE_TIE_RTOL * data.y.iter().map(|v| v * v).sum::<f64>();
    let mut best: Option<SolveResult> = None;
    let mut failures = Vec::new();
    for (i, out) in outcomes.into_iter().enumerate() {
        match out {
            Ok(res) => {
                let better = best.as_ref().is_none_or(|b| {
                    let (fr, fb) = (res.penalized_objective(), b.penalized_objective());
                    if fr.is_finite() && fb.is_finite() && (fr - fb).abs() <= tie {
                        res.l1_norm() < b.l1_norm()
                    } else {
                        fr < fb
                    }
                });
                if better {
                    best = Some(res);
                }
            }
            Err(e) => failures.push(format!("start {i}: {e}")),
        }
    }
    best.ok_or(Error::AllStartsFailed(failures))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{ExpSumModel, LinearModel};
    use crate::params::{ParamEntry, ParameterSpec};

    fn linear_problem() -> (LinearModel, Dataset) {
        let n = 60;
        let design = DMatrix::from_fn(n, 4, |i, k| {
            ((i * (k + 1)) as f64 * 0.29 + k as f64).cos() + 0.1 * k as f64
        });
        let spec = ParameterSpec::new(
            "lin4",
            vec![
                ParamEntry::free("c0", -1.0, 1.0),
                ParamEntry::free("c1", 0.0, 4.0),
                ParamEntry::free("c2", -2.0, 2.0).with_typical(0.5),
                ParamEntry::free("c3", 1.0, 3.0),
            ],
        )
        .unwrap();
        let model = LinearModel::new(design, spec).unwrap();
        let x = vec![0.0; n];
        let probe = Dataset::uniform(x.clone(), vec![0.0; n], 1.0).unwrap();
        let mut y = model.predict(&probe, &[0.4, 2.9, -0.7, 2.2]).unwrap();
        for (i, v) in y.iter_mut().enumerate() {
            *v += 0.05 * ((i as f64) * 1.7).sin();
        }
        (model, Dataset::uniform(x, y, 1.0).unwrap())
    }

    /// Scaled design `X·diag(width)` and the offset `y − Xθ̄`.
    fn normalized_system(model: &LinearModel, data: &Dataset) -> (DMatrix<f64>, DVector<f64>) {
        let spec = model.spec();
        let w = spec.widths();
        let a = DMatrix::from_fn(data.len(), spec.dim(), |i, k| model.design()[(i, k)] * w[k]);
        let base = model.design() * DVector::from_vec(spec.typical().values);
        (a, DVector::from_column_slice(&data.y) - base)
    }

    fn projected_gradient_oracle(a: &DMatrix<f64>, b: &DVector<f64>, radius: f64) -> Vec<f64> {
        let h = a.transpose() * a;
        let step = 1.0 / h.clone().symmetric_eigen().eigenvalues.max();
        let mut x = DVector::zeros(a.ncols());
        for _ in 0..200_000 {
            let g = &h * &x - a.transpose() * b;
            let raw: Vec<f64> = (&x - g * step).iter().copied().collect();
            x = DVector::from_vec(l1::project_l1(&raw, radius).unwrap());
        }
        x.iter().copied().collect()
    }

    fn tight() -> SolverConfig {
        SolverConfig {
            step_tol: 1e-12,
            subproblem_tol: 1e-12,
            max_outer: 500,
            ..Default::default()
        }
    }

    #[test]
    fn unregularized_linear_matches_normal_equations() {
        let (model, data) = linear_problem();
        let (a, b) = normalized_system(&model, &data);
        let exact = (a.transpose() * &a).cholesky().unwrap().solve(&(a.transpose() * b));
        let res = fit(&model, &data, &DeviationVector::zeros(4), &tight()).unwrap();
        assert_eq!(res.status, SolveStatus::Converged);
        for (x, e) in res.deviations.iter().zip(exact.iter()) {
            assert!((x - e).abs() < 1e-8, "{x} vs {e}");
        }
    }

    #[test]
    fn constrained_linear_matches_projected_gradient() {
        let (model, data) = linear_problem();
        let (a, b) = normalized_system(&model, &data);
        for radius in [0.05, 0.2, 0.5] {
            let oracle = projected_gradient_oracle(&a, &b, radius);
            let res = fit(
                &model,
                &data,
                &DeviationVector::zeros(4),
                &SolverConfig { radius, ..tight() },
            )
            .unwrap();
            assert!(res.l1_norm() <= radius + 1e-9);
            for (x, e) in res.deviations.iter().zip(&oracle) {
                assert!((x - e).abs() < 1e-6, "radius {radius}: {x} vs {e}");
            }
        }
    }

    #[test]
    fn zero_radius_returns_typical_values_exactly() {
        let (model, data) = linear_problem();
        let res = fit(
            &model,
            &data,
            &DeviationVector::zeros(4),
            &SolverConfig::with_radius(0.0),
        )
        .unwrap();
        assert!(res.deviations.iter().all(|&v| v == 0.0));
        assert_eq!(res.params, model.spec().typical().values);
    }

    #[test]
    fn huge_radius_matches_unregularized() {
        let (model, data) = linear_problem();
        let free = fit(&model, &data, &DeviationVector::zeros(4), &tight()).unwrap();
        let big = fit(
            &model,
            &data,
            &DeviationVector::zeros(4),
            &SolverConfig { radius: 1e6, ..tight() },
        )
        .unwrap();
        for (x, y) in free.deviations.iter().zip(&big.deviations) {
            assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn accepted_iterates_strictly_decrease_sse() {
        let model = ExpSumModel::new(6).unwrap();
        let x: Vec<f64> = (0..300).map(|i| 0.01 * (2000f64).powf(i as f64 / 299.0)).collect();
        let mut truth = vec![0.0; 6];
        truth[0] = 0.3;
        truth[2] = 0.3;
        let probe = Dataset::uniform(x.clone(), vec![0.0; 300], 1.0).unwrap();
        let params = model.spec().physical_at(&DeviationVector::new(truth.clone())).unwrap();
        let y = model.predict(&probe, &params).unwrap();
        let data = Dataset::uniform(x, y, 1.0).unwrap();
        let res = fit(
            &model,
            &data,
            &DeviationVector::zeros(6),
            &SolverConfig { radius: 0.6, ..tight() },
        )
        .unwrap();
        assert!(res.trace.windows(2).all(|w| w[1].sse < w[0].sse));
        assert!(res.trace.iter().all(|row| row.l1_norm <= 0.6 + 1e-9));
        for (x, t) in res.deviations.iter().zip(&truth) {
            assert!((x - t).abs() < 1e-5, "{x} vs {t}");
        }
    }

    #[test]
    fn multistart_is_deterministic() {
        let (model, data) = linear_problem();
        let cfg = SolverConfig::with_radius(0.3);
        let single = fit_multistart(&model, &data, &cfg, 1, 9).unwrap();
        let plain = fit(&model, &data, &DeviationVector::zeros(4), &cfg).unwrap();
        assert_eq!(single.deviations, plain.deviations);
        let a = fit_multistart(&model, &data, &cfg, 5, 9).unwrap();
        let b = fit_multistart(&model, &data, &cfg, 5, 9).unwrap();
        assert_eq!(a.deviations, b.deviations);
        assert_eq!(a.sse, b.sse);
        assert!(fit_multistart(&model, &data, &cfg, 0, 9).is_err());
    }

    #[test]
    fn rejects_bad_config_and_init() {
        let (model, data) = linear_problem();
        let bad = SolverConfig {
            nu: 1.0,
            ..Default::default()
        };
        assert!(fit(&model, &data, &DeviationVector::zeros(4), &bad).is_err());
        assert!(fit(&model, &data, &DeviationVector::zeros(3), &SolverConfig::default()).is_err());
    }

    #[test]
    fn infinite_radius_serializes_as_null() {
        let json = serde_json::to_string(&SolverConfig::default()).unwrap();
        assert!(json.contains("\"radius\":null"));
        let back: SolverConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back.radius, f64::INFINITY);
    }
}
