//! Derivative-free baseline: Nelder–Mead on the residual sum of squares plus an exact
//! penalty `w·max(0, ‖d‖₁ − T)`, with `w` doubled until the optimum is feasible. A simplex
//! that collapses before reaching the target is rebuilt around its best vertex.

use std::cell::Cell;
use std::time::Instant;

use argmin::core::{CostFunction, Executor, State};
use argmin::solver::neldermead::NelderMead;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::models::{self, NonlinearModel};
use crate::params::DeviationVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineConfig {
    /// Edge length of the initial simplex in normalized units.
    pub simplex_step: f64,
    /// Iteration cap of each simplex run.
    pub max_iters: u64,
    /// Total model evaluations before the baseline gives up.
    pub max_evaluations: usize,
    /// Spread of vertex costs below which a run counts as collapsed.
    pub sd_tolerance: f64,
    /// Doublings of the penalty weight before giving up on feasibility.
    pub max_doublings: usize,
    /// Initial weight as a fraction of the residual sum of squares at the typical values.
    pub initial_weight: f64,
    /// L1 excess accepted as feasible.
    pub feasibility_tol: f64,
    /// Relative slack on the target residual sum of squares.
    pub match_rtol: f64,
    /// Timed repeats of each solver.
    pub repeats: usize,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            simplex_step: 0.05,
            max_iters: 20_000,
            max_evaluations: 1_000_000,
            sd_tolerance: 1e-14,
            max_doublings: 30,
            initial_weight: 1.0,
            feasibility_tol: 1e-6,
            match_rtol: 0.01,
            repeats: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineResult {
    pub deviations: Vec<f64>,
    pub sse: f64,
    pub l1_norm: f64,
    pub feasible: bool,
    /// Whether the target residual sum of squares was reached while feasible.
    pub reached_target: bool,
    pub penalty_weight: f64,
    pub simplex_runs: usize,
    pub iterations: u64,
    pub evaluations: usize,
    pub seconds: f64,
}

struct Penalized<'a> {
    model: &'a dyn NonlinearModel,
    data: &'a Dataset,
    radius: f64,
    weight: f64,
    evaluations: &'a Cell<usize>,
}

impl Penalized<'_> {
    fn sse(&self, d: &[f64]) -> f64 {
        self.evaluations.set(self.evaluations.get() + 1);
        models::residuals(self.model, self.data, &DeviationVector::new(d.to_vec()))
            .map(|r| models::sum_squares(&r))
            .unwrap_or(f64::INFINITY)
    }
}

impl CostFunction for Penalized<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, d: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        let excess = (d.iter().map(|v| v.abs()).sum::<f64>() - self.radius).max(0.0);
        Ok(self.sse(d) + self.weight * excess)
    }
}

/// Minimizes the penalized objective from the typical values until a feasible point with
/// residual sum of squares at most `target_sse` is found or the evaluation budget runs out.
/// Each simplex run stops early once the penalized cost reaches the target; the weight
/// doubles after any run that ends infeasible. Not reaching the target is reported in the
/// result, not as an error.
pub fn nelder_mead_exact_penalty(
    model: &dyn NonlinearModel,
    data: &Dataset,
    radius: f64,
    target_sse: f64,
    cfg: &BaselineConfig,
) -> Result<BaselineResult> {
    if !(radius >= 0.0) {
        return Err(Error::Argument("radius must be >= 0".into()));
    }
    if !(cfg.simplex_step > 0.0) || cfg.max_iters == 0 {
        return Err(Error::Argument("invalid baseline config".into()));
    }
    let started = Instant::now();
    let p = model.spec().dim();
    let evaluations = Cell::new(0);
    let mut x = vec![0.0; p];
    let mut problem = Penalized {
        model,
        data,
        radius,
        weight: 0.0,
        evaluations: &evaluations,
    };
    problem.weight = cfg.initial_weight * problem.sse(&x).max(f64::MIN_POSITIVE);
    let mut runs = 0;
    let mut doublings = 0;
    let mut iterations = 0;
    loop {
        let simplex: Vec<Vec<f64>> = std::iter::once(x.clone())
            .chain((0..p).map(|k| {
                let mut v = x.clone();
                v[k] += cfg.simplex_step;
                v
            }))
            .collect();
        let solver = NelderMead::new(simplex)
            .with_sd_tolerance(cfg.sd_tolerance)
            .map_err(|e| Error::Argument(e.to_string()))?;
        let weight = problem.weight;
        let out = Executor::new(problem, solver)
            .configure(|s| s.max_iters(cfg.max_iters).target_cost(target_sse))
            .run()
            .map_err(|e| Error::Argument(format!("simplex run failed: {e}")))?;
        runs += 1;
        iterations += out.state().get_iter();
        x = out
            .state()
            .get_best_param()
            .cloned()
            .ok_or_else(|| Error::Argument("simplex run returned no point".into()))?;
        problem = out.problem.problem.expect("executor returns the problem");
        let sse = problem.sse(&x);
        let l1: f64 = x.iter().map(|v| v.abs()).sum();
        let feasible = l1 <= radius + cfg.feasibility_tol;
        let reached = feasible && sse <= target_sse;
        if !feasible {
            doublings += 1;
        }
        let out_of_budget = evaluations.get() >= cfg.max_evaluations;
        if reached || out_of_budget || doublings > cfg.max_doublings {
            log::debug!("simplex baseline: weight {weight:e}, {runs} runs, sse {sse:e}");
            return Ok(BaselineResult {
                deviations: x,
                sse,
                l1_norm: l1,
                feasible,
                reached_target: reached,
                penalty_weight: weight,
                simplex_runs: runs,
                iterations,
                evaluations: evaluations.get(),
                seconds: started.elapsed().as_secs_f64(),
            });
        }
        if !feasible {
            problem.weight *= 2.0;
        }
    }
}
