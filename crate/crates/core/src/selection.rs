//! Radius search for a target number of sensitive parameters.
//!
//! Each round fits at the current radius and counts the deviations above the selection
//! threshold. The radius moves by `(count − n*)/(p + n*)` until the count first crosses the
//! target, then bisects between the bracketing radii.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::l1;
use crate::metrics;
use crate::models::NonlinearModel;
use crate::params::DeviationVector;
use crate::solver::{self, SolveResult, SolverConfig};

const BRACKET_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionConfig {
    pub n_star: usize,
    pub t_init: f64,
    pub select_threshold: f64,
    pub max_rounds: usize,
    /// Denominator of the radius update; `None` uses `p + n*`.
    pub step_denominator: Option<f64>,
    /// Fits per round: the warm start plus `starts − 1` random feasible starts.
    pub starts: usize,
    /// Seed for the random starts.
    pub seed: u64,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            n_star: 1,
            t_init: 1.0,
            select_threshold: 1e-3,
            max_rounds: 100,
            step_denominator: None,
            starts: 1,
            seed: 0,
        }
    }
}

impl SelectionConfig {
    pub fn new(n_star: usize) -> Self {
        SelectionConfig {
            n_star,
            ..Default::default()
        }
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        if self.n_star == 0 || self.n_star > p {
            return Err(Error::InfeasibleTarget {
                n_star: self.n_star,
                num_params: p,
            });
        }
        if !(self.select_threshold > 0.0) {
            return Err(Error::Argument("selection threshold must be > 0".into()));
        }
        if !(self.t_init >= 0.0 && self.t_init.is_finite()) {
            return Err(Error::Argument("initial radius must be finite and >= 0".into()));
        }
        if self.starts == 0 {
            return Err(Error::Argument("starts must be >= 1".into()));
        }
        if self.max_rounds == 0 {
            return Err(Error::Argument("max_rounds must be >= 1".into()));
        }
        if self.step_denominator.is_some_and(|d| !(d > 0.0)) {
            return Err(Error::Argument("step denominator must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub radius: f64,
    pub num_params: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionOutcome {
    pub radius: f64,
    pub selected: Vec<String>,
    pub result: SolveResult,
    pub rounds: usize,
    pub round_trace: Vec<RoundRecord>,
}

fn count_above(d: &[f64], threshold: f64) -> usize {
    d.iter().filter(|v| v.abs() > threshold).count()
}

pub fn select(
    model: &dyn NonlinearModel,
    data: &Dataset,
    cfg: &SelectionConfig,
    solver_cfg: &SolverConfig,
) -> Result<SelectionOutcome> {
    let spec = model.spec();
    let p = spec.dim();
    cfg.validate(p)?;
    let n_star = cfg.n_star as f64;
    let denom = cfg.step_denominator.unwrap_or((p + cfg.n_star) as f64);

    let mut radius = cfg.t_init;
    // Largest radius known to select too few, smallest known to select too many.
    let mut too_few: Option<f64> = None;
    let mut too_many: Option<f64> = None;
    let mut trace: Vec<RoundRecord> = Vec::new();
    let mut warm = DeviationVector::zeros(p);

    for round in 1..=cfg.max_rounds {
        let run_cfg = SolverConfig {
            radius,
            ..solver_cfg.clone()
        };
        let mut inits = solver::multistart_inits(model, radius, cfg.starts, cfg.seed.wrapping_add(round as u64))?;
        inits[0] = DeviationVector::new(l1::project_l1(&warm.values, radius)?);
        let result = solver::fit_from_inits(model, data, &inits, &run_cfg)?;
        let count = count_above(&result.deviations, cfg.select_threshold);
        log::debug!("selection round {round}: radius {radius:.6}, {count} parameters");
        if let Some(prev) = trace.last() {
            if prev.radius > radius && count > prev.num_params {
                log::debug!("selection count rose after shrinking the radius");
            }
        }
        trace.push(RoundRecord {
            round,
            radius,
            num_params: count,
        });

        if count == cfg.n_star {
            let selected = spec
                .free_names()
                .into_iter()
                .zip(&result.deviations)
                .filter(|(_, d)| d.abs() > cfg.select_threshold)
                .map(|(n, _)| n.to_owned())
                .collect();
            return Ok(SelectionOutcome {
                radius,
                selected,
                result,
                rounds: round,
                round_trace: trace,
            });
        }
        if count > cfg.n_star {
            if radius == 0.0 {
                return Err(Error::InfeasibleTarget {
                    n_star: cfg.n_star,
                    num_params: p,
                });
            }
            too_many = Some(too_many.map_or(radius, |t: f64| t.min(radius)));
        } else {
            too_few = Some(too_few.map_or(radius, |t: f64| t.max(radius)));
        }
        warm = result.deviation();
        radius = match (too_few, too_many) {
            // The count jumps over n* inside a bracket that can no longer shrink.
            (Some(lo), Some(hi)) if hi - lo <= BRACKET_RTOL * hi => break,
            (Some(lo), Some(hi)) => 0.5 * (lo + hi),
            _ => (radius - (count as f64 - n_star) / denom).max(0.0),
        };
    }
    Err(Error::SelectionExhausted {
        n_star: cfg.n_star,
        rounds: trace.len(),
        trace: trace.iter().map(|r| (r.radius, r.num_params)).collect(),
    })
}

/// Subset occurring most often across outcomes; ties go to the lexicographically smallest
/// sorted name tuple.
pub fn most_frequent_subset(outcomes: &[SelectionOutcome]) -> Result<Vec<String>> {
    if outcomes.is_empty() {
        return Err(Error::Argument("no selection outcomes".into()));
    }
    let n = outcomes[0].selected.len();
    if outcomes.iter().any(|o| o.selected.len() != n) {
        return Err(Error::Argument(
            "outcomes select different numbers of parameters".into(),
        ));
    }
    let freq = metrics::subset_frequencies(outcomes.iter().map(|o| o.selected.clone()));
    let best = freq.values().copied().max().unwrap_or(0);
    Ok(freq
        .into_iter()
        .find(|(_, c)| *c == best)
        .map(|(k, _)| k)
        .unwrap_or_default())
}
