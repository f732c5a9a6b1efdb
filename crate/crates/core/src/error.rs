use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("invalid parameter spec: {0}")]
    Spec(String),

    #[error("invalid dataset: {0}")]
    Dataset(String),

    #[error("expected a {expected} vector, got {found}")]
    FrameMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("model evaluation failed at {params:?}: {reason}")]
    Evaluation { params: Vec<f64>, reason: String },

    #[error("subproblem did not converge after {iterations} iterations (residual {residual:e})")]
    Subproblem {
        iterations: usize,
        residual: f64,
        best: Vec<f64>,
    },

    #[error("solver failed at outer iteration {iteration}: {source}")]
    Solver {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("all {} starts failed: {}", .0.len(), .0.join("; "))]
    AllStartsFailed(Vec<String>),

    #[error("selection did not reach n*={n_star} within {rounds} rounds")]
    SelectionExhausted {
        n_star: usize,
        rounds: usize,
        trace: Vec<(f64, usize)>,
    },

    #[error("target n*={n_star} is infeasible for a model with {num_params} free parameters")]
    InfeasibleTarget { n_star: usize, num_params: usize },

    #[error("metric undefined: {0}")]
    Metric(String),

    #[error("study failed: {failed} of {total} replications failed")]
    Study { failed: usize, total: usize },

    #[error("{path}: {message}")]
    Input { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn input(path: impl Into<PathBuf>, message: impl std::fmt::Display) -> Self {
        Error::Input {
            path: path.into(),
            message: message.to_string(),
        }
    }
}
