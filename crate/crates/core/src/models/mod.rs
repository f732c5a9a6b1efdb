//! Nonlinear model interface, residual/Jacobian evaluation and the bundled models.

pub mod dual;
mod expsum;
mod headneck;
mod linear;
pub mod lti;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

pub use expsum::ExpSumModel;
pub use headneck::{HeadNeckModel, PARAM_NAMES as HEADNECK_PARAMS};
pub use linear::LinearModel;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::params::{DeviationVector, ParameterSpec};

/// Central-difference step in normalized coordinates.
pub const FD_STEP: f64 = 1e-6;

pub trait NonlinearModel: Send + Sync {
    fn id(&self) -> &str;

    fn spec(&self) -> &ParameterSpec;

    /// Model output for every sample of `data` at physical free-parameter values `params`.
    fn predict(&self, data: &Dataset, params: &[f64]) -> Result<Vec<f64>>;

    /// Prediction together with `∂f/∂θ` in physical coordinates (n × p), when the model
    /// can supply exact derivatives. `None` selects the finite-difference fallback.
    fn predict_with_gradient(&self, _data: &Dataset, _params: &[f64]) -> Option<Result<(Vec<f64>, DMatrix<f64>)>> {
        None
    }
}

/// Residuals `y - f` and their Jacobian with respect to the normalized deviations.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelEval {
    pub residuals: Vec<f64>,
    pub jacobian: DMatrix<f64>,
}

impl ModelEval {
    pub fn sse(&self) -> f64 {
        sum_squares(&self.residuals)
    }
}

pub(crate) fn sum_squares(v: &[f64]) -> f64 {
    v.iter().map(|r| r * r).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JacobianMode {
    /// Exact derivatives when the model provides them, central differences otherwise.
    #[default]
    Auto,
    FiniteDifference,
}

/// Residual vector `y - f(x; θ̄ + d)`.
pub fn residuals(model: &dyn NonlinearModel, data: &Dataset, d: &DeviationVector) -> Result<Vec<f64>> {
    let params = model.spec().physical_at(d)?;
    let pred = model.predict(data, &params)?;
    finite_residuals(data, &pred, &params)
}

fn finite_residuals(data: &Dataset, pred: &[f64], params: &[f64]) -> Result<Vec<f64>> {
    if pred.len() != data.len() {
        return Err(Error::Evaluation {
            params: params.to_vec(),
            reason: format!("prediction has {} samples, data has {}", pred.len(), data.len()),
        });
    }
    let r: Vec<f64> = data.y.iter().zip(pred).map(|(y, f)| y - f).collect();
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::Evaluation {
            params: params.to_vec(),
            reason: "non-finite prediction".into(),
        });
    }
    Ok(r)
}

pub fn evaluate(model: &dyn NonlinearModel, data: &Dataset, d: &DeviationVector) -> Result<ModelEval> {
    evaluate_with(model, data, d, JacobianMode::Auto)
}

pub fn evaluate_with(
    model: &dyn NonlinearModel,
    data: &Dataset,
    d: &DeviationVector,
    mode: JacobianMode,
) -> Result<ModelEval> {
    let spec = model.spec();
    let params = spec.physical_at(d)?;
    let widths = spec.widths();
    if mode == JacobianMode::Auto {
        if let Some(res) = model.predict_with_gradient(data, &params) {
            let (pred, grad) = res?;
            let residuals = finite_residuals(data, &pred, &params)?;
            let mut jacobian = grad;
            for (k, mut col) in jacobian.column_iter_mut().enumerate() {
                let w = widths[k];
                col.iter_mut().for_each(|v| *v = -(*v * w));
            }
            if jacobian.iter().any(|v| !v.is_finite()) {
                return Err(Error::Evaluation {
                    params,
                    reason: "non-finite Jacobian".into(),
                });
            }
            return Ok(ModelEval { residuals, jacobian });
        }
    }
    let residuals = residuals(model, data, d)?;
    let jacobian = finite_difference_jacobian(model, data, d)?;
    Ok(ModelEval { residuals, jacobian })
}

/// Central differences of the residuals in normalized-deviation coordinates.
pub fn finite_difference_jacobian(
    model: &dyn NonlinearModel,
    data: &Dataset,
    d: &DeviationVector,
) -> Result<DMatrix<f64>> {
    let p = d.len();
    let mut jac = DMatrix::zeros(data.len(), p);
    let mut probe = d.clone();
    for k in 0..p {
        probe.values[k] = d.values[k] + FD_STEP;
        let plus = residuals(model, data, &probe)?;
        probe.values[k] = d.values[k] - FD_STEP;
        let minus = residuals(model, data, &probe)?;
        probe.values[k] = d.values[k];
        for (i, (a, b)) in plus.iter().zip(&minus).enumerate() {
            jac[(i, k)] = (a - b) / (2.0 * FD_STEP);
        }
    }
    Ok(jac)
}

/// Identifier of a bundled model, as used on the command line and in study configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    ExpSum(usize),
    HeadNeck,
}

impl ModelKind {
    pub fn build(self, spec: Option<ParameterSpec>) -> Result<Box<dyn NonlinearModel>> {
        Ok(match (self, spec) {
            (ModelKind::ExpSum(p), None) => Box::new(ExpSumModel::new(p)?),
            (ModelKind::ExpSum(p), Some(spec)) => {
                if spec.dim() != p {
                    return Err(Error::Spec(format!(
                        "expsum{p} needs {p} free parameters, spec has {}",
                        spec.dim()
                    )));
                }
                Box::new(ExpSumModel::with_spec(spec)?)
            }
            (ModelKind::HeadNeck, None) => Box::new(HeadNeckModel::new()),
            (ModelKind::HeadNeck, Some(spec)) => Box::new(HeadNeckModel::with_spec(spec)?),
        })
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelKind::ExpSum(p) => write!(f, "expsum{p}"),
            ModelKind::HeadNeck => f.write_str("headneck"),
        }
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "headneck" {
            return Ok(ModelKind::HeadNeck);
        }
        if let Some(p) = s.strip_prefix("expsum") {
            let p = p.parse().map_err(|_| Error::Argument(format!("bad model id `{s}`")))?;
            ExpSumModel::new(p)?;
            return Ok(ModelKind::ExpSum(p));
        }
        Err(Error::Argument(format!(
            "unknown model `{s}` (expected `headneck` or `expsum<p>`)"
        )))
    }
}

impl serde::Serialize for ModelKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for ModelKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
