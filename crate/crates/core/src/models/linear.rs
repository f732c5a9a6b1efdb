use nalgebra::DMatrix;

use super::NonlinearModel;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::params::ParameterSpec;

/// `y = X θ` with a fixed design matrix; the case where every quantity has a closed form.
#[derive(Debug, Clone)]
pub struct LinearModel {
    design: DMatrix<f64>,
    spec: ParameterSpec,
}

impl LinearModel {
    pub fn new(design: DMatrix<f64>, spec: ParameterSpec) -> Result<Self> {
        if design.ncols() != spec.dim() {
            return Err(Error::Argument(format!(
                "design has {} columns, spec has {} free parameters",
                design.ncols(),
                spec.dim()
            )));
        }
        Ok(LinearModel { design, spec })
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.design
    }

    fn check(&self, data: &Dataset) -> Result<()> {
        if data.len() != self.design.nrows() {
            return Err(Error::Argument(format!(
                "dataset has {} samples, design has {} rows",
                data.len(),
                self.design.nrows()
            )));
        }
        Ok(())
    }
}

impl NonlinearModel for LinearModel {
    fn id(&self) -> &str {
        "linear"
    }

    fn spec(&self) -> &ParameterSpec {
        &self.spec
    }

    fn predict(&self, data: &Dataset, params: &[f64]) -> Result<Vec<f64>> {
        self.check(data)?;
        Ok((&self.design * nalgebra::DVector::from_column_slice(params))
            .iter()
            .copied()
            .collect())
    }

    fn predict_with_gradient(&self, data: &Dataset, params: &[f64]) -> Option<Result<(Vec<f64>, DMatrix<f64>)>> {
        Some(self.predict(data, params).map(|pred| (pred, self.design.clone())))
    }
}
