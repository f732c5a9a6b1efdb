use nalgebra::DMatrix;

use super::NonlinearModel;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::params::{ParamEntry, ParameterSpec};

pub const BOUNDS: (f64, f64) = (0.1, 5.0);

/// Sum of decaying exponentials `f(x) = Σ a_j exp(-b_j x)`, θ = (a_1, b_1, a_2, b_2, ...).
///
/// Typical values keep the terms distinguishable at θ̄: amplitudes are spread evenly over the
/// box (normalized j/(m+1)) and rates geometrically (`lo·(hi/lo)^(j/(m+1))`). Equal typical
/// amplitudes would make swapping two terms cost nothing in the L1 norm.
#[derive(Debug, Clone)]
pub struct ExpSumModel {
    spec: ParameterSpec,
    id: String,
}

impl ExpSumModel {
    pub fn new(p: usize) -> Result<Self> {
        if p < 2 || !p.is_multiple_of(2) {
            return Err(Error::Argument(format!(
                "exponential-sum model needs an even parameter count >= 2, got {p}"
            )));
        }
        let m = p / 2;
        let (lo, hi) = BOUNDS;
        let entries = (1..=m)
            .flat_map(|j| {
                let frac = j as f64 / (m + 1) as f64;
                let amplitude = lo + (hi - lo) * frac;
                let rate = lo * (hi / lo).powf(frac);
                [
                    ParamEntry::free(format!("a{j}"), lo, hi).with_typical(amplitude),
                    ParamEntry::free(format!("b{j}"), lo, hi).with_typical(rate),
                ]
            })
            .collect();
        Ok(ExpSumModel {
            spec: ParameterSpec::new(format!("expsum{p}"), entries)?,
            id: format!("expsum{p}"),
        })
    }

    /// Same functional form over a caller-supplied spec (names and order must match).
    pub fn with_spec(spec: ParameterSpec) -> Result<Self> {
        let base = Self::new(spec.dim())?;
        if spec.free_names() != base.spec.free_names() || spec.dim() != spec.entries().len() {
            return Err(Error::Spec(format!(
                "expsum spec must list free parameters {:?}",
                base.spec.free_names()
            )));
        }
        Ok(ExpSumModel { spec, id: base.id })
    }

    /// Evaluates the sum at a single abscissa.
    pub fn value(params: &[f64], x: f64) -> f64 {
        params.chunks_exact(2).map(|ab| ab[0] * (-ab[1] * x).exp()).sum()
    }
}

impl NonlinearModel for ExpSumModel {
    fn id(&self) -> &str {
        &self.id
    }

    fn spec(&self) -> &ParameterSpec {
        &self.spec
    }

    fn predict(&self, data: &Dataset, params: &[f64]) -> Result<Vec<f64>> {
        Ok(data.x.iter().map(|&x| Self::value(params, x)).collect())
    }

    fn predict_with_gradient(&self, data: &Dataset, params: &[f64]) -> Option<Result<(Vec<f64>, DMatrix<f64>)>> {
        let n = data.len();
        let mut grad = DMatrix::zeros(n, params.len());
        let mut pred = vec![0.0; n];
        for (i, &x) in data.x.iter().enumerate() {
            for (j, ab) in params.chunks_exact(2).enumerate() {
                let e = (-ab[1] * x).exp();
                pred[i] += ab[0] * e;
                grad[(i, 2 * j)] = e;
                grad[(i, 2 * j + 1)] = -ab[0] * x * e;
            }
        }
        Some(Ok((pred, grad)))
    }
}
