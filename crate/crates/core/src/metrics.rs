//! Goodness of fit and estimator quality.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Variance accounted for, in percent: `(1 − Σ(y − ŷ)² / Σy²) · 100`.
pub fn vaf(y: &[f64], yhat: &[f64]) -> Result<f64> {
    if y.len() != yhat.len() {
        return Err(Error::Argument(format!(
            "series lengths differ: {} vs {}",
            y.len(),
            yhat.len()
        )));
    }
    let sse: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b) * (a - b)).sum();
    vaf_from_sse(y, sse)
}

pub(crate) fn vaf_from_sse(y: &[f64], sse: f64) -> Result<f64> {
    let energy: f64 = y.iter().map(|v| v * v).sum();
    if !(energy > 0.0) {
        return Err(Error::Metric(
            "VAF is undefined for an all-zero observation series".into(),
        ));
    }
    Ok((1.0 - sse / energy) * 100.0)
}

/// Estimates from R replications of a p-parameter fit, normalized frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationSet {
    pub labels: Vec<String>,
    /// Row-major, one row per replication.
    pub estimates: Vec<Vec<f64>>,
    pub truth: Option<Vec<f64>>,
}

impl ReplicationSet {
    pub fn new(labels: Vec<String>, estimates: Vec<Vec<f64>>, truth: Option<Vec<f64>>) -> Result<Self> {
        if estimates.is_empty() {
            return Err(Error::Argument("replication set is empty".into()));
        }
        if let Some(bad) = estimates.iter().position(|r| r.len() != labels.len()) {
            return Err(Error::Argument(format!(
                "replication {bad} has {} values, expected {}",
                estimates[bad].len(),
                labels.len()
            )));
        }
        if truth.as_ref().is_some_and(|t| t.len() != labels.len()) {
            return Err(Error::Argument("truth length does not match labels".into()));
        }
        Ok(ReplicationSet {
            labels,
            estimates,
            truth,
        })
    }

    pub fn replications(&self) -> usize {
        self.estimates.len()
    }

    fn column(&self, k: usize) -> impl Iterator<Item = f64> + '_ {
        self.estimates.iter().map(move |r| r[k])
    }

    pub fn means(&self) -> Vec<f64> {
        let r = self.replications() as f64;
        (0..self.labels.len())
            .map(|k| self.column(k).sum::<f64>() / r)
            .collect()
    }

    /// Unbiased sample variance of every parameter.
    pub fn variances(&self) -> Result<Vec<f64>> {
        let r = self.replications();
        if r < 2 {
            return Err(Error::Metric(format!(
                "variance needs at least 2 replications, got {r}"
            )));
        }
        let means = self.means();
        Ok((0..self.labels.len())
            .map(|k| self.column(k).map(|v| (v - means[k]).powi(2)).sum::<f64>() / (r - 1) as f64)
            .collect())
    }

    /// `|mean − truth|` for every parameter.
    pub fn biases(&self) -> Result<Vec<f64>> {
        let truth = self
            .truth
            .as_ref()
            .ok_or_else(|| Error::Metric("bias needs a ground truth".into()))?;
        Ok(self.means().iter().zip(truth).map(|(m, t)| (m - t).abs()).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasVariance {
    pub label: String,
    pub bias: f64,
    pub variance: f64,
}

pub fn bias_variance(reps: &ReplicationSet) -> Result<Vec<BiasVariance>> {
    let bias = reps.biases()?;
    let var = reps.variances()?;
    Ok(reps
        .labels
        .iter()
        .zip(bias.into_iter().zip(var))
        .map(|(label, (bias, variance))| BiasVariance {
            label: label.clone(),
            bias,
            variance,
        })
        .collect())
}

/// `(1 − mean_k σ²_reg,k / mean_k σ²_unreg,k) · 100`.
pub fn variance_improvement(regularized: &ReplicationSet, unregularized: &ReplicationSet) -> Result<f64> {
    if regularized.labels != unregularized.labels {
        return Err(Error::Argument("replication sets cover different parameters".into()));
    }
    let mean = |v: Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
    let reg = mean(regularized.variances()?);
    let unreg = mean(unregularized.variances()?);
    if !(unreg > 0.0) {
        return Err(Error::Metric("unregularized variance is zero".into()));
    }
    Ok((1.0 - reg / unreg) * 100.0)
}

/// How often each selected subset occurs, keyed by sorted name tuple.
pub fn subset_frequencies<I, S>(subsets: I) -> BTreeMap<Vec<String>, usize>
where
    I: IntoIterator<Item = S>,
    S: IntoIterator<Item = String>,
{
    let mut freq = BTreeMap::new();
    for s in subsets {
        let mut key: Vec<String> = s.into_iter().collect();
        key.sort();
        *freq.entry(key).or_insert(0) += 1;
    }
    freq
}

/// Pearson correlation between sorted standardized samples and standard normal quantiles
/// at plotting positions `(i − 0.375)/(n + 0.25)`.
pub fn normal_qq_correlation(samples: &[f64]) -> Result<f64> {
    let n = samples.len();
    if n < 3 {
        return Err(Error::Metric(format!("need at least 3 samples, got {n}")));
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let sd = (samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    if !(sd > 0.0) {
        return Err(Error::Metric("samples have zero spread".into()));
    }
    let mut z: Vec<f64> = samples.iter().map(|v| (v - mean) / sd).collect();
    z.sort_by(f64::total_cmp);
    let q: Vec<f64> = (1..=n)
        .map(|i| normal_quantile((i as f64 - 0.375) / (n as f64 + 0.25)))
        .collect();
    Ok(pearson(&z, &q))
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

/// Standard normal quantile (Acklam's rational approximation, |error| < 1.2e-9).
#[allow(clippy::excessive_precision)]
pub fn normal_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const LOW: f64 = 0.02425;
    if p < LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -normal_quantile(1.0 - p)
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Metric("slope needs at least two paired points".into()));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(Error::Metric("log-log slope needs positive values".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    Ok(sxy / sxx)
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
