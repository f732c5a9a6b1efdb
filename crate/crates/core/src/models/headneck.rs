//! Surrogate closed-loop head-neck position tracking model.
//!
//! Block structure, all discretized with the bilinear map at the dataset sample rate:
//!
//! ```text
//!   r ─(+)─ e ─ delay τ ─ G_VIS·K_vis·(τ_CNS1 s+1)/(τ_CNS2 s+1) ──┐
//!      │-                                                         │
//!      │     −y'' ─ G_VCR·K_vcr·(τ_1A s+1)/((τ_C s+1)(0.01 s+1)) ─┤ Σ → 1/(T_c s+1) → 1/(J s²+B s+K) → y
//!      │     −y  ─ G_CCR·K_ccr·(τ_MS1 s+1)(τ_MS2 s+1)/(0.001 s+1)²┘
//!      └──────────────────────────────────────────────────────────────────────────────────────────┘
//! ```
//!
//! The three feedback paths read `y` from the previous sample, which breaks the algebraic
//! loop formed by the direct feedthrough of every bilinear block. Head acceleration `y''`
//! is a second backward difference. The visual delay is a fractional-sample ring buffer with
//! linear interpolation. The path gains `G_*` are fixed constants that keep the loop stable
//! across the interior of the Table-style parameter box.

use nalgebra::DMatrix;

use super::dual::{Dual, Scalar};
use super::lti::{polymul, Block};
use super::NonlinearModel;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::params::ParameterSpec;

pub const FREE_PARAMS: usize = 12;

pub const PARAM_NAMES: [&str; FREE_PARAMS] = [
    "K_vis", "K_vcr", "K_ccr", "tau", "tau_1A", "tau_CNS1", "tau_C", "tau_CNS2", "tau_MS1", "tau_MS2", "B", "K",
];

pub const VISUAL_GAIN_SCALE: f64 = 0.4;
pub const VESTIBULAR_GAIN_SCALE: f64 = 1e-4;
pub const PROPRIOCEPTIVE_GAIN_SCALE: f64 = 3e-3;
/// Smoothing pole of the vestibular differentiator, 100 rad/s.
pub const VESTIBULAR_SMOOTHING: f64 = 0.01;
pub const PROPRIOCEPTIVE_LAG: f64 = 0.001;
/// Output amplitude, as a multiple of the largest reference magnitude, beyond which the
/// closed loop counts as unstable.
pub const DIVERGENCE_FACTOR: f64 = 100.0;

#[derive(Debug, Clone)]
pub struct HeadNeckModel {
    spec: ParameterSpec,
    inertia: f64,
    converter_tc: f64,
    path_gains: [f64; 3],
}

impl Default for HeadNeckModel {
    fn default() -> Self {
        Self::with_spec(ParameterSpec::headneck()).expect("bundled spec")
    }
}

impl HeadNeckModel {
    pub fn new() -> Self {
        Self::default()
    }

    /// Uses a caller-supplied spec (for example with overridden typical values). The free
    /// parameters must be the twelve model parameters in canonical order and the spec must
    /// provide `J` and `T_c`.
    pub fn with_spec(spec: ParameterSpec) -> Result<Self> {
        if spec.free_names() != PARAM_NAMES {
            return Err(Error::Spec(format!(
                "head-neck spec must list free parameters {PARAM_NAMES:?}"
            )));
        }
        let get = |name: &str| {
            spec.value_of(name)
                .ok_or_else(|| Error::Spec(format!("head-neck spec is missing `{name}`")))
        };
        let inertia = get("J")?;
        let converter_tc = get("T_c")?;
        Ok(HeadNeckModel {
            spec,
            inertia,
            converter_tc,
            path_gains: [VISUAL_GAIN_SCALE, VESTIBULAR_GAIN_SCALE, PROPRIOCEPTIVE_GAIN_SCALE],
        })
    }

    /// Overrides the fixed visual, vestibular and proprioceptive path scalings.
    pub fn with_path_gains(mut self, visual: f64, vestibular: f64, proprioceptive: f64) -> Self {
        self.path_gains = [visual, vestibular, proprioceptive];
        self
    }

    pub fn path_gains(&self) -> [f64; 3] {
        self.path_gains
    }

    fn simulate<S: Scalar>(&self, theta: &[S], r: &[f64], fs: f64) -> Result<Vec<S>> {
        let fail = |reason: String| Error::Evaluation {
            params: theta.iter().map(Scalar::value).collect(),
            reason,
        };
        let c = S::constant;
        let one = c(1.0);
        let [k_vis, k_vcr, k_ccr, tau, tau_1a, tau_cns1, tau_c, tau_cns2, tau_ms1, tau_ms2, b, k] =
            <[S; FREE_PARAMS]>::try_from(theta)
                .map_err(|_| fail(format!("expected {FREE_PARAMS} parameters, got {}", theta.len())))?;

        let mut plant = Block::bilinear(&[one], &[c(self.inertia), b, k], fs);
        let mut converter = Block::bilinear(&[one], &[c(self.converter_tc), one], fs);
        let mut visual = Block::bilinear(&[tau_cns1, one], &[tau_cns2, one], fs);
        let mut vestibular = Block::bilinear(
            &[tau_1a, one],
            &polymul(&[tau_c, one], &[c(VESTIBULAR_SMOOTHING), one]),
            fs,
        );
        let lag = [c(PROPRIOCEPTIVE_LAG), one];
        let mut proprio = Block::bilinear(&polymul(&[tau_ms1, one], &[tau_ms2, one]), &polymul(&lag, &lag), fs);
        let [s_vis, s_vcr, s_ccr] = self.path_gains;
        let g_vis = k_vis * s_vis;
        let g_vcr = k_vcr * s_vcr;
        let g_ccr = k_ccr * s_ccr;

        let delay = tau * fs;
        if !(delay.value() >= 0.0) {
            return Err(fail(format!("visual delay must be non-negative, got {}", tau.value())));
        }
        let whole = delay.value().floor() as usize;
        let frac = delay + (-(whole as f64));
        let mut ring = vec![c(0.0); whole + 2];
        let len = ring.len();

        let fs2 = fs * fs;
        let zero = c(0.0);
        let (mut y1, mut y2, mut y3) = (zero, zero, zero);
        let limit = DIVERGENCE_FACTOR * r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut out = Vec::with_capacity(r.len());
        for (i, &ri) in r.iter().enumerate() {
            let err = -y1 + ri;
            ring[i % len] = err;
            let at = |lag: usize| if i >= lag { ring[(i - lag) % len] } else { zero };
            let delayed = at(whole) * (-frac + 1.0) + at(whole + 1) * frac;

            let accel = (y1 - y2 * 2.0 + y3) * fs2;
            let torque = g_vis * visual.step(delayed) - g_vcr * vestibular.step(accel) - g_ccr * proprio.step(y1);
            let yi = plant.step(converter.step(torque));
            let v = yi.value();
            if !v.is_finite() || v.abs() > limit {
                return Err(fail(format!("simulation diverged at sample {i}")));
            }
            y3 = y2;
            y2 = y1;
            y1 = yi;
            out.push(yi);
        }
        Ok(out)
    }
}

impl NonlinearModel for HeadNeckModel {
    fn id(&self) -> &str {
        "headneck"
    }

    fn spec(&self) -> &ParameterSpec {
        &self.spec
    }

    fn predict(&self, data: &Dataset, params: &[f64]) -> Result<Vec<f64>> {
        self.simulate(params, &data.x, data.sample_rate)
    }

    fn predict_with_gradient(&self, data: &Dataset, params: &[f64]) -> Option<Result<(Vec<f64>, DMatrix<f64>)>> {
        if params.len() != FREE_PARAMS {
            return Some(Err(Error::Argument(format!(
                "expected {FREE_PARAMS} parameters, got {}",
                params.len()
            ))));
        }
        let theta: Vec<Dual<FREE_PARAMS>> = params.iter().enumerate().map(|(i, &v)| Dual::variable(v, i)).collect();
        Some(self.simulate(&theta, &data.x, data.sample_rate).map(|ys| {
            let pred = ys.iter().map(|y| y.v).collect();
            let grad = DMatrix::from_fn(ys.len(), FREE_PARAMS, |i, k| ys[i].d[k]);
            (pred, grad)
        }))
    }
}
