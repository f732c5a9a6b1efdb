//! Time series datasets, CSV I/O and the pseudorandom step reference.

use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bound on reference step amplitude: 4 degrees in radians.
pub const REFERENCE_AMPLITUDE: f64 = 4.0 * std::f64::consts::PI / 180.0;
pub const STEP_DURATION_RANGE: (f64, f64) = (0.5, 3.0);

const SPACING_RTOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub sample_rate: f64,
}

impl Dataset {
    pub fn new(t: Vec<f64>, x: Vec<f64>, y: Vec<f64>, sample_rate: f64) -> Result<Self> {
        let d = Dataset { t, x, y, sample_rate };
        d.validate()?;
        Ok(d)
    }

    /// Uniformly sampled dataset starting at t = 0.
    pub fn uniform(x: Vec<f64>, y: Vec<f64>, sample_rate: f64) -> Result<Self> {
        let t = (0..x.len()).map(|i| i as f64 / sample_rate).collect();
        Self::new(t, x, y, sample_rate)
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.len() as f64 / self.sample_rate
    }

    /// Same inputs with a new observation series.
    pub fn with_y(&self, y: Vec<f64>) -> Result<Self> {
        Self::new(self.t.clone(), self.x.clone(), y, self.sample_rate)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.t.len();
        if self.x.len() != n || self.y.len() != n {
            return Err(Error::Dataset(format!(
                "series lengths differ: t={}, x={}, y={}",
                n,
                self.x.len(),
                self.y.len()
            )));
        }
        if n == 0 {
            return Err(Error::Dataset("empty dataset".into()));
        }
        if !(self.sample_rate.is_finite() && self.sample_rate > 0.0) {
            return Err(Error::Dataset(format!(
                "sample rate must be positive, got {}",
                self.sample_rate
            )));
        }
        let dt = 1.0 / self.sample_rate;
        for (i, w) in self.t.windows(2).enumerate() {
            let step = w[1] - w[0];
            if !(step > 0.0) {
                return Err(Error::Dataset(format!("t not strictly increasing at row {}", i + 1)));
            }
            if (step - dt).abs() > SPACING_RTOL * dt {
                return Err(Error::Dataset(format!(
                    "non-uniform spacing at row {}: {step} vs 1/sample_rate = {dt}",
                    i + 1
                )));
            }
        }
        if self.x.iter().chain(&self.y).chain(&self.t).any(|v| !v.is_finite()) {
            return Err(Error::Dataset("non-finite value".into()));
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["t", "x", "y"] {
            return Err(Error::Dataset(format!(
                "line 1: expected header `t,x,y`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let (mut t, mut x, mut y) = (Vec::new(), Vec::new(), Vec::new());
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = rec.position().map(|p| p.line()).unwrap_or(i as u64 + 2);
            if rec.len() != 3 {
                return Err(Error::Dataset(format!(
                    "line {line}: expected 3 fields, found {}",
                    rec.len()
                )));
            }
            let mut vals = [0.0; 3];
            for (col, (slot, field)) in vals.iter_mut().zip(rec.iter()).enumerate() {
                *slot = field.parse().map_err(|_| {
                    Error::Dataset(format!(
                        "line {line}, column {}: cannot parse `{field}` as a number",
                        col + 1
                    ))
                })?;
            }
            t.push(vals[0]);
            x.push(vals[1]);
            y.push(vals[2]);
        }
        if t.len() < 2 {
            return Err(Error::Dataset("need at least two rows".into()));
        }
        let rate = (t.len() - 1) as f64 / (t[t.len() - 1] - t[0]);
        Self::new(t, x, y, rate)
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::input(path, e))?;
        Self::read_csv(file).map_err(|e| Error::input(path, e))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        w.write_record(["t", "x", "y"])?;
        for i in 0..self.len() {
            w.write_record([self.t[i].to_string(), self.x[i].to_string(), self.y[i].to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::input(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// Pseudorandom sequence of steps: durations uniform in [0.5, 3] s, amplitudes uniform
/// in ±4°. Observations are zero-filled; use [`Dataset::with_y`] to attach them.
pub fn generate_reference(duration_s: f64, sample_rate: f64, seed: u64) -> Result<Dataset> {
    if !(duration_s > 0.0) {
        return Err(Error::Argument(format!("duration must be positive, got {duration_s}")));
    }
    if !(sample_rate > 0.0) {
        return Err(Error::Argument(format!(
            "sample rate must be positive, got {sample_rate}"
        )));
    }
    let n = (duration_s * sample_rate).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vec::with_capacity(n);
    while x.len() < n {
        let hold = rng.random_range(STEP_DURATION_RANGE.0..=STEP_DURATION_RANGE.1);
        let level = rng.random_range(-REFERENCE_AMPLITUDE..=REFERENCE_AMPLITUDE);
        let samples = ((hold * sample_rate).round() as usize).max(1);
        x.extend(std::iter::repeat_n(level, samples.min(n - x.len())));
    }
    Dataset::uniform(x, vec![0.0; n], sample_rate)
}
