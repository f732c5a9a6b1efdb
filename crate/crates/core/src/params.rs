//! Parameter schema and the affine min-max map between physical and unit-scaled coordinates.
//!
//! Only free entries take part in vector indexing. Fixed entries (min = max) are carried by
//! the spec so models can read them, but solvers never see or perturb them.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamEntry {
    pub name: String,
    pub min: f64,
    pub max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed: Option<f64>,
    /// Typical value in physical units; defaults to the bounds midpoint when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub typical: Option<f64>,
}

impl ParamEntry {
    pub fn free(name: impl Into<String>, min: f64, max: f64) -> Self {
        ParamEntry {
            name: name.into(),
            min,
            max,
            fixed: None,
            typical: None,
        }
    }

    pub fn fixed(name: impl Into<String>, value: f64) -> Self {
        ParamEntry {
            name: name.into(),
            min: value,
            max: value,
            fixed: Some(value),
            typical: None,
        }
    }

    pub fn with_typical(mut self, typical: f64) -> Self {
        self.typical = Some(typical);
        self
    }

    pub fn is_fixed(&self) -> bool {
        self.fixed.is_some()
    }

    pub fn typical_value(&self) -> f64 {
        match (self.fixed, self.typical) {
            (Some(v), _) => v,
            (None, Some(t)) => t,
            (None, None) => 0.5 * (self.min + self.max),
        }
    }

    fn width(&self) -> f64 {
        self.max - self.min
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    Physical,
    Normalized,
}

impl Frame {
    fn label(self) -> &'static str {
        match self {
            Frame::Physical => "physical",
            Frame::Normalized => "normalized",
        }
    }
}

/// Values for the free entries of a spec, tagged with their coordinate frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    pub values: Vec<f64>,
    pub frame: Frame,
}

impl ParamVector {
    pub fn physical(values: Vec<f64>) -> Self {
        ParamVector {
            values,
            frame: Frame::Physical,
        }
    }

    pub fn normalized(values: Vec<f64>) -> Self {
        ParamVector {
            values,
            frame: Frame::Normalized,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Normalized-frame offset from the typical values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationVector {
    pub values: Vec<f64>,
}

impl DeviationVector {
    pub fn new(values: Vec<f64>) -> Self {
        DeviationVector { values }
    }

    pub fn zeros(p: usize) -> Self {
        DeviationVector { values: vec![0.0; p] }
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// A value that fell outside its bounds during a frame conversion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundWarning {
    pub name: String,
    pub value: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mapped {
    pub vector: ParamVector,
    pub warnings: Vec<BoundWarning>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParameterSpec {
    name: String,
    entries: Vec<ParamEntry>,
    #[serde(skip)]
    free: Vec<usize>,
}

impl ParameterSpec {
    pub fn new(name: impl Into<String>, entries: Vec<ParamEntry>) -> Result<Self> {
        let mut seen = HashSet::new();
        for e in &entries {
            if !seen.insert(e.name.as_str()) {
                return Err(Error::Spec(format!("duplicate parameter name `{}`", e.name)));
            }
            if !(e.min.is_finite() && e.max.is_finite()) {
                return Err(Error::Spec(format!("`{}` has non-finite bounds", e.name)));
            }
            match e.fixed {
                Some(v) => {
                    if e.min != v || e.max != v {
                        return Err(Error::Spec(format!(
                            "fixed entry `{}` must have min = max = {v}",
                            e.name
                        )));
                    }
                }
                None => {
                    if e.min >= e.max {
                        return Err(Error::Spec(format!(
                            "`{}` needs min < max (got [{}, {}])",
                            e.name, e.min, e.max
                        )));
                    }
                    let t = e.typical_value();
                    if !(e.min..=e.max).contains(&t) {
                        return Err(Error::Spec(format!(
                            "typical value {t} of `{}` outside [{}, {}]",
                            e.name, e.min, e.max
                        )));
                    }
                }
            }
        }
        let free = entries
            .iter()
            .enumerate()
            .filter(|(_, e)| !e.is_fixed())
            .map(|(i, _)| i)
            .collect();
        Ok(ParameterSpec {
            name: name.into(),
            entries,
            free,
        })
    }

    pub fn from_json_str(name: impl Into<String>, json: &str) -> Result<Self> {
        let entries: Vec<ParamEntry> = serde_json::from_str(json)?;
        Self::new(name, entries)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::input(path, e))?;
        let entries: Vec<ParamEntry> = serde_json::from_str(&text)
            .map_err(|e| Error::input(path, format!("line {} column {}: {e}", e.line(), e.column())))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "spec".to_owned());
        Self::new(name, entries).map_err(|e| Error::input(path, e))
    }

    /// The 12 free + 2 fixed parameters of the head-neck tracking model.
    pub fn headneck() -> Self {
        Self::from_json_str("headneck", include_str!("../data/headneck.json")).expect("bundled headneck spec is valid")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn entries(&self) -> &[ParamEntry] {
        &self.entries
    }

    /// Number of free parameters, the dimension of every vector over this spec.
    pub fn dim(&self) -> usize {
        self.free.len()
    }

    pub fn free_entries(&self) -> impl Iterator<Item = &ParamEntry> + '_ {
        self.free.iter().map(move |&i| &self.entries[i])
    }

    pub fn free_names(&self) -> Vec<String> {
        self.free_entries().map(|e| e.name.clone()).collect()
    }

    pub fn free_index(&self, name: &str) -> Option<usize> {
        self.free_entries().position(|e| e.name == name)
    }

    /// Physical value of any entry, fixed or free, at the typical point.
    pub fn value_of(&self, name: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.name == name)
            .map(ParamEntry::typical_value)
    }

    /// Bounds widths `max - min` of the free entries.
    pub fn widths(&self) -> Vec<f64> {
        self.free_entries().map(ParamEntry::width).collect()
    }

    pub fn typical(&self) -> ParamVector {
        ParamVector::physical(self.free_entries().map(ParamEntry::typical_value).collect())
    }

    pub fn typical_normalized(&self) -> Vec<f64> {
        self.free_entries()
            .map(|e| match e.typical {
                Some(t) => (t - e.min) / e.width(),
                None => 0.5,
            })
            .collect()
    }

    /// Replaces typical values by name, e.g. with means of preliminary estimates.
    pub fn with_typical(&self, overrides: &BTreeMap<String, f64>) -> Result<Self> {
        let mut entries = self.entries.clone();
        for (name, &value) in overrides {
            let e = entries
                .iter_mut()
                .find(|e| &e.name == name)
                .ok_or_else(|| Error::Spec(format!("unknown parameter `{name}`")))?;
            if e.is_fixed() {
                return Err(Error::Spec(format!("`{name}` is fixed")));
            }
            e.typical = Some(value);
        }
        Self::new(self.name.clone(), entries)
    }

    fn check(&self, v: &ParamVector, frame: Frame) -> Result<()> {
        if v.frame != frame {
            return Err(Error::FrameMismatch {
                expected: frame.label(),
                found: v.frame.label(),
            });
        }
        if v.len() != self.dim() {
            return Err(Error::Argument(format!(
                "vector has {} values, spec `{}` has {} free parameters",
                v.len(),
                self.name,
                self.dim()
            )));
        }
        Ok(())
    }

    /// Min-max normalization. Out-of-bounds inputs are clamped into [0, 1] and reported.
    pub fn normalize(&self, v: &ParamVector) -> Result<Mapped> {
        self.check(v, Frame::Physical)?;
        let mut warnings = Vec::new();
        let values = self
            .free_entries()
            .zip(&v.values)
            .map(|(e, &x)| {
                let u = (x - e.min) / e.width();
                if !(0.0..=1.0).contains(&u) {
                    warnings.push(self.warn(e, x));
                    u.clamp(0.0, 1.0)
                } else {
                    u
                }
            })
            .collect();
        Ok(Mapped {
            vector: ParamVector::normalized(values),
            warnings,
        })
    }

    /// Inverse of [`normalize`](Self::normalize). Values outside [0, 1] map linearly
    /// outside the bounds and are reported, never clamped.
    pub fn denormalize(&self, v: &ParamVector) -> Result<Mapped> {
        self.check(v, Frame::Normalized)?;
        let mut warnings = Vec::new();
        let values = self
            .free_entries()
            .zip(&v.values)
            .map(|(e, &u)| {
                let x = e.min + u * e.width();
                if !(0.0..=1.0).contains(&u) {
                    warnings.push(self.warn(e, x));
                }
                x
            })
            .collect();
        Ok(Mapped {
            vector: ParamVector::physical(values),
            warnings,
        })
    }

    fn warn(&self, e: &ParamEntry, value: f64) -> BoundWarning {
        log::debug!(
            "`{}` = {value} outside [{}, {}] in spec `{}`",
            e.name,
            e.min,
            e.max,
            self.name
        );
        BoundWarning {
            name: e.name.clone(),
            value,
            min: e.min,
            max: e.max,
        }
    }

    pub fn deviation(&self, v: &ParamVector) -> Result<DeviationVector> {
        let values = match v.frame {
            Frame::Normalized => {
                self.check(v, Frame::Normalized)?;
                v.values
                    .iter()
                    .zip(self.typical_normalized())
                    .map(|(u, t)| u - t)
                    .collect()
            }
            Frame::Physical => {
                self.check(v, Frame::Physical)?;
                self.free_entries()
                    .zip(&v.values)
                    .map(|(e, &x)| (x.clamp(e.min, e.max) - e.typical_value()) / e.width())
                    .collect()
            }
        };
        Ok(DeviationVector { values })
    }

    /// Normalized parameter vector `typical + d`.
    pub fn recompose(&self, d: &DeviationVector) -> Result<ParamVector> {
        if d.len() != self.dim() {
            return Err(Error::Argument(format!(
                "deviation has {} values, spec `{}` has {} free parameters",
                d.len(),
                self.name,
                self.dim()
            )));
        }
        Ok(ParamVector::normalized(
            self.typical_normalized()
                .iter()
                .zip(&d.values)
                .map(|(t, x)| t + x)
                .collect(),
        ))
    }

    /// Physical free values `θ̄ + d ⊙ width`; a zero deviation returns the typical values exactly.
    pub fn physical_at(&self, d: &DeviationVector) -> Result<Vec<f64>> {
        self.recompose(d)?;
        Ok(self
            .free_entries()
            .zip(&d.values)
            .map(|(e, &dk)| e.typical_value() + dk * e.width())
            .collect())
    }

    /// Expands a free vector into all entries in spec order, inserting fixed values.
    pub fn full_values(&self, free: &[f64]) -> Vec<f64> {
        let mut it = free.iter();
        self.entries
            .iter()
            .map(|e| match e.fixed {
                Some(v) => v,
                None => *it.next().expect("free vector shorter than spec"),
            })
            .collect()
    }
}
