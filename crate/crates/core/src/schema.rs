//! Feature schemas: mutability, direction constraints, likelihood families
//! and bounds. Every engine derives its search space from a schema.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math;
use crate::{Error, Result};

/// Smallest value a positive continuous feature is projected onto.
pub const POSITIVE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    #[default]
    Free,
    DownOnly,
    UpOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Likelihood {
    Count,
    PositiveContinuous,
    Real,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feature {
    pub name: String,
    pub mutable: bool,
    #[serde(default)]
    pub direction: Direction,
    pub likelihood: Likelihood,
    #[serde(default)]
    pub lower: Option<f64>,
    #[serde(default)]
    pub upper: Option<f64>,
}

impl Feature {
    pub fn new(name: &str, mutable: bool, likelihood: Likelihood) -> Self {
        Self { name: name.into(), mutable, direction: Direction::Free, likelihood, lower: None, upper: None }
    }

    pub fn with_direction(mut self, direction: Direction) -> Self {
        self.direction = direction;
        self
    }

    pub fn with_bounds(mut self, lower: Option<f64>, upper: Option<f64>) -> Self {
        self.lower = lower;
        self.upper = upper;
        self
    }

    /// Checks a single value against the likelihood family and bounds.
    pub fn check(&self, v: f64) -> core::result::Result<(), &'static str> {
        if !v.is_finite() {
            return Err("value is not finite");
        }
        match self.likelihood {
            Likelihood::Count if v < 0.0 || math::floor(v) != v => {
                return Err("count feature must be a non-negative integer")
            }
            Likelihood::PositiveContinuous if v <= 0.0 => return Err("positive continuous feature must be > 0"),
            _ => {}
        }
        if self.lower.is_some_and(|lo| v < lo) {
            return Err("value below lower bound");
        }
        if self.upper.is_some_and(|hi| v > hi) {
            return Err("value above upper bound");
        }
        Ok(())
    }

    /// Maps `v` into the support of this feature: bounds, integrality and
    /// positivity. Direction and mutability are handled by
    /// [`FeatureSchema::project`], which knows the original value.
    pub fn clamp_to_support(&self, v: f64) -> f64 {
        let mut v = v;
        if let Some(lo) = self.lower {
            v = v.max(lo);
        }
        if let Some(hi) = self.upper {
            v = v.min(hi);
        }
        match self.likelihood {
            Likelihood::Count => {
                v = math::round(v).max(0.0);
                // rounding may step outside an integral-unfriendly bound
                if let Some(hi) = self.upper {
                    if v > hi {
                        v = math::floor(hi).max(0.0);
                    }
                }
            }
            Likelihood::PositiveContinuous => v = v.max(self.lower.unwrap_or(0.0).max(POSITIVE_FLOOR)),
            Likelihood::Real => {}
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSchema", into = "RawSchema")]
pub struct FeatureSchema {
    features: Vec<Feature>,
}

#[derive(Serialize, Deserialize)]
struct RawSchema {
    features: Vec<Feature>,
}

impl TryFrom<RawSchema> for FeatureSchema {
    type Error = Error;
    fn try_from(raw: RawSchema) -> Result<Self> {
        Self::new(raw.features)
    }
}

impl From<FeatureSchema> for RawSchema {
    fn from(s: FeatureSchema) -> Self {
        RawSchema { features: s.features }
    }
}

impl FeatureSchema {
    pub fn new(features: Vec<Feature>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for f in &features {
            if f.name.trim().is_empty() {
                return Err(Error::Schema("feature name is empty".into()));
            }
            if !seen.insert(f.name.as_str()) {
                return Err(Error::Schema(format!("duplicate feature name `{}`", f.name)));
            }
            for b in [f.lower, f.upper].into_iter().flatten() {
                if b.is_nan() {
                    return Err(Error::Schema(format!("bound of `{}` is NaN", f.name)));
                }
            }
            if let (Some(lo), Some(hi)) = (f.lower, f.upper) {
                if lo > hi {
                    return Err(Error::Schema(format!(
                        "feature `{}` has lower bound {lo} above upper bound {hi}",
                        f.name
                    )));
                }
            }
        }
        Ok(Self { features })
    }

    /// A schema of `d` free, mutable, real-valued features named `x0..`.
    pub fn real(d: usize) -> Self {
        let features = (0..d).map(|j| Feature::new(&format!("x{j}"), true, Likelihood::Real)).collect();
        Self { features }
    }

    /// Errors unless at least one feature is mutable.
    pub fn ensure_usable(&self) -> Result<()> {
        if self.features.iter().any(|f| f.mutable) {
            Ok(())
        } else {
            Err(Error::NoMutableFeature)
        }
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn feature(&self, j: usize) -> &Feature {
        &self.features[j]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.features.iter().map(|f| f.name.as_str())
    }

    pub fn mutable_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&j| self.features[j].mutable).collect()
    }

    pub fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() == self.len() {
            Ok(())
        } else {
            Err(Error::Dimension { expected: self.len(), got: x.len() })
        }
    }

    /// Whether `v` is a reachable value for feature `j` starting from `origin`.
    pub fn admits(&self, j: usize, origin: f64, v: f64) -> bool {
        let f = &self.features[j];
        if !f.mutable {
            return v == origin;
        }
        let direction_ok = match f.direction {
            Direction::Free => true,
            Direction::DownOnly => v <= origin,
            Direction::UpOnly => v >= origin,
        };
        direction_ok && f.check(v).is_ok()
    }

    /// Projects a candidate onto the points reachable from `origin`:
    /// immutables pinned, support enforced, direction constraints respected.
    pub fn project(&self, origin: &[f64], candidate: &mut [f64]) {
        for (j, f) in self.features.iter().enumerate() {
            if !f.mutable {
                candidate[j] = origin[j];
                continue;
            }
            let mut v = f.clamp_to_support(candidate[j]);
            match f.direction {
                Direction::Free => {}
                Direction::DownOnly => v = v.min(origin[j]),
                Direction::UpOnly => v = v.max(origin[j]),
            }
            candidate[j] = v;
        }
    }

    /// Checks the reachability invariants of a counterfactual.
    pub fn respects(&self, origin: &[f64], candidate: &[f64]) -> bool {
        origin.len() == self.len()
            && candidate.len() == self.len()
            && (0..self.len()).all(|j| self.admits(j, origin[j], candidate[j]))
    }
}
