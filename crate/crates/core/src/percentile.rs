//! Per-feature empirical CDFs used by the percentile-shift costs.
//!
//! `Q_j(v) = (#{r < v} + 0.5 · #{r = v}) / n` over the training reference
//! values of feature `j`. Ties count half, so the map is monotone, lands in
//! `[0, 1]` and is symmetric under reversal of tied values.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PercentileTransform {
    reference: Vec<Vec<f64>>,
}

impl PercentileTransform {
    pub fn fit(train: &Dataset) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::Empty("percentile transform needs at least one row"));
        }
        let reference = (0..train.dim())
            .map(|j| {
                let mut col = train.column(j);
                col.sort_by(f64::total_cmp);
                col
            })
            .collect();
        Ok(Self { reference })
    }

    /// Builds a transform from explicit reference columns (sorted internally).
    pub fn from_columns(columns: Vec<Vec<f64>>) -> Result<Self> {
        let mut reference = Vec::with_capacity(columns.len());
        for mut col in columns {
            if col.is_empty() {
                return Err(Error::Empty("percentile reference column"));
            }
            col.sort_by(f64::total_cmp);
            reference.push(col);
        }
        Ok(Self { reference })
    }

    pub fn dim(&self) -> usize {
        self.reference.len()
    }

    pub fn reference(&self, j: usize) -> &[f64] {
        &self.reference[j]
    }

    pub fn quantile(&self, j: usize, v: f64) -> f64 {
        let r = &self.reference[j];
        let below = r.partition_point(|&x| x < v);
        let up_to = r.partition_point(|&x| x <= v);
        let q = (below as f64 + 0.5 * (up_to - below) as f64) / r.len() as f64;
        q.clamp(0.0, 1.0)
    }

    /// Nearest-rank value at probability `p` in `[0, 1]`.
    pub fn value_at(&self, j: usize, p: f64) -> f64 {
        let r = &self.reference[j];
        let idx = crate::math::round(p.clamp(0.0, 1.0) * (r.len() - 1) as f64) as usize;
        r[idx]
    }

    /// `(min, p25, p50, p75, max)` of feature `j`.
    pub fn anchors(&self, j: usize) -> [f64; 5] {
        [0.0, 0.25, 0.5, 0.75, 1.0].map(|p| self.value_at(j, p))
    }

    pub fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() == self.dim() {
            Ok(())
        } else {
            Err(Error::Dimension { expected: self.dim(), got: x.len() })
        }
    }
}
