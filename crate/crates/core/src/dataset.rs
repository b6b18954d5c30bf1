//! Labelled tabular data.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::rng;
use crate::schema::FeatureSchema;
use crate::{Error, Result};

/// Binary label in `{-1, +1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Negative => -1.0,
            Label::Positive => 1.0,
        }
    }

    /// Decision rule shared by every scorer: the boundary `score = 0` is negative.
    pub fn from_score(score: f64) -> Self {
        if score > 0.0 {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    /// Accepts `{-1, +1}` and remaps `{0, 1}` (0 becomes -1).
    pub fn from_value(v: i64) -> Option<Self> {
        match v {
            -1 | 0 => Some(Label::Negative),
            1 => Some(Label::Positive),
            _ => None,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }
}

impl From<Label> for i8 {
    fn from(l: Label) -> i8 {
        match l {
            Label::Negative => -1,
            Label::Positive => 1,
        }
    }
}

impl TryFrom<i8> for Label {
    type Error = &'static str;
    fn try_from(v: i8) -> core::result::Result<Self, Self::Error> {
        match v {
            -1 => Ok(Label::Negative),
            1 => Ok(Label::Positive),
            _ => Err("label must be -1 or +1"),
        }
    }
}

/// An `n × d` matrix of rows that satisfy the schema, with one label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: FeatureSchema,
    values: Vec<f64>,
    labels: Vec<Label>,
}

impl Dataset {
    /// Validates every row against the schema. Violations abort construction
    /// and name the offending row and feature.
    pub fn new(schema: FeatureSchema, rows: Vec<Vec<f64>>, labels: Vec<Label>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::Dimension { expected: rows.len(), got: labels.len() });
        }
        let d = schema.len();
        let mut values = Vec::with_capacity(rows.len() * d);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::Dimension { expected: d, got: row.len() });
            }
            for (j, &v) in row.iter().enumerate() {
                schema.feature(j).check(v).map_err(|reason| Error::RowConstraint {
                    row: i,
                    feature: schema.feature(j).name.clone(),
                    reason,
                })?;
            }
            values.extend_from_slice(row);
        }
        Ok(Self { schema, values, labels })
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.schema.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.values[i * d..(i + 1) * d]
    }

    pub fn label(&self, i: usize) -> Label {
        self.labels[i]
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        (0..self.len()).map(move |i| self.row(i))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(|r| r.to_vec()).collect()
    }

    pub fn has_both_labels(&self) -> bool {
        self.labels.iter().any(|l| l.is_positive()) && self.labels.iter().any(|l| !l.is_positive())
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let d = self.dim();
        let mut values = Vec::with_capacity(indices.len() * d);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            values.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Self { schema: self.schema.clone(), values, labels }
    }

    /// Seeded shuffle into a train part of `⌊n · train_fraction⌋` rows and
    /// the remainder.
    pub fn split(&self, train_fraction: f64, seed: u64) -> Result<(Self, Self)> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::InvalidArgument(alloc::format!(
                "train fraction must lie in (0, 1), got {train_fraction}"
            )));
        }
        if self.len() < 2 {
            return Err(Error::Empty("split needs at least two rows"));
        }
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.shuffle(&mut rng::seeded(seed));
        let n_train = crate::math::floor(self.len() as f64 * train_fraction) as usize;
        let (train, test) = order.split_at(n_train);
        Ok((self.subset(train), self.subset(test)))
    }
}
