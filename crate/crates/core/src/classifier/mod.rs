//! Real-valued scorers with a sign decision, their training routines, and
//! ε-level sets of near-equally accurate peers.

mod forest;
mod level_set;
mod linear;

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Label};
use crate::{Error, Result};

pub use forest::{train_forest, ForestModel, Node, Tree};
pub use level_set::{build_level_set, LevelSet, Peer, RiskWindow};
pub use linear::{train_linear, LinearModel};

/// `score = weights · x + bias` in original feature units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl Affine {
    pub fn eval(&self, x: &[f64]) -> f64 {
        crate::math::dot(&self.weights, x) + self.bias
    }
}

/// A deterministic map from a feature vector to a real score. The decision
/// is `+1` iff the score is strictly positive.
pub trait Scorer {
    fn dim(&self) -> usize;

    fn score(&self, x: &[f64]) -> f64;

    fn decision(&self, x: &[f64]) -> Label {
        Label::from_score(self.score(x))
    }

    /// The score as an affine function of the raw features, when it is one.
    fn affine(&self) -> Option<Affine> {
        None
    }
}

impl<S: Scorer + ?Sized> Scorer for &S {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn score(&self, x: &[f64]) -> f64 {
        (**self).score(x)
    }
    fn affine(&self) -> Option<Affine> {
        (**self).affine()
    }
}

/// Training provenance stored alongside a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ModelMeta {
    pub family: String,
    pub hyperparameters: Vec<(String, f64)>,
    pub seed: u64,
    pub train_risk: Option<f64>,
}

/// The trained model families, as one serializable type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Classifier {
    Linear(LinearModel),
    Forest(ForestModel),
}

impl Classifier {
    pub fn meta(&self) -> &ModelMeta {
        match self {
            Classifier::Linear(m) => &m.meta,
            Classifier::Forest(m) => &m.meta,
        }
    }

    pub fn meta_mut(&mut self) -> &mut ModelMeta {
        match self {
            Classifier::Linear(m) => &mut m.meta,
            Classifier::Forest(m) => &mut m.meta,
        }
    }

    pub fn as_linear(&self) -> Option<&LinearModel> {
        match self {
            Classifier::Linear(m) => Some(m),
            Classifier::Forest(_) => None,
        }
    }
}

impl Scorer for Classifier {
    fn dim(&self) -> usize {
        match self {
            Classifier::Linear(m) => m.dim(),
            Classifier::Forest(m) => m.dim(),
        }
    }
    fn score(&self, x: &[f64]) -> f64 {
        match self {
            Classifier::Linear(m) => m.score(x),
            Classifier::Forest(m) => m.score(x),
        }
    }
    fn affine(&self) -> Option<Affine> {
        match self {
            Classifier::Linear(m) => m.affine(),
            Classifier::Forest(_) => None,
        }
    }
}

/// Fraction of rows whose decision disagrees with the label.
pub fn empirical_risk(model: &dyn Scorer, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Empty("risk of an empty dataset"));
    }
    if model.dim() != data.dim() {
        return Err(Error::Dimension { expected: model.dim(), got: data.dim() });
    }
    let wrong = data.rows().zip(data.labels()).filter(|(x, &y)| model.decision(x) != y).count();
    Ok(wrong as f64 / data.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::FeatureSchema;
    use alloc::vec;

    fn line_data() -> Dataset {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64 - 4.5]).collect();
        let labels = rows.iter().map(|r| Label::from_score(r[0])).collect();
        Dataset::new(FeatureSchema::real(1), rows, labels).unwrap()
    }

    #[test]
    fn risk_of_perfect_constant_and_negated() {
        let data = line_data();
        let perfect = LinearModel::from_affine(vec![1.0], 0.0);
        assert_eq!(empirical_risk(&perfect, &data).unwrap(), 0.0);
        let constant = LinearModel::from_affine(vec![0.0], 1.0);
        assert_eq!(empirical_risk(&constant, &data).unwrap(), 0.5);
        // shifted boundary misclassifies 1 of 10; its negation the other 9
        let shifted = LinearModel::from_affine(vec![1.0], -1.0);
        let r = empirical_risk(&shifted, &data).unwrap();
        assert_eq!(r, 0.1);
        assert_eq!(empirical_risk(&shifted.negated(), &data).unwrap(), 1.0 - r);
    }

    #[test]
    fn risk_of_empty_data_is_error() {
        let empty = Dataset::new(FeatureSchema::real(1), vec![], vec![]).unwrap();
        let m = LinearModel::from_affine(vec![1.0], 0.0);
        assert!(empirical_risk(&m, &empty).is_err());
    }
}
