use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{Affine, ModelMeta, Scorer};
use crate::dataset::Dataset;
use crate::math;
use crate::rng;
use crate::{Error, Result};

/// Logistic-loss linear scorer over standardized features.
///
/// `score(x) = Σ_j weights[j] · (x[j] − mean[j]) / scale[j] + bias`. The
/// standardization lives in the model so callers always work in original
/// feature units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    #[serde(default)]
    pub meta: ModelMeta,
}

impl LinearModel {
    /// A model with identity standardization: `score(x) = weights · x + bias`.
    pub fn from_affine(weights: Vec<f64>, bias: f64) -> Self {
        let d = weights.len();
        Self {
            weights,
            bias,
            mean: vec![0.0; d],
            scale: vec![1.0; d],
            meta: ModelMeta { family: "linear".into(), ..ModelMeta::default() },
        }
    }

    pub fn negated(&self) -> Self {
        let mut m = self.clone();
        m.weights.iter_mut().for_each(|w| *w = -*w);
        m.bias = -m.bias;
        m
    }

    /// Multiplies the score function by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut m = self.clone();
        m.weights.iter_mut().for_each(|w| *w *= factor);
        m.bias *= factor;
        m
    }

    /// Adds a constant to the score function.
    pub fn shifted(&self, offset: f64) -> Self {
        let mut m = self.clone();
        m.bias += offset;
        m
    }

    fn objective(&self, standardized: &[Vec<f64>], signs: &[f64], l2: f64) -> f64 {
        let data: f64 = standardized
            .iter()
            .zip(signs)
            .map(|(z, y)| math::softplus(-y * (math::dot(&self.weights, z) + self.bias)))
            .sum::<f64>()
            / signs.len() as f64;
        data + 0.5 * l2 * math::dot(&self.weights, &self.weights)
    }
}

impl Scorer for LinearModel {
    fn dim(&self) -> usize {
        self.weights.len()
    }

    fn score(&self, x: &[f64]) -> f64 {
        let mut s = self.bias;
        for (((w, v), m), sc) in self.weights.iter().zip(x).zip(&self.mean).zip(&self.scale) {
            s += w * (v - m) / sc;
        }
        s
    }

    fn affine(&self) -> Option<Affine> {
        let weights: Vec<f64> = self.weights.iter().zip(&self.scale).map(|(w, s)| w / s).collect();
        let bias = self.bias - math::dot(&weights, &self.mean);
        Some(Affine { weights, bias })
    }
}

/// Per-feature mean and standard deviation; constant columns get scale 1.
pub(crate) fn standardization(data: &Dataset) -> (Vec<f64>, Vec<f64>) {
    let n = data.len() as f64;
    let d = data.dim();
    let mut mean = vec![0.0; d];
    for row in data.rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; d];
    for row in data.rows() {
        for j in 0..d {
            var[j] += (row[j] - mean[j]) * (row[j] - mean[j]);
        }
    }
    let scale = var
        .into_iter()
        .map(|v| {
            let s = math::sqrt(v / n);
            if s > 1e-12 {
                s
            } else {
                1.0
            }
        })
        .collect();
    (mean, scale)
}

/// Fits an L2-regularized logistic model by full-batch proximal gradient
/// descent: a gradient step on the mean logistic loss followed by the exact
/// shrinkage `w ← w / (1 + lr · l2)`. The bias is not penalized.
///
/// With `learning_rate ≤ 4 / (d + 1)` the objective is non-increasing for
/// any `l2_strength`. An increase beyond 1e-9, or a non-finite objective, is
/// returned as an error instead of being clipped.
pub fn train_linear(
    train: &Dataset,
    l2_strength: f64,
    epochs: usize,
    learning_rate: f64,
    seed: u64,
) -> Result<LinearModel> {
    if train.is_empty() {
        return Err(Error::Empty("training set"));
    }
    if !train.has_both_labels() {
        return Err(Error::SingleClass);
    }
    if !(l2_strength >= 0.0) || !(learning_rate > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "l2_strength must be >= 0 and learning_rate > 0 (got {l2_strength}, {learning_rate})"
        )));
    }
    let d = train.dim();
    let (mean, scale) = standardization(train);
    let standardized: Vec<Vec<f64>> =
        train.rows().map(|r| (0..d).map(|j| (r[j] - mean[j]) / scale[j]).collect()).collect();
    let signs: Vec<f64> = train.labels().iter().map(|l| l.sign()).collect();

    let mut r = rng::seeded(seed);
    let weights = (0..d).map(|_| 0.01 * rng::standard_normal(&mut r)).collect();
    let mut model = LinearModel {
        weights,
        bias: 0.0,
        mean,
        scale,
        meta: ModelMeta {
            family: "linear".into(),
            hyperparameters: vec![
                ("l2_strength".to_string(), l2_strength),
                ("epochs".to_string(), epochs as f64),
                ("learning_rate".to_string(), learning_rate),
            ],
            seed,
            train_risk: None,
        },
    };

    let n = signs.len() as f64;
    let mut previous = model.objective(&standardized, &signs, l2_strength);
    for epoch in 0..epochs {
        let mut grad_w = vec![0.0; d];
        let mut grad_b = 0.0;
        for (z, &y) in standardized.iter().zip(&signs) {
            let margin = y * (math::dot(&model.weights, z) + model.bias);
            // d/dm softplus(-m) = -sigmoid(-m)
            let coeff = -y * math::sigmoid(-margin) / n;
            for (g, v) in grad_w.iter_mut().zip(z) {
                *g += coeff * v;
            }
            grad_b += coeff;
        }
        let shrink = 1.0 + learning_rate * l2_strength;
        for (w, g) in model.weights.iter_mut().zip(&grad_w) {
            *w = (*w - learning_rate * g) / shrink;
        }
        model.bias -= learning_rate * grad_b;

        let current = model.objective(&standardized, &signs, l2_strength);
        if !current.is_finite() {
            return Err(Error::NonFinite(format!("logistic objective at epoch {epoch}")));
        }
        if current > previous + 1e-9 {
            return Err(Error::Diverging { epoch, before: previous, after: current });
        }
        previous = current;
    }
    model.meta.train_risk = Some(super::empirical_risk(&model, train)?);
    Ok(model)
}
