//! Synthetic data: a credit-scoring table shaped like the "Give Me Some
//! Credit" feature set, and an exact low-dimensional manifold with a known
//! generative map.

use alloc::vec;
use alloc::vec::Vec;

use rand_distr::{Distribution, LogNormal, Poisson};
use serde::{Deserialize, Serialize};

use crate::classifier::{LinearModel, Scorer};
use crate::dataset::{Dataset, Label};
use crate::linalg::{self, Matrix};
use crate::math;
use crate::rng::{self, Rng};
use crate::schema::{Direction, Feature, FeatureSchema, Likelihood};
use crate::{Error, Result};

pub const CREDIT_LABEL: &str = "Creditworthy";

/// Ten credit features with their mutability and likelihood families.
/// `DebtRatio` may only decrease; `age` and `NumberOfDependents` are fixed.
pub fn credit_schema() -> FeatureSchema {
    use Likelihood::{Count, PositiveContinuous};
    FeatureSchema::new(vec![
        Feature::new("RevolvingUtilizationOfUnsecuredLines", true, PositiveContinuous),
        Feature::new("age", false, Count),
        Feature::new("NumberOfTime30-59DaysPastDueNotWorse", true, Count),
        Feature::new("DebtRatio", true, PositiveContinuous).with_direction(Direction::DownOnly),
        Feature::new("MonthlyIncome", true, PositiveContinuous),
        Feature::new("NumberOfOpenCreditLinesAndLoans", true, Count),
        Feature::new("NumberOfTimes90DaysLate", true, Count),
        Feature::new("NumberRealEstateLoansOrLines", true, Count),
        Feature::new("NumberOfTime60-89DaysPastDueNotWorse", true, Count),
        Feature::new("NumberOfDependents", false, Count),
    ])
    .expect("static schema is valid")
}

/// The scorer that generated the synthetic credit labels: positive means
/// creditworthy. Labels are drawn as `P(y = +1) = σ(sharpness · score)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedCreditScorer {
    pub sharpness: f64,
}

impl Default for PlantedCreditScorer {
    fn default() -> Self {
        Self { sharpness: 3.0 }
    }
}

impl Scorer for PlantedCreditScorer {
    fn dim(&self) -> usize {
        10
    }

    fn score(&self, x: &[f64]) -> f64 {
        0.9 - 0.55 * x[2] - 0.8 * x[6] - 0.65 * x[8] - 0.8 * (math::ln(x[0]) + 0.9) - 0.5 * (math::ln(x[3]) + 1.0)
            + 0.6 * (math::ln(x[4]) - 8.3)
            + 0.02 * (x[1] - 45.0)
            + 0.05 * x[7]
    }
}

fn poisson(r: &mut Rng, rate: f64) -> f64 {
    Poisson::new(rate).expect("positive rate").sample(r)
}

fn lognormal(r: &mut Rng, mu: f64, sigma: f64) -> f64 {
    LogNormal::new(mu, sigma).expect("valid lognormal").sample(r)
}

/// `n` rows over [`credit_schema`]. Three hidden factors (payment
/// reliability, wealth, life stage) drive every feature; count features
/// are Poisson and positive features log-normal. Labels follow
/// [`PlantedCreditScorer`].
pub fn synthesize_credit(n: usize, seed: u64) -> Result<Dataset> {
    if n < 1 {
        return Err(Error::InvalidArgument("synthetic credit needs n >= 1".into()));
    }
    let mut r = rng::seeded(seed);
    let planted = PlantedCreditScorer::default();
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let reliability = rng::standard_normal(&mut r);
        let wealth = rng::standard_normal(&mut r);
        let stage = rng::standard_normal(&mut r);
        let row = vec![
            lognormal(&mut r, -0.9 - 0.5 * reliability - 0.2 * wealth, 0.5),
            18.0 + poisson(&mut r, 27.0 * math::exp(0.35 * stage)),
            poisson(&mut r, math::exp(-0.6 - 0.9 * reliability)),
            lognormal(&mut r, -1.0 + 0.3 * stage - 0.2 * wealth, 0.6),
            lognormal(&mut r, 8.3 + 0.45 * wealth + 0.15 * stage, 0.35),
            poisson(&mut r, math::exp(2.0 + 0.25 * wealth + 0.15 * stage)),
            poisson(&mut r, math::exp(-1.3 - 1.0 * reliability)),
            poisson(&mut r, math::exp(-0.1 + 0.5 * wealth)),
            poisson(&mut r, math::exp(-1.4 - 0.9 * reliability)),
            poisson(&mut r, math::exp(-0.2 + 0.4 * stage)),
        ];
        let p = math::sigmoid(planted.sharpness * planted.score(&row));
        let u: f64 = rand::Rng::random(&mut r);
        labels.push(if u < p { Label::Positive } else { Label::Negative });
        rows.push(row);
    }
    Dataset::new(credit_schema(), rows, labels)
}

/// A `k`-dimensional affine manifold `x = E·z + o` in `R^d` with a planted
/// linear labelling rule `sign(a·z + b)` in latent space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifoldSpec {
    latent_dim: usize,
    ambient_dim: usize,
    embedding: Matrix,
    offset: Vec<f64>,
    latent_std: f64,
    rule_weights: Vec<f64>,
    rule_bias: f64,
}

impl ManifoldSpec {
    pub fn new(
        embedding: Matrix,
        offset: Vec<f64>,
        latent_std: f64,
        rule_weights: Vec<f64>,
        rule_bias: f64,
    ) -> Result<Self> {
        let (d, k) = (embedding.rows(), embedding.cols());
        if k == 0 || k >= d {
            return Err(Error::InvalidArgument(alloc::format!("manifold needs 0 < k < d, got k = {k}, d = {d}")));
        }
        if offset.len() != d {
            return Err(Error::Dimension { expected: d, got: offset.len() });
        }
        if rule_weights.len() != k {
            return Err(Error::Dimension { expected: k, got: rule_weights.len() });
        }
        if linalg::orthonormal_columns(&embedding).is_none() {
            return Err(Error::InvalidArgument("embedding columns are linearly dependent".into()));
        }
        if !(latent_std > 0.0) {
            return Err(Error::InvalidArgument("latent_std must be positive".into()));
        }
        Ok(Self { latent_dim: k, ambient_dim: d, embedding, offset, latent_std, rule_weights, rule_bias })
    }

    /// Random orthonormal embedding, Gaussian offset, unit-norm rule through
    /// the latent origin.
    pub fn random_orthonormal(k: usize, d: usize, seed: u64) -> Result<Self> {
        let mut r = rng::seeded(seed);
        let raw = Matrix::from_vec(d, k, (0..d * k).map(|_| rng::standard_normal(&mut r)).collect());
        let embedding = linalg::orthonormal_columns(&raw)
            .ok_or_else(|| Error::InvalidArgument("degenerate random embedding".into()))?;
        let offset = (0..d).map(|_| 2.0 * rng::standard_normal(&mut r)).collect();
        let rule = rng::unit_direction(&mut r, k);
        Self::new(embedding, offset, 1.0, rule, 0.0)
    }

    pub fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn embedding(&self) -> &Matrix {
        &self.embedding
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    /// `E·z` (each entry summed left to right), then `+ o`.
    pub fn embed(&self, z: &[f64]) -> Vec<f64> {
        let mut x = self.embedding.mul_vec(z);
        for (v, o) in x.iter_mut().zip(&self.offset) {
            *v += o;
        }
        x
    }

    pub fn latent_score(&self, z: &[f64]) -> f64 {
        math::dot(&self.rule_weights, z) + self.rule_bias
    }

    /// The planted rule as an ambient linear scorer
    /// `x ↦ a · E⁺(x − o) + b`, which depends on `x` only through its
    /// orthogonal projection onto the manifold.
    pub fn ambient_rule(&self) -> LinearModel {
        let gram = self.embedding.gram();
        let coef = linalg::solve(&gram, &self.rule_weights).expect("embedding has full column rank");
        let weights = self.embedding.mul_vec(&coef);
        let bias = self.rule_bias - math::dot(&weights, &self.offset);
        LinearModel::from_affine(weights, bias)
    }
}

/// Samples `z ~ N(0, latent_std² I)` and returns rows `embed(z)` together
/// with the exact latent codes.
pub fn synthesize_manifold(spec: &ManifoldSpec, n: usize, seed: u64) -> Result<(Dataset, Vec<Vec<f64>>)> {
    let mut r = rng::seeded(seed);
    let codes: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..spec.latent_dim).map(|_| spec.latent_std * rng::standard_normal(&mut r)).collect())
        .collect();
    let rows = codes.iter().map(|z| spec.embed(z)).collect();
    let labels = codes.iter().map(|z| Label::from_score(spec.latent_score(z))).collect();
    let data = Dataset::new(FeatureSchema::real(spec.ambient_dim), rows, labels)?;
    Ok((data, codes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::empirical_risk;

    #[test]
    fn credit_invariants_hold() {
        let data = synthesize_credit(1000, 3).unwrap();
        assert_eq!(data.len(), 1000);
        assert_eq!(data.dim(), 10);
        assert!(data.has_both_labels());
        let other = synthesize_credit(1000, 4).unwrap();
        assert_ne!(data.row(0), other.row(0));
    }

    #[test]
    fn planted_scorer_beats_chance() {
        let data = synthesize_credit(2000, 5).unwrap();
        let risk = empirical_risk(&PlantedCreditScorer::default(), &data).unwrap();
        assert!(risk < 0.5, "planted risk {risk}");
        let pos = data.labels().iter().filter(|l| l.is_positive()).count() as f64 / 2000.0;
        assert!((0.3..0.85).contains(&pos), "positive rate {pos}");
    }

    #[test]
    fn zero_latent_gives_offset() {
        let spec = ManifoldSpec::random_orthonormal(2, 5, 1).unwrap();
        assert_eq!(spec.embed(&[0.0, 0.0]), spec.offset().to_vec());
    }

    #[test]
    fn identity_arithmetic() {
        let spec =
            ManifoldSpec::new(Matrix::from_rows(&[vec![1.0], vec![1.0]]), vec![0.0, 0.0], 1.0, vec![1.0], 0.0).unwrap();
        assert_eq!(spec.embed(&[3.0]), vec![3.0, 3.0]);
    }

    #[test]
    fn rejects_bad_specs() {
        let square = Matrix::identity(2);
        assert!(ManifoldSpec::new(square, vec![0.0; 2], 1.0, vec![1.0; 2], 0.0).is_err());
        let dependent = Matrix::from_rows(&[vec![1.0, 2.0], vec![1.0, 2.0], vec![1.0, 2.0]]);
        assert!(ManifoldSpec::new(dependent, vec![0.0; 3], 1.0, vec![1.0; 2], 0.0).is_err());
    }

    #[test]
    fn rows_are_exact_embeddings() {
        let spec = ManifoldSpec::random_orthonormal(2, 6, 7).unwrap();
        let (data, codes) = synthesize_manifold(&spec, 100, 8).unwrap();
        for (x, z) in data.rows().zip(&codes) {
            let mut expected = spec.embedding().mul_vec(z);
            for (e, o) in expected.iter_mut().zip(spec.offset()) {
                *e += o;
            }
            assert_eq!(x, expected.as_slice());
        }
    }

    #[test]
    fn ambient_rule_agrees_with_latent_rule_on_manifold() {
        let spec = ManifoldSpec::random_orthonormal(2, 6, 9).unwrap();
        let (data, codes) = synthesize_manifold(&spec, 200, 1).unwrap();
        let rule = spec.ambient_rule();
        for (x, z) in data.rows().zip(&codes) {
            assert!((rule.score(x) - spec.latent_score(z)).abs() < 1e-9);
        }
    }
}
