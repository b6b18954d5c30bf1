use alloc::format;

use serde::{Deserialize, Serialize};

use super::discrepancy;
use super::projection::{calibrate_alpha, empirical_multiplicity_cost, CostMode};
use crate::classifier::Scorer;
use crate::dataset::Dataset;
use crate::math;
use crate::{Error, Result};

/// Per-model statistics over the rows the model rejects (`H^−`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundComponents {
    /// False-omission rate `P(y = +1 | decision −1)`.
    pub pi: f64,
    /// `π · P_{H^−∩D^+}(f ≤ 0) + (1 − π) · P_{H^−∩D^−}(f > 0)`.
    pub risk_neg: f64,
    /// Largest `|score|` over `H^−`.
    pub c_max: f64,
    /// Mean score over `H^− ∩ D^+`, 0 when that cell is empty.
    pub c_pos_mean: f64,
    /// Mean score over `H^− ∩ D^−`, 0 when that cell is empty.
    pub c_neg_mean: f64,
    pub c_pos_empty: bool,
    pub c_neg_empty: bool,
    pub n_neg_pos: usize,
    pub n_neg_neg: usize,
    pub n_pos_pos: usize,
    pub n_pos_neg: usize,
}

pub fn bound_components(model: &dyn Scorer, data: &Dataset) -> Result<BoundComponents> {
    let mut cells = [[0usize; 2]; 2];
    let (mut sum_pos, mut sum_neg, mut c_max) = (0.0, 0.0, 0.0f64);
    let (mut pos_nonpositive, mut neg_positive) = (0usize, 0usize);
    for (x, y) in data.rows().zip(data.labels()) {
        let s = model.score(x);
        let rejected = s <= 0.0;
        cells[rejected as usize][y.is_positive() as usize] += 1;
        if rejected {
            c_max = c_max.max(math::abs(s));
            if y.is_positive() {
                sum_pos += s;
                pos_nonpositive += 1;
            } else {
                sum_neg += s;
                neg_positive += (s > 0.0) as usize;
            }
        }
    }
    let (n_neg_neg, n_neg_pos) = (cells[1][0], cells[1][1]);
    let n_rejected = n_neg_neg + n_neg_pos;
    if n_rejected == 0 {
        return Err(Error::EmptyRegion("H^-"));
    }
    let pi = n_neg_pos as f64 / n_rejected as f64;
    let rate = |k: usize, n: usize| if n == 0 { 0.0 } else { k as f64 / n as f64 };
    let risk_neg = pi * rate(pos_nonpositive, n_neg_pos) + (1.0 - pi) * rate(neg_positive, n_neg_neg);
    Ok(BoundComponents {
        pi,
        risk_neg,
        c_max,
        c_pos_mean: if n_neg_pos == 0 { 0.0 } else { sum_pos / n_neg_pos as f64 },
        c_neg_mean: if n_neg_neg == 0 { 0.0 } else { sum_neg / n_neg_neg as f64 },
        c_pos_empty: n_neg_pos == 0,
        c_neg_empty: n_neg_neg == 0,
        n_neg_pos,
        n_neg_neg,
        n_pos_pos: cells[0][1],
        n_pos_neg: cells[0][0],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParameters {
    pub alpha: f64,
    pub gamma: f64,
}

impl BoundParameters {
    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::InvalidArgument(format!("need alpha > 0 and gamma in [0, 1], got {self:?}")));
        }
        Ok(())
    }
}

fn model_terms(c: &BoundComponents) -> f64 {
    2.0 * c.risk_neg * c.c_max + c.pi * c.c_pos_mean - (1.0 - c.pi) * c.c_neg_mean
}

/// `α · 8^{1−γ} · [2R_f c^max_f + 2R_g c^max_g + π_f c_{D+}(f) + π_g c_{D+}(g)
///  − (1−π_f) c_{D−}(f) − (1−π_g) c_{D−}(g) + Δ]^γ`
pub fn multiplicity_bound(
    cf: &BoundComponents,
    cg: &BoundComponents,
    delta: f64,
    params: BoundParameters,
) -> Result<f64> {
    params.validate()?;
    let bracket = model_terms(cf) + model_terms(cg) + delta;
    if !(bracket >= 0.0) {
        return Err(Error::NegativeBracket {
            value: bracket,
            detail: format!("f terms {}, g terms {}, delta {delta}", model_terms(cf), model_terms(cg)),
        });
    }
    Ok(params.alpha * math::powf(8.0, 1.0 - params.gamma) * math::powf(bracket, params.gamma))
}

/// `α (π c_{D+} − (1−π) c_{D−} + 2 c^max R)`
pub fn single_model_bound(c: &BoundComponents, alpha: f64) -> Result<f64> {
    BoundParameters { alpha, gamma: 1.0 }.validate()?;
    let inner = c.pi * c.c_pos_mean - (1.0 - c.pi) * c.c_neg_mean + 2.0 * c.c_max * c.risk_neg;
    if !(inner >= 0.0) {
        return Err(Error::NegativeBracket { value: inner, detail: format!("{c:?}") });
    }
    Ok(alpha * inner)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub components_f: BoundComponents,
    pub components_g: BoundComponents,
    pub discrepancy: f64,
    pub params: BoundParameters,
    pub rhs: f64,
    pub lhs_monte_carlo: f64,
    pub lhs_sample_size: usize,
    pub holds: bool,
}

/// Calibrates `α` at `γ = 1` on `data`, evaluates the bound there and
/// compares it with the exact mean joint recourse norm over rows rejected
/// by either model.
pub fn verify_multiplicity_bound(f: &dyn Scorer, g: &dyn Scorer, data: &Dataset) -> Result<BoundReport> {
    let components_f = bound_components(f, data)?;
    let components_g = bound_components(g, data)?;
    let delta = discrepancy(f, g, data.rows())?;
    let alpha = calibrate_alpha(f, g, data)?.alpha;
    let params = BoundParameters { alpha, gamma: 1.0 };
    let rhs = multiplicity_bound(&components_f, &components_g, delta, params)?;
    let lhs = empirical_multiplicity_cost(f, g, data.rows(), CostMode::ExactLinear)?;
    Ok(BoundReport {
        components_f,
        components_g,
        discrepancy: delta,
        params,
        rhs,
        lhs_monte_carlo: lhs.mean,
        lhs_sample_size: lhs.sample_size,
        holds: lhs.mean <= rhs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::LinearModel;
    use crate::dataset::Label;
    use crate::schema::FeatureSchema;
    use alloc::vec;
    use alloc::vec::Vec;

    fn four_points() -> (LinearModel, Dataset) {
        // scores -2, -1 (both label +1), -0.5 (label -1), 1 (label -1)
        let f = LinearModel::from_affine(vec![1.0], 0.0);
        let data = Dataset::new(
            FeatureSchema::real(1),
            vec![vec![-2.0], vec![-1.0], vec![-0.5], vec![1.0]],
            vec![Label::Positive, Label::Positive, Label::Negative, Label::Negative],
        )
        .unwrap();
        (f, data)
    }

    #[test]
    fn hand_computed_components() {
        let (f, data) = four_points();
        let c = bound_components(&f, &data).unwrap();
        // H^- = {-2, -1, -0.5}; two of three are truly positive
        assert!((c.pi - 2.0 / 3.0).abs() < 1e-15);
        assert!((c.risk_neg - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(c.c_max, 2.0);
        assert_eq!(c.c_pos_mean, -1.5);
        assert_eq!(c.c_neg_mean, -0.5);
        assert_eq!((c.n_neg_pos, c.n_neg_neg, c.n_pos_pos, c.n_pos_neg), (2, 1, 0, 1));
    }

    #[test]
    fn perfect_classifier_has_no_false_omissions() {
        let f = LinearModel::from_affine(vec![1.0], 0.0);
        let data =
            Dataset::new(FeatureSchema::real(1), vec![vec![-1.0], vec![2.0]], vec![Label::Negative, Label::Positive])
                .unwrap();
        let c = bound_components(&f, &data).unwrap();
        assert_eq!(c.pi, 0.0);
        assert!(c.c_pos_empty);
        assert_eq!(c.c_pos_mean, 0.0);
    }

    #[test]
    fn score_scaling_is_equivariant() {
        let (f, data) = four_points();
        let a = bound_components(&f, &data).unwrap();
        let b = bound_components(&f.scaled(2.0), &data).unwrap();
        assert_eq!(b.c_max, 2.0 * a.c_max);
        assert_eq!(b.c_pos_mean, 2.0 * a.c_pos_mean);
        assert_eq!(b.c_neg_mean, 2.0 * a.c_neg_mean);
        assert_eq!((b.pi, b.risk_neg), (a.pi, a.risk_neg));
    }

    fn comps(pi: f64, risk: f64, c_max: f64, pos: f64, neg: f64) -> BoundComponents {
        BoundComponents {
            pi,
            risk_neg: risk,
            c_max,
            c_pos_mean: pos,
            c_neg_mean: neg,
            c_pos_empty: false,
            c_neg_empty: false,
            n_neg_pos: 1,
            n_neg_neg: 1,
            n_pos_pos: 0,
            n_pos_neg: 0,
        }
    }

    #[test]
    fn bound_arithmetic() {
        let zero = comps(0.0, 0.0, 0.0, 0.0, 0.0);
        let p = BoundParameters { alpha: 1.0, gamma: 1.0 };
        assert_eq!(multiplicity_bound(&zero, &zero, 0.0, p).unwrap(), 0.0);
        // bracket 4 from delta alone
        let half = BoundParameters { alpha: 1.0, gamma: 0.5 };
        assert!((multiplicity_bound(&zero, &zero, 4.0, half).unwrap() - 4.0 * 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(multiplicity_bound(&zero, &zero, 4.0, p).unwrap(), 4.0);
        let c = comps(0.5, 0.2, 1.0, -1.0, -1.0);
        assert!((single_model_bound(&c, 1.0).unwrap() - 0.4).abs() < 1e-15);
        assert!((single_model_bound(&c, 2.0).unwrap() - 0.8).abs() < 1e-15);
        assert_eq!(single_model_bound(&zero, 1.0).unwrap(), 0.0);
        let pair = multiplicity_bound(&c, &c, 0.0, p).unwrap();
        assert!((pair - 2.0 * single_model_bound(&c, 1.0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn negative_bracket_is_reported() {
        let bad = comps(0.0, 0.0, 0.0, 0.0, 1.0);
        let p = BoundParameters { alpha: 1.0, gamma: 1.0 };
        assert!(matches!(multiplicity_bound(&bad, &bad, 0.0, p), Err(Error::NegativeBracket { .. })));
        assert!(multiplicity_bound(&bad, &bad, 0.0, BoundParameters { alpha: 0.0, gamma: 1.0 }).is_err());
    }

    #[test]
    fn bound_holds_on_two_linear_models() {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..40 {
            let (a, b) = ((i % 8) as f64 - 3.5, (i / 8) as f64 - 2.0);
            rows.push(vec![a, b]);
            labels.push(Label::from_score(a + 0.3 * b + if i % 5 == 0 { 3.0 } else { 0.0 }));
        }
        let data = Dataset::new(FeatureSchema::real(2), rows, labels).unwrap();
        let f = LinearModel::from_affine(vec![1.0, 0.2], 0.1);
        let g = LinearModel::from_affine(vec![0.8, 0.5], -0.2);
        let report = verify_multiplicity_bound(&f, &g, &data).unwrap();
        assert!(report.holds, "{report:?}");
        assert!(report.rhs >= 0.0);
    }
}
