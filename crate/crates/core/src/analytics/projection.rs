//! Exact Euclidean distances to intersections of two half-spaces, used for
//! the joint recourse cost of two linear scorers and for calibrating the
//! residual constant `α`.
//!
//! Strict acceptance `s(x) > 0` is realized as `s(x) ≥ STRICTNESS`;
//! rejection is `s(x) ≤ 0`.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::classifier::{Affine, Scorer};
use crate::dataset::Dataset;
use crate::engine::{Engine, RecourseRequest};
use crate::linalg::{self, Matrix};
use crate::math;
use crate::schema::FeatureSchema;
use crate::{Error, Result};

pub const STRICTNESS: f64 = 1e-9;

/// `{ y : normal · y ≥ offset }`
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl HalfSpace {
    /// `s(y) ≥ STRICTNESS`
    pub fn accepts(a: &Affine) -> Self {
        Self { normal: a.weights.clone(), offset: STRICTNESS - a.bias }
    }

    /// `s(y) ≤ 0`
    pub fn rejects(a: &Affine) -> Self {
        Self { normal: a.weights.iter().map(|w| -w).collect(), offset: a.bias }
    }

    fn slack(&self, y: &[f64]) -> f64 {
        math::dot(&self.normal, y) - self.offset
    }

    fn contains(&self, y: &[f64]) -> bool {
        let scale = 1.0 + math::abs(self.offset) + math::norm(&self.normal) * math::norm(y);
        self.slack(y) >= -1e-12 * scale
    }

    fn project(&self, x: &[f64]) -> Option<Vec<f64>> {
        let nn = math::dot(&self.normal, &self.normal);
        let gap = -self.slack(x);
        if gap <= 0.0 {
            return Some(x.to_vec());
        }
        if nn == 0.0 {
            return None;
        }
        let t = gap / nn;
        Some(x.iter().zip(&self.normal).map(|(v, a)| v + t * a).collect())
    }
}

/// Distance from `x` to `h1 ∩ h2`, `None` if the intersection is empty.
///
/// The projection is the closest feasible point among `x` itself, the
/// projections onto each half-space, and the point where both boundaries
/// are active (a 2×2 solve).
pub fn joint_region_distance(x: &[f64], h1: &HalfSpace, h2: &HalfSpace) -> Option<f64> {
    if h1.contains(x) && h2.contains(x) {
        return Some(0.0);
    }
    let mut best: Option<f64> = None;
    let mut consider = |y: Vec<f64>| {
        if h1.contains(&y) && h2.contains(&y) {
            let d = math::distance(x, &y);
            if best.is_none_or(|b| d < b) {
                best = Some(d);
            }
        }
    };
    if let Some(y) = h1.project(x) {
        consider(y);
    }
    if let Some(y) = h2.project(x) {
        consider(y);
    }
    let gram = Matrix::from_rows(&[
        vec![math::dot(&h1.normal, &h1.normal), math::dot(&h1.normal, &h2.normal)],
        vec![math::dot(&h2.normal, &h1.normal), math::dot(&h2.normal, &h2.normal)],
    ]);
    let rhs = [-h1.slack(x), -h2.slack(x)];
    if let Some(lambda) = linalg::solve(&gram, &rhs) {
        let y: Vec<f64> = (0..x.len()).map(|j| x[j] + lambda[0] * h1.normal[j] + lambda[1] * h2.normal[j]).collect();
        consider(y);
    }
    best
}

fn affine_of(s: &dyn Scorer, index: usize) -> Result<Affine> {
    s.affine().ok_or(Error::NonLinearTarget(index))
}

/// The four sign regions of a pair of scorers with the residual of `x`
/// with respect to each.
fn regions(f: &Affine, g: &Affine, x: &[f64]) -> [(HalfSpace, HalfSpace, f64); 4] {
    let (sf, sg) = (f.eval(x), g.eval(x));
    let res = |a: f64, b: f64| a.max(b).max(0.0);
    [
        (HalfSpace::accepts(f), HalfSpace::accepts(g), res(STRICTNESS - sf, STRICTNESS - sg)),
        (HalfSpace::accepts(f), HalfSpace::rejects(g), res(STRICTNESS - sf, sg)),
        (HalfSpace::rejects(f), HalfSpace::accepts(g), res(sf, STRICTNESS - sg)),
        (HalfSpace::rejects(f), HalfSpace::rejects(g), res(sf, sg)),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaCalibration {
    pub alpha: f64,
    /// (point, region) pairs with positive residual and non-empty region.
    pub constraints: usize,
    /// (point, region) pairs skipped because the region is empty.
    pub empty_regions: usize,
}

/// Smallest `α` with `dist(x, R) ≤ α · residual_R(x)` for every sample
/// point and each of the four sign regions `R` of `(f, g)`, at `γ = 1`.
pub fn calibrate_alpha(f: &dyn Scorer, g: &dyn Scorer, sample: &Dataset) -> Result<AlphaCalibration> {
    let (af, ag) = (affine_of(f, 0)?, affine_of(g, 1)?);
    let mut cal = AlphaCalibration { alpha: 0.0, constraints: 0, empty_regions: 0 };
    for x in sample.rows() {
        for (h1, h2, residual) in regions(&af, &ag, x) {
            if residual <= 0.0 {
                continue;
            }
            match joint_region_distance(x, &h1, &h2) {
                Some(d) => {
                    cal.constraints += 1;
                    cal.alpha = cal.alpha.max(d / residual);
                }
                None => cal.empty_regions += 1,
            }
        }
    }
    if cal.constraints == 0 || !(cal.alpha > 0.0) {
        return Err(Error::AlphaUndefined);
    }
    Ok(cal)
}

/// Number of (point, region) pairs violating `dist ≤ α · residual`.
pub fn audit_assumption(f: &dyn Scorer, g: &dyn Scorer, sample: &Dataset, alpha: f64) -> Result<usize> {
    let (af, ag) = (affine_of(f, 0)?, affine_of(g, 1)?);
    let mut violations = 0;
    for x in sample.rows() {
        for (h1, h2, residual) in regions(&af, &ag, x) {
            if let Some(d) = joint_region_distance(x, &h1, &h2) {
                if d > alpha * residual {
                    violations += 1;
                }
            }
        }
    }
    Ok(violations)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostMode {
    ExactLinear,
    Engine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiplicityCost {
    pub mean: f64,
    pub sample_size: usize,
    pub mode: CostMode,
    /// Engine mode: rows where the engine found no joint counterfactual
    /// (excluded from the mean).
    pub not_found: usize,
    /// Engine estimates upper-bound the exact minimal cost.
    pub upper_estimate: bool,
}

/// Mean minimal joint recourse norm over rows rejected by `f` or `g`,
/// computed exactly for linear scorers. Use [`engine_multiplicity_cost`]
/// for the engine mode.
pub fn empirical_multiplicity_cost<'a>(
    f: &dyn Scorer,
    g: &dyn Scorer,
    rows: impl IntoIterator<Item = &'a [f64]>,
    mode: CostMode,
) -> Result<MultiplicityCost> {
    if mode != CostMode::ExactLinear {
        return Err(Error::InvalidArgument("use engine_multiplicity_cost for engine mode".into()));
    }
    let (af, ag) = (affine_of(f, 0)?, affine_of(g, 1)?);
    let (h1, h2) = (HalfSpace::accepts(&af), HalfSpace::accepts(&ag));
    let mut total = 0.0;
    let mut n = 0;
    for x in rows {
        if af.eval(x) > 0.0 && ag.eval(x) > 0.0 {
            continue;
        }
        total += joint_region_distance(x, &h1, &h2).ok_or(Error::EmptyRegion("H_f^+ ∩ H_g^+"))?;
        n += 1;
    }
    if n == 0 {
        return Err(Error::EmptyRegion("H_f^- ∪ H_g^-"));
    }
    Ok(MultiplicityCost { mean: total / n as f64, sample_size: n, mode, not_found: 0, upper_estimate: false })
}

/// Engine-mode estimate: one joint recourse request per rejected row.
pub fn engine_multiplicity_cost<'a>(
    f: &dyn Scorer,
    g: &dyn Scorer,
    rows: impl IntoIterator<Item = &'a [f64]>,
    schema: &FeatureSchema,
    engine: &Engine,
    budget: usize,
    seed: u64,
) -> Result<MultiplicityCost> {
    let mut total = 0.0;
    let (mut n, mut not_found) = (0usize, 0usize);
    for x in rows {
        if f.score(x) > 0.0 && g.score(x) > 0.0 {
            continue;
        }
        let request = RecourseRequest::new(x.to_vec(), vec![f, g], schema, budget, seed)?;
        let r = engine.run(&request)?;
        if r.found {
            total += r.norm_cost;
            n += 1;
        } else {
            not_found += 1;
        }
    }
    if n == 0 {
        return Err(Error::EmptyRegion("H_f^- ∪ H_g^- (no joint counterfactual found)"));
    }
    Ok(MultiplicityCost {
        mean: total / n as f64,
        sample_size: n,
        mode: CostMode::Engine,
        not_found,
        upper_estimate: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::LinearModel;
    use crate::dataset::Label;
    use crate::schema::FeatureSchema;

    fn sample(rows: Vec<Vec<f64>>) -> Dataset {
        let n = rows.len();
        let d = rows[0].len();
        Dataset::new(FeatureSchema::real(d), rows, vec![Label::Negative; n]).unwrap()
    }

    #[test]
    fn corner_projection() {
        let f = LinearModel::from_affine(vec![1.0, 0.0], -1.0);
        let g = LinearModel::from_affine(vec![0.0, 1.0], -1.0);
        let rows = [[0.0, 0.0]];
        let c = empirical_multiplicity_cost(&f, &g, rows.iter().map(|r| r.as_slice()), CostMode::ExactLinear).unwrap();
        assert!((c.mean - 2f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn identical_models_cost_boundary_distance() {
        let f = LinearModel::from_affine(vec![0.6, 0.8], 0.0);
        let x = [-0.42, -0.56]; // f(x) = -0.7
        let c = empirical_multiplicity_cost(&f, &f, [x.as_slice()], CostMode::ExactLinear).unwrap();
        assert!((c.mean - 0.7 - STRICTNESS).abs() < 1e-12);
        // accepted rows never contribute
        let c2 =
            empirical_multiplicity_cost(&f, &f, [x.as_slice(), [3.0, 3.0].as_slice()], CostMode::ExactLinear).unwrap();
        assert_eq!(c2.sample_size, 1);
    }

    #[test]
    fn empty_intersection_reported() {
        let f = LinearModel::from_affine(vec![1.0], 0.0);
        let rows = [[-1.0]];
        let res =
            empirical_multiplicity_cost(&f, &f.negated(), rows.iter().map(|r| r.as_slice()), CostMode::ExactLinear);
        assert_eq!(res, Err(Error::EmptyRegion("H_f^+ ∩ H_g^+")));
    }

    #[test]
    fn alpha_examples() {
        let f = LinearModel::from_affine(vec![0.6, 0.8], 0.1);
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64 / 7.0 - 2.0, 1.5 - i as f64 / 11.0]).collect();
        let data = sample(rows);
        let a = calibrate_alpha(&f, &f, &data).unwrap();
        assert!((a.alpha - 1.0).abs() < 1e-6);

        let f = LinearModel::from_affine(vec![1.0, 0.0], -1.0);
        let g = LinearModel::from_affine(vec![0.0, 1.0], -1.0);
        let diag = sample((0..20).map(|i| vec![i as f64 / 10.0 - 1.0; 2]).collect());
        let a = calibrate_alpha(&f, &g, &diag).unwrap();
        assert!((a.alpha - 2f64.sqrt()).abs() < 1e-6, "{a:?}");
        let half = calibrate_alpha(&f.scaled(0.5), &g.scaled(0.5), &diag).unwrap();
        assert!((half.alpha - 2.0 * a.alpha).abs() < 1e-6);
        assert_eq!(audit_assumption(&f, &g, &diag, a.alpha).unwrap(), 0);
        assert!(audit_assumption(&f, &g, &diag, 0.5 * a.alpha).unwrap() > 0);
    }

    #[test]
    fn projection_matches_bruteforce_scan() {
        // dense scan over a fine grid of the feasible region
        let h1 = HalfSpace { normal: vec![1.0, 2.0], offset: 1.0 };
        let h2 = HalfSpace { normal: vec![-1.0, 1.0], offset: 0.5 };
        for x in [[-2.0, -2.0], [0.0, 0.0], [3.0, -1.0], [-3.0, 0.0]] {
            let exact = joint_region_distance(&x, &h1, &h2).unwrap();
            let mut scan = f64::INFINITY;
            for i in 0..=800 {
                for j in 0..=800 {
                    let y = [-4.0 + i as f64 / 100.0, -4.0 + j as f64 / 100.0];
                    if h1.slack(&y) >= 0.0 && h2.slack(&y) >= 0.0 {
                        scan = scan.min(math::distance(&x, &y));
                    }
                }
            }
            assert!(exact <= scan + 1e-9 && scan - exact < 0.02, "{x:?}: {exact} vs {scan}");
        }
    }

    #[test]
    fn non_linear_models_rejected() {
        let planted = crate::synth::PlantedCreditScorer::default();
        let f = LinearModel::from_affine(vec![1.0; 10], 0.0);
        let data = sample(vec![vec![1.0; 10]]);
        assert_eq!(calibrate_alpha(&planted, &f, &data), Err(Error::NonLinearTarget(0)));
    }
}
