//! Recourse costs, transferability across a level set, and the multiplicity
//! cost bounds.

mod bounds;
mod inequality;
mod projection;
mod summary;
mod surprise;

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::classifier::{LevelSet, Scorer};
use crate::engine::RecourseResult;
use crate::math;
use crate::percentile::PercentileTransform;
use crate::{Error, Result};

pub use bounds::{
    bound_components, multiplicity_bound, single_model_bound, verify_multiplicity_bound, BoundComponents,
    BoundParameters, BoundReport,
};
pub use inequality::{corollary_check, jensen_power, max_identity, power_mean};
pub use projection::{
    audit_assumption, calibrate_alpha, empirical_multiplicity_cost, engine_multiplicity_cost, joint_region_distance,
    AlphaCalibration, CostMode, HalfSpace, MultiplicityCost, STRICTNESS,
};
pub use summary::{histogram, quantile, quantiles, uniform_edges, VIOLIN_LEVELS};
pub use surprise::{surprise, MethodCosts, MethodSurprise, SurpriseReport, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub cost_total: f64,
    pub cost_max: f64,
    pub norm_cost: f64,
}

fn shifts<'a>(
    transform: &'a PercentileTransform,
    x: &'a [f64],
    x_cf: &'a [f64],
) -> Result<impl Iterator<Item = f64> + 'a> {
    transform.check_dim(x)?;
    transform.check_dim(x_cf)?;
    Ok((0..x.len()).map(move |j| math::abs(transform.quantile(j, x_cf[j]) - transform.quantile(j, x[j]))))
}

/// `Σ_j |Q_j(x_cf[j]) − Q_j(x[j])|`
pub fn cost_total(transform: &PercentileTransform, x: &[f64], x_cf: &[f64]) -> Result<f64> {
    Ok(shifts(transform, x, x_cf)?.sum())
}

/// `max_j |Q_j(x_cf[j]) − Q_j(x[j])|`
pub fn cost_max(transform: &PercentileTransform, x: &[f64], x_cf: &[f64]) -> Result<f64> {
    Ok(shifts(transform, x, x_cf)?.fold(0.0, f64::max))
}

pub fn cost_report(transform: &PercentileTransform, x: &[f64], x_cf: &[f64]) -> Result<CostReport> {
    Ok(CostReport {
        cost_total: cost_total(transform, x, x_cf)?,
        cost_max: cost_max(transform, x, x_cf)?,
        norm_cost: math::distance(x, x_cf),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeerTransfer {
    /// Position of the peer in the level set.
    pub peer: usize,
    pub is_base: bool,
    pub risk: f64,
    pub valid_count: usize,
    #[serde(rename = "T")]
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferReport {
    pub n_explained: usize,
    pub peers: Vec<PeerTransfer>,
}

impl TransferReport {
    /// Mean `T` over non-base peers, `None` if the set holds only the base.
    pub fn mean_peer_t(&self) -> Option<f64> {
        let ts: Vec<f64> = self.peers.iter().filter(|p| !p.is_base).map(|p| p.t).collect();
        math::mean(&ts)
    }
}

/// Fraction of counterfactuals that each peer also accepts.
pub fn transferability<M: Scorer>(results: &[RecourseResult], peers: &LevelSet<M>) -> Result<TransferReport> {
    if results.is_empty() {
        return Err(Error::Empty("recourse results"));
    }
    if let Some(i) = results.iter().position(|r| !r.found) {
        return Err(Error::InvalidArgument(alloc::format!("result {i} has found = false")));
    }
    let n = results.len();
    let peers = peers
        .peers
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let valid_count = results.iter().filter(|r| p.model.score(&r.x_cf) > 0.0).count();
            PeerTransfer { peer: i, is_base: p.is_base, risk: p.risk, valid_count, t: valid_count as f64 / n as f64 }
        })
        .collect();
    Ok(TransferReport { n_explained: n, peers })
}

/// Mean `|f(x) − g(x)|` over rows rejected by `f` or by `g`.
pub fn discrepancy<'a>(f: &dyn Scorer, g: &dyn Scorer, rows: impl IntoIterator<Item = &'a [f64]>) -> Result<f64> {
    let mut total = 0.0;
    let mut n = 0usize;
    for x in rows {
        let (a, b) = (f.score(x), g.score(x));
        if a <= 0.0 || b <= 0.0 {
            total += math::abs(a - b);
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::EmptyRegion("H_f^- ∪ H_g^-"));
    }
    Ok(total / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::{build_level_set, LinearModel, RiskWindow};
    use crate::dataset::{Dataset, Label};
    use crate::engine::Method;
    use crate::schema::FeatureSchema;
    use alloc::vec;
    use proptest::prelude::*;

    fn reference() -> PercentileTransform {
        let col: Vec<f64> = (0..10).map(f64::from).collect();
        PercentileTransform::from_columns(vec![col.clone(), col]).unwrap()
    }

    #[test]
    fn identity_move_costs_nothing() {
        let t = reference();
        let x = [3.0, 4.0];
        assert_eq!(cost_total(&t, &x, &x).unwrap(), 0.0);
        assert_eq!(cost_max(&t, &x, &x).unwrap(), 0.0);
    }

    #[test]
    fn min_to_max_contributes_nearly_one() {
        let t = reference();
        let c = cost_total(&t, &[0.0, 5.0], &[9.0, 5.0]).unwrap();
        assert!((c - 1.0).abs() <= 1.0 / 10.0 + 1e-12, "{c}");
        assert_eq!(cost_max(&t, &[0.0, 5.0], &[9.0, 5.0]).unwrap(), c);
    }

    #[test]
    fn two_feature_max_shift() {
        // Q(v) = (#< + #=/2) / 10 on 0..9: Q(2) = .25, Q(4) = .45, Q(1) = .15, Q(6) = .65
        let t = reference();
        let c = cost_max(&t, &[2.0, 1.0], &[4.0, 6.0]).unwrap();
        assert!((c - 0.5).abs() < 1e-12);
        assert!((cost_total(&t, &[2.0, 1.0], &[4.0, 6.0]).unwrap() - 0.7).abs() < 1e-12);
    }

    #[test]
    fn discrepancy_examples() {
        struct Fixed(Vec<(f64, f64)>, bool);
        impl Scorer for Fixed {
            fn dim(&self) -> usize {
                1
            }
            fn score(&self, x: &[f64]) -> f64 {
                let p = self.0[x[0] as usize];
                if self.1 {
                    p.1
                } else {
                    p.0
                }
            }
        }
        let pairs = vec![(-1.0, -2.0), (-3.0, -1.0), (-0.5, -0.5)];
        let f = Fixed(pairs.clone(), false);
        let g = Fixed(pairs, true);
        let rows = [[0.0], [1.0], [2.0]];
        let d = discrepancy(&f, &g, rows.iter().map(|r| r.as_slice())).unwrap();
        assert_eq!(d, 1.0);
        assert_eq!(discrepancy(&f, &f, rows.iter().map(|r| r.as_slice())).unwrap(), 0.0);
        let shifted = LinearModel::from_affine(vec![1.0], -5.0);
        let plus = shifted.shifted(0.3);
        let d = discrepancy(&shifted, &plus, rows.iter().map(|r| r.as_slice())).unwrap();
        assert!((d - 0.3).abs() < 1e-12);
    }

    fn result(x_cf: Vec<f64>) -> RecourseResult {
        RecourseResult {
            found: true,
            x: vec![0.0],
            action: x_cf.clone(),
            x_cf,
            validity: vec![Label::Positive],
            method: Method::Gs,
            evaluations_used: 1,
            norm_cost: 0.0,
            shell: None,
            latent_code: None,
            shell_log: vec![],
        }
    }

    #[test]
    fn transfer_counts() {
        let f = LinearModel::from_affine(vec![1.0], 0.0);
        let g = LinearModel::from_affine(vec![1.0], -0.5);
        let data =
            Dataset::new(FeatureSchema::real(1), vec![vec![-1.0], vec![1.0]], vec![Label::Negative, Label::Positive])
                .unwrap();
        let set = build_level_set(f.clone(), vec![g, f.negated()], &data, 1.0, RiskWindow::TwoSided).unwrap();
        // 7 of 10 counterfactuals clear 0.5
        let results: Vec<RecourseResult> = (0..10).map(|i| result(vec![if i < 7 { 1.0 } else { 0.1 }])).collect();
        let report = transferability(&results, &set).unwrap();
        for p in &report.peers {
            let model = &set.peers[p.peer].model;
            if *model == f {
                assert_eq!(p.t, 1.0);
            } else if *model == f.negated() {
                assert_eq!(p.t, 0.0);
            } else {
                assert_eq!(p.valid_count, 7);
                assert!((p.t - 0.7).abs() < 1e-15);
            }
        }
        assert!(transferability(&[], &set).is_err());
    }

    proptest! {
        #[test]
        fn max_never_exceeds_total(x in proptest::collection::vec(-2.0f64..12.0, 2), y in proptest::collection::vec(-2.0f64..12.0, 2)) {
            let t = reference();
            let total = cost_total(&t, &x, &y).unwrap();
            let max = cost_max(&t, &x, &y).unwrap();
            prop_assert!(max <= total + 1e-15);
            prop_assert!((0.0..=1.0).contains(&max));
            let swapped = cost_total(&t, &[x[1], x[0]], &[y[1], y[0]]).unwrap();
            prop_assert!((swapped - total).abs() < 1e-15);
        }

        #[test]
        fn discrepancy_is_symmetric(w in proptest::collection::vec(-2.0f64..2.0, 2), v in proptest::collection::vec(-2.0f64..2.0, 2), b in -1.0f64..1.0) {
            let f = LinearModel::from_affine(w, b);
            let g = LinearModel::from_affine(v, -b);
            let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 / 5.0 - 2.0, 1.0 - i as f64 / 10.0]).collect();
            let a = discrepancy(&f, &g, rows.iter().map(Vec::as_slice));
            let c = discrepancy(&g, &f, rows.iter().map(Vec::as_slice));
            prop_assert_eq!(a.clone().ok(), c.ok());
            if let Ok(d) = discrepancy(&f, &f, rows.iter().map(Vec::as_slice)) {
                prop_assert_eq!(d, 0.0);
            }
        }
    }
}
