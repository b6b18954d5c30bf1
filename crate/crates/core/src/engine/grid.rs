//! Exact recourse over a finite action lattice.
//!
//! The lattice holds, per mutable feature, the admissible candidate values.
//! [`grid_recourse`] runs best-first search over partial assignments (one
//! feature at a time, in feature order) keyed by an admissible lower bound
//! on the percentile objective. Linear targets give an upper bound on the
//! reachable score, which prunes infeasible branches and tightens the cost
//! bound. [`brute_force_recourse`] enumerates every lattice point and is the
//! reference oracle. Both rank valid points by `(objective, ‖action‖², x_cf)`
//! with `x_cf` compared lexicographically in feature order.

use alloc::collections::BinaryHeap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::{Method, RecourseRequest, RecourseResult};
use crate::classifier::Affine;
use crate::math;
use crate::percentile::PercentileTransform;
use crate::schema::FeatureSchema;
use crate::{Error, Result};

pub const BRUTE_FORCE_LIMIT: u128 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Sum of per-feature percentile shifts.
    #[default]
    TotalShift,
    /// Largest per-feature percentile shift.
    MaxShift,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridConfig {
    pub objective: Objective,
    /// Lattice resolution: candidate percentiles `0, 1/r, …, 1`.
    pub resolution: usize,
    /// Required probability under a logistic link; 0.5 is a raw score of 0.
    pub probability_threshold: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { objective: Objective::TotalShift, resolution: 20, probability_threshold: 0.5 }
    }
}

impl GridConfig {
    fn score_threshold(&self) -> Result<f64> {
        let p = self.probability_threshold;
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidArgument(format!("probability_threshold must lie in (0, 1), got {p}")));
        }
        Ok(if p == 0.5 { 0.0 } else { math::ln(p / (1.0 - p)) })
    }
}

/// Candidate values per mutable feature for one individual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionGrid {
    origin: Vec<f64>,
    axes: Vec<(usize, Vec<f64>)>,
}

impl ActionGrid {
    /// `axes` maps mutable feature indices (ascending) to their candidate
    /// values. Lists are sorted and deduplicated; every value must be
    /// admissible for `origin` under `schema`.
    pub fn new(schema: &FeatureSchema, origin: &[f64], axes: Vec<(usize, Vec<f64>)>) -> Result<Self> {
        schema.check_dim(origin)?;
        let mut prev: Option<usize> = None;
        let mut clean = Vec::with_capacity(axes.len());
        for (j, mut values) in axes {
            if j >= schema.len() || prev.is_some_and(|p| p >= j) {
                return Err(Error::InvalidArgument(format!("grid axes must be ascending feature indices, got {j}")));
            }
            prev = Some(j);
            if !schema.feature(j).mutable {
                return Err(Error::InvalidArgument(format!("immutable feature {j} cannot carry grid values")));
            }
            values.sort_by(f64::total_cmp);
            values.dedup();
            if values.is_empty() {
                return Err(Error::Empty("grid axis"));
            }
            if let Some(v) = values.iter().find(|v| !schema.admits(j, origin[j], **v)) {
                return Err(Error::InvalidArgument(format!("grid value {v} is not admissible for feature {j}")));
            }
            clean.push((j, values));
        }
        Ok(Self { origin: origin.to_vec(), axes: clean })
    }

    /// Percentile lattice `Q_j^{-1}(i / r)` for `i = 0..=r` plus the current
    /// value, filtered by support and direction.
    pub fn percentile_lattice(
        transform: &PercentileTransform,
        schema: &FeatureSchema,
        x: &[f64],
        resolution: usize,
    ) -> Result<Self> {
        if resolution < 1 {
            return Err(Error::InvalidArgument("grid resolution must be >= 1".into()));
        }
        transform.check_dim(x)?;
        let axes = schema
            .mutable_indices()
            .into_iter()
            .map(|j| {
                let mut values: Vec<f64> = (0..=resolution)
                    .map(|i| transform.value_at(j, i as f64 / resolution as f64))
                    .filter(|v| schema.admits(j, x[j], *v))
                    .collect();
                values.push(x[j]);
                (j, values)
            })
            .collect();
        Self::new(schema, x, axes)
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn axes(&self) -> &[(usize, Vec<f64>)] {
        &self.axes
    }

    pub fn size(&self) -> u128 {
        self.axes.iter().map(|(_, v)| v.len() as u128).product()
    }

    fn point(&self, choice: &[usize]) -> Vec<f64> {
        let mut x = self.origin.clone();
        for ((j, values), &c) in self.axes.iter().zip(choice) {
            x[*j] = values[c];
        }
        x
    }
}

/// Percentile-shift objective of moving `x` to `x_cf`, summed in feature order.
pub fn objective_value(transform: &PercentileTransform, x: &[f64], x_cf: &[f64], objective: Objective) -> f64 {
    let shifts = (0..x.len()).map(|j| math::abs(transform.quantile(j, x_cf[j]) - transform.quantile(j, x[j])));
    match objective {
        Objective::TotalShift => shifts.sum(),
        Objective::MaxShift => shifts.fold(0.0, f64::max),
    }
}

fn combine(objective: Objective, acc: f64, term: f64) -> f64 {
    match objective {
        Objective::TotalShift => acc + term,
        Objective::MaxShift => acc.max(term),
    }
}

fn l2_squared(x: &[f64], x_cf: &[f64]) -> f64 {
    x.iter().zip(x_cf).map(|(a, b)| (b - a) * (b - a)).sum()
}

/// Ranking key of a valid point.
#[derive(Debug, Clone, PartialEq)]
struct Key {
    objective: f64,
    l2: f64,
    point: Vec<f64>,
}

impl Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.objective.total_cmp(&other.objective).then(self.l2.total_cmp(&other.l2)).then_with(|| {
            self.point
                .iter()
                .zip(&other.point)
                .map(|(a, b)| a.total_cmp(b))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        })
    }
}

fn result_from(request: &RecourseRequest, best: Option<Key>, evaluations: usize, method: Method) -> RecourseResult {
    match best {
        Some(key) => request.finish(key.point, evaluations, method, None, None, Vec::new()),
        None => request.not_found(evaluations, method, Vec::new()),
    }
}

fn check_grid(request: &RecourseRequest, grid: &ActionGrid, transform: &PercentileTransform) -> Result<()> {
    transform.check_dim(&request.x)?;
    if grid.origin != request.x {
        return Err(Error::InvalidArgument("grid was built for a different individual".into()));
    }
    Ok(())
}

/// Exhaustive enumeration of the lattice (at most [`BRUTE_FORCE_LIMIT`] points).
pub fn brute_force_recourse(
    request: &RecourseRequest,
    grid: &ActionGrid,
    transform: &PercentileTransform,
    objective: Objective,
) -> Result<RecourseResult> {
    check_grid(request, grid, transform)?;
    let size = grid.size();
    if size > BRUTE_FORCE_LIMIT {
        return Err(Error::GridTooLarge { size, limit: BRUTE_FORCE_LIMIT });
    }
    if request.is_degenerate() {
        return Ok(request.zero_action(Method::BruteForce));
    }
    let mut choice = vec![0usize; grid.axes.len()];
    let mut best: Option<Key> = None;
    let mut evaluations = 0;
    loop {
        let point = grid.point(&choice);
        evaluations += 1;
        if request.all_positive(&point) {
            let key = Key {
                objective: objective_value(transform, &request.x, &point, objective),
                l2: l2_squared(&request.x, &point),
                point,
            };
            if best.as_ref().is_none_or(|b| key.cmp(b).is_lt()) {
                best = Some(key);
            }
        }
        // odometer increment, last axis fastest
        let mut i = choice.len();
        loop {
            if i == 0 {
                return Ok(result_from(request, best, evaluations, Method::BruteForce));
            }
            i -= 1;
            choice[i] += 1;
            if choice[i] < grid.axes[i].1.len() {
                break;
            }
            choice[i] = 0;
        }
    }
}

/// Search node: values chosen for the first `choice.len()` axes.
struct Node {
    bound: f64,
    l2: f64,
    partial: f64,
    choice: Vec<usize>,
}

impl Node {
    fn key_cmp(&self, other: &Self) -> Ordering {
        self.bound.total_cmp(&other.bound).then(self.l2.total_cmp(&other.l2))
    }
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.key_cmp(other).is_eq()
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other.key_cmp(self)
    }
}

/// Per-target data for bounding the reachable score.
struct LinearTarget {
    affine: Affine,
    /// Suffix sums over axes of `max_v a_j (v − x_j)` (length axes + 1).
    gain_suffix: Vec<f64>,
    /// Suffix max and sum over axes of the best gain per unit cost.
    ratio_suffix_max: Vec<f64>,
    ratio_suffix_sum: Vec<f64>,
    slack: f64,
}

/// Best-first search for the exact lattice optimum of `config.objective`.
/// Node expansions count against the request budget; an exhausted budget
/// returns `found = false`.
pub fn grid_recourse(
    request: &RecourseRequest,
    grid: &ActionGrid,
    transform: &PercentileTransform,
    config: &GridConfig,
) -> Result<RecourseResult> {
    check_grid(request, grid, transform)?;
    let threshold = config.score_threshold()?;
    let affines: Vec<Affine> = request
        .targets
        .iter()
        .enumerate()
        .map(|(i, t)| t.affine().ok_or(Error::NonLinearTarget(i)))
        .collect::<Result<_>>()?;
    if request.is_degenerate() && threshold <= 0.0 {
        return Ok(request.zero_action(Method::Grid));
    }
    let x = &request.x;
    let n_axes = grid.axes.len();
    let costs: Vec<Vec<f64>> = grid
        .axes
        .iter()
        .map(|(j, values)| {
            let q0 = transform.quantile(*j, x[*j]);
            values.iter().map(|v| math::abs(transform.quantile(*j, *v) - q0)).collect()
        })
        .collect();
    let steps: Vec<Vec<f64>> =
        grid.axes.iter().map(|(j, values)| values.iter().map(|v| (v - x[*j]) * (v - x[*j])).collect()).collect();

    let targets: Vec<LinearTarget> = affines
        .into_iter()
        .map(|affine| {
            let mut best_gain = Vec::with_capacity(n_axes);
            let mut ratio = Vec::with_capacity(n_axes);
            for ((j, values), cost) in grid.axes.iter().zip(&costs) {
                let w = affine.weights[*j];
                let mut g_max = f64::NEG_INFINITY;
                let mut r_max = 0.0f64;
                for (v, c) in values.iter().zip(cost) {
                    let gain = w * (v - x[*j]);
                    g_max = g_max.max(gain);
                    if gain > 0.0 {
                        r_max = if *c > 0.0 { r_max.max(gain / c) } else { f64::INFINITY };
                    }
                }
                best_gain.push(g_max);
                ratio.push(r_max);
            }
            let mut gain_suffix = vec![0.0; n_axes + 1];
            let mut ratio_suffix_max = vec![0.0f64; n_axes + 1];
            let mut ratio_suffix_sum = vec![0.0; n_axes + 1];
            for a in (0..n_axes).rev() {
                gain_suffix[a] = gain_suffix[a + 1] + best_gain[a];
                ratio_suffix_max[a] = ratio_suffix_max[a + 1].max(ratio[a]);
                ratio_suffix_sum[a] = ratio_suffix_sum[a + 1] + ratio[a];
            }
            let magnitude = math::abs(affine.bias)
                + affine.weights.iter().zip(x).map(|(w, v)| math::abs(w * v)).sum::<f64>()
                + best_gain.iter().map(|g| math::abs(*g)).sum::<f64>();
            LinearTarget { affine, gain_suffix, ratio_suffix_max, ratio_suffix_sum, slack: 1e-9 * (1.0 + magnitude) }
        })
        .collect();

    let base_scores: Vec<f64> = targets.iter().map(|t| t.affine.eval(x)).collect();

    // Lower bound on the objective of any completion, or None if no
    // completion can satisfy every linear target.
    let bound = |depth: usize, partial: f64, gains: &[f64]| -> Option<f64> {
        let mut extra = 0.0f64;
        for (t, (s0, g)) in targets.iter().zip(base_scores.iter().zip(gains)) {
            let reachable = s0 + g + t.gain_suffix[depth];
            if reachable <= threshold - t.slack {
                return None;
            }
            let need = threshold - (s0 + g);
            if need > 0.0 {
                let e = match config.objective {
                    Objective::TotalShift => need / t.ratio_suffix_max[depth],
                    Objective::MaxShift => need / t.ratio_suffix_sum[depth],
                };
                if e.is_finite() {
                    extra = extra.max(e * (1.0 - 1e-9) - 1e-12);
                }
            }
        }
        Some(match config.objective {
            Objective::TotalShift => partial + extra.max(0.0),
            Objective::MaxShift => partial.max(extra),
        })
    };

    let gains_of = |choice: &[usize]| -> Vec<f64> {
        targets
            .iter()
            .map(|t| {
                choice.iter().zip(&grid.axes).map(|(&c, (j, values))| t.affine.weights[*j] * (values[c] - x[*j])).sum()
            })
            .collect()
    };

    let mut heap = BinaryHeap::new();
    if let Some(b) = bound(0, 0.0, &vec![0.0; targets.len()]) {
        heap.push(Node { bound: b, l2: 0.0, partial: 0.0, choice: Vec::new() });
    }
    let mut best: Option<Key> = None;
    let mut expansions = 0usize;
    while let Some(node) = heap.pop() {
        if let Some(b) = &best {
            let beaten = node.bound.total_cmp(&b.objective).then(node.l2.total_cmp(&b.l2)).is_gt();
            if beaten {
                break;
            }
        }
        if expansions >= request.budget {
            return Ok(request.not_found(expansions, Method::Grid, Vec::new()));
        }
        expansions += 1;
        let depth = node.choice.len();
        if depth == n_axes {
            let point = grid.point(&node.choice);
            if request.targets.iter().all(|t| t.score(&point) > threshold) {
                let key = Key {
                    objective: objective_value(transform, x, &point, config.objective),
                    l2: l2_squared(x, &point),
                    point,
                };
                if best.as_ref().is_none_or(|b| key.cmp(b).is_lt()) {
                    best = Some(key);
                }
            }
            continue;
        }
        for (c, (cost, step)) in costs[depth].iter().zip(&steps[depth]).enumerate() {
            let mut choice = node.choice.clone();
            choice.push(c);
            let partial = combine(config.objective, node.partial, *cost);
            let gains = gains_of(&choice);
            let Some(b) = bound(depth + 1, partial, &gains) else {
                continue;
            };
            let child = Node { bound: b, l2: node.l2 + step, partial, choice };
            if depth + 1 == n_axes {
                // complete nodes carry their exact objective
                let point = grid.point(&child.choice);
                let exact = objective_value(transform, x, &point, config.objective);
                heap.push(Node { bound: exact, l2: l2_squared(x, &point), ..child });
            } else {
                heap.push(child);
            }
        }
    }
    Ok(result_from(request, best, expansions, Method::Grid))
}
