//! Counterfactual generators.
//!
//! Every engine takes a [`RecourseRequest`] (an individual, one or more
//! target scorers, the feature schema, an evaluation budget and a seed) and
//! returns a [`RecourseResult`]. A result is `found` only if every target
//! scores the counterfactual strictly positive. With two targets the search
//! solves the jointly constrained problem.

mod grid;
mod latent;
mod shells;
mod spheres;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::autoencoder::Generative;
use crate::classifier::Scorer;
use crate::dataset::Label;
use crate::math;
use crate::percentile::PercentileTransform;
use crate::schema::FeatureSchema;
use crate::{Error, Result};

pub use grid::{
    brute_force_recourse, grid_recourse, objective_value, ActionGrid, GridConfig, Objective, BRUTE_FORCE_LIMIT,
};
pub use latent::latent_recourse;
pub use shells::{ShellConfig, ShellLog};
pub use spheres::{growing_spheres, GsConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Gs,
    Grid,
    Latent,
    BruteForce,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Gs => "gs",
            Method::Grid => "grid",
            Method::Latent => "latent",
            Method::BruteForce => "brute_force",
        }
    }
}

pub struct RecourseRequest<'a> {
    pub x: Vec<f64>,
    pub targets: Vec<&'a dyn Scorer>,
    pub schema: &'a FeatureSchema,
    pub budget: usize,
    pub seed: u64,
}

impl<'a> RecourseRequest<'a> {
    /// Validates dimensions, the budget and that `x` satisfies the schema.
    pub fn new(
        x: Vec<f64>,
        targets: Vec<&'a dyn Scorer>,
        schema: &'a FeatureSchema,
        budget: usize,
        seed: u64,
    ) -> Result<Self> {
        schema.check_dim(&x)?;
        if targets.is_empty() {
            return Err(Error::Empty("recourse targets"));
        }
        for t in &targets {
            if t.dim() != schema.len() {
                return Err(Error::Dimension { expected: schema.len(), got: t.dim() });
            }
        }
        if budget < 1 {
            return Err(Error::InvalidArgument("budget must be >= 1".into()));
        }
        for (f, v) in schema.features().iter().zip(&x) {
            if let Err(reason) = f.check(*v) {
                return Err(Error::Schema(format!("feature {}: {reason}", f.name)));
            }
        }
        Ok(Self { x, targets, schema, budget, seed })
    }

    /// All targets already accept `x`.
    pub fn is_degenerate(&self) -> bool {
        self.targets.iter().all(|t| t.score(&self.x) > 0.0)
    }

    pub(crate) fn all_positive(&self, candidate: &[f64]) -> bool {
        self.targets.iter().all(|t| t.score(candidate) > 0.0)
    }

    pub(crate) fn finish(
        &self,
        x_cf: Vec<f64>,
        evaluations_used: usize,
        method: Method,
        shell: Option<usize>,
        latent_code: Option<Vec<f64>>,
        shell_log: Vec<ShellLog>,
    ) -> RecourseResult {
        let validity: Vec<Label> = self.targets.iter().map(|t| Label::from_score(t.score(&x_cf))).collect();
        let action: Vec<f64> = x_cf.iter().zip(&self.x).map(|(a, b)| a - b).collect();
        RecourseResult {
            found: validity.iter().all(|l| l.is_positive()),
            norm_cost: math::norm(&action),
            x: self.x.clone(),
            x_cf,
            action,
            validity,
            method,
            evaluations_used,
            shell,
            latent_code,
            shell_log,
        }
    }

    pub(crate) fn not_found(
        &self,
        evaluations_used: usize,
        method: Method,
        shell_log: Vec<ShellLog>,
    ) -> RecourseResult {
        let mut r = self.finish(self.x.clone(), evaluations_used, method, None, None, shell_log);
        r.found = false;
        r
    }

    pub(crate) fn zero_action(&self, method: Method) -> RecourseResult {
        self.finish(self.x.clone(), 0, method, None, None, Vec::new())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecourseResult {
    pub found: bool,
    pub x: Vec<f64>,
    pub x_cf: Vec<f64>,
    pub action: Vec<f64>,
    /// Decision of each target at `x_cf`, in request order.
    pub validity: Vec<Label>,
    pub method: Method,
    pub evaluations_used: usize,
    pub norm_cost: f64,
    /// Index of the successful shell for shell-based engines.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shell: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latent_code: Option<Vec<f64>>,
    #[serde(skip)]
    pub shell_log: Vec<ShellLog>,
}

/// Independent re-check of a result: validity under every target,
/// immutables untouched, directions and support respected.
pub fn audit(
    result: &RecourseResult,
    targets: &[&dyn Scorer],
    schema: &FeatureSchema,
) -> core::result::Result<(), String> {
    let (x, x_cf) = (&result.x, &result.x_cf);
    if x.len() != schema.len() || x_cf.len() != schema.len() {
        return Err("dimension mismatch".into());
    }
    if result.found {
        for (i, t) in targets.iter().enumerate() {
            let s = t.score(x_cf);
            if !(s > 0.0) {
                return Err(format!("target {i} scores {s} at the counterfactual"));
            }
        }
    }
    for (j, f) in schema.features().iter().enumerate() {
        if !schema.admits(j, x[j], x_cf[j]) {
            return Err(format!("feature {} violates its constraints: {} -> {}", f.name, x[j], x_cf[j]));
        }
    }
    Ok(())
}

/// Engine selection with its configuration.
pub enum Engine<'a> {
    Gs(GsConfig),
    Grid(&'a PercentileTransform, GridConfig),
    Latent(&'a dyn Generative, ShellConfig),
}

impl Engine<'_> {
    pub fn run(&self, request: &RecourseRequest) -> Result<RecourseResult> {
        match self {
            Engine::Gs(cfg) => growing_spheres(request, cfg),
            Engine::Grid(transform, cfg) => {
                let grid = ActionGrid::percentile_lattice(transform, request.schema, &request.x, cfg.resolution)?;
                grid_recourse(request, &grid, transform, cfg)
            }
            Engine::Latent(ae, cfg) => latent_recourse(request, *ae, cfg),
        }
    }
}

/// Recourse valid under both `f` and `g` at once.
pub fn joint_recourse(
    f: &dyn Scorer,
    g: &dyn Scorer,
    x: Vec<f64>,
    schema: &FeatureSchema,
    engine: &Engine,
    budget: usize,
    seed: u64,
) -> Result<RecourseResult> {
    let request = RecourseRequest::new(x, alloc::vec![f, g], schema, budget, seed)?;
    engine.run(&request)
}
