use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::shells::{self, ShellConfig};
use super::{Method, RecourseRequest, RecourseResult};
use crate::{Error, Result};

/// Growing spheres: shell sampling around `x` in feature space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct GsConfig {
    #[serde(flatten)]
    pub shells: ShellConfig,
    /// Per-feature step multiplier, e.g. feature standard deviations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<Vec<f64>>,
}

impl GsConfig {
    pub fn with_step(step: f64) -> Self {
        Self { shells: ShellConfig { step, ..ShellConfig::default() }, scale: None }
    }
}

/// Candidates perturb mutable coordinates only and are projected onto the
/// schema (support, direction) before scoring.
pub fn growing_spheres(request: &RecourseRequest, cfg: &GsConfig) -> Result<RecourseResult> {
    cfg.shells.validate()?;
    let dims = request.schema.mutable_indices();
    if dims.is_empty() {
        return Err(Error::NoMutableFeature);
    }
    if let Some(scale) = &cfg.scale {
        request.schema.check_dim(scale)?;
        if scale.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidArgument("scale entries must be positive".into()));
        }
    }
    if request.is_degenerate() {
        return Ok(request.zero_action(Method::Gs));
    }
    let outcome = shells::search(
        &request.x,
        &dims,
        cfg.scale.as_deref(),
        &cfg.shells,
        request.budget,
        request.seed,
        false,
        |point| {
            let mut candidate = point.to_vec();
            request.schema.project(&request.x, &mut candidate);
            Ok(request.all_positive(&candidate).then_some(candidate))
        },
    )?;
    Ok(match outcome.hit {
        Some(hit) => request.finish(hit.output, outcome.evaluations, Method::Gs, Some(hit.shell), None, outcome.log),
        None => request.not_found(outcome.evaluations, Method::Gs, outcome.log),
    })
}
