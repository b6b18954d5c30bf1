use alloc::vec::Vec;

use super::shells::{self, ShellConfig};
use super::{Method, RecourseRequest, RecourseResult};
use crate::autoencoder::Generative;
use crate::{Error, Result};

/// Shell search around `encode(x)` in latent space. Each sampled code is
/// decoded, immutable features are overwritten with their original values,
/// the candidate is projected onto the schema and then scored. The
/// reconstruction `decode(encode(x))` is tried first as shell 0.
pub fn latent_recourse(request: &RecourseRequest, ae: &dyn Generative, cfg: &ShellConfig) -> Result<RecourseResult> {
    cfg.validate()?;
    if ae.input_dim() != request.schema.len() {
        return Err(Error::Dimension { expected: request.schema.len(), got: ae.input_dim() });
    }
    if request.is_degenerate() {
        return Ok(request.zero_action(Method::Latent));
    }
    let z0 = ae.encode(&request.x)?;
    let dims: Vec<usize> = (0..z0.len()).collect();
    let outcome = shells::search(&z0, &dims, None, cfg, request.budget, request.seed, true, |z| {
        let mut candidate = ae.decode(z)?;
        request.schema.project(&request.x, &mut candidate);
        Ok(request.all_positive(&candidate).then_some(candidate))
    })?;
    Ok(match outcome.hit {
        Some(hit) => request.finish(
            hit.output,
            outcome.evaluations,
            Method::Latent,
            Some(hit.shell),
            Some(hit.point),
            outcome.log,
        ),
        None => request.not_found(outcome.evaluations, Method::Latent, outcome.log),
    })
}
