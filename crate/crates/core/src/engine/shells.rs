use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShellConfig {
    pub step: f64,
    pub max_shells: usize,
}

impl Default for ShellConfig {
    fn default() -> Self {
        Self { step: 0.1, max_shells: 50 }
    }
}

impl ShellConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !self.step.is_finite() || self.max_shells < 1 {
            return Err(Error::InvalidArgument(alloc::format!("invalid shell config {self:?}")));
        }
        Ok(())
    }

    /// Fixed per-shell sample count: `budget / max_shells`, at least one.
    pub fn samples_per_shell(&self, budget: usize) -> usize {
        (budget / self.max_shells).max(1)
    }
}

/// Evaluations and valid candidates seen on one shell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShellLog {
    pub shell: usize,
    pub evaluations: usize,
    pub valid: usize,
}

pub(crate) struct Hit {
    pub shell: usize,
    pub point: Vec<f64>,
    pub output: Vec<f64>,
}

pub(crate) struct Outcome {
    pub hit: Option<Hit>,
    pub log: Vec<ShellLog>,
    pub evaluations: usize,
}

/// Samples points uniformly on spheres of radius `s · step` (s = 1, 2, …)
/// around `center`, perturbing only the coordinates in `dims` (optionally
/// scaled per coordinate). `evaluate` maps a sampled point to a valid output
/// or `None`. Stops at the first valid sample; shells are visited in order,
/// so the hit lies on the smallest successful shell. With `with_origin` the
/// center itself is evaluated first as shell 0.
#[allow(clippy::too_many_arguments)]
pub(crate) fn search(
    center: &[f64],
    dims: &[usize],
    scale: Option<&[f64]>,
    cfg: &ShellConfig,
    budget: usize,
    seed: u64,
    with_origin: bool,
    mut evaluate: impl FnMut(&[f64]) -> Result<Option<Vec<f64>>>,
) -> Result<Outcome> {
    let mut r = rng::seeded(seed);
    let mut log = Vec::new();
    let mut evaluations = 0;
    if with_origin {
        evaluations += 1;
        let out = evaluate(center)?;
        log.push(ShellLog { shell: 0, evaluations: 1, valid: out.is_some() as usize });
        if let Some(output) = out {
            return Ok(Outcome { hit: Some(Hit { shell: 0, point: center.to_vec(), output }), log, evaluations });
        }
    }
    let per_shell = cfg.samples_per_shell(budget);
    for shell in 1..=cfg.max_shells {
        if evaluations >= budget {
            break;
        }
        let radius = shell as f64 * cfg.step;
        let mut entry = ShellLog { shell, evaluations: 0, valid: 0 };
        for _ in 0..per_shell {
            if evaluations >= budget {
                break;
            }
            let u = rng::unit_direction(&mut r, dims.len());
            let mut point = center.to_vec();
            for (i, &j) in dims.iter().enumerate() {
                let s = scale.map_or(1.0, |s| s[j]);
                point[j] += radius * u[i] * s;
            }
            evaluations += 1;
            entry.evaluations += 1;
            if let Some(output) = evaluate(&point)? {
                entry.valid += 1;
                log.push(entry);
                return Ok(Outcome { hit: Some(Hit { shell, point, output }), log, evaluations });
            }
        }
        log.push(entry);
    }
    Ok(Outcome { hit: None, log, evaluations })
}
