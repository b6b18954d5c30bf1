//! Numerical checks of the elementary inequalities behind the cost bounds,
//! each at tolerance `1e-12` relative to the magnitude of the larger side.

use alloc::format;

use crate::math;
use crate::{Error, Result};

const TOL: f64 = 1e-12;

fn le(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + TOL * lhs.abs().max(rhs.abs()).max(1.0)
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidArgument(format!("gamma must lie in [0, 1], got {gamma}")));
    }
    Ok(())
}

fn check_nonnegative(z: &[f64]) -> Result<()> {
    if z.is_empty() {
        return Err(Error::Empty("values"));
    }
    if let Some(v) = z.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("values must be finite and >= 0, got {v}")));
    }
    Ok(())
}

/// `max(a, b) = (a + b + |a − b|) / 2`
pub fn max_identity(a: f64, b: f64) -> bool {
    let lhs = 0.5 * (a + b + math::abs(a - b));
    let rhs = a.max(b);
    le(lhs, rhs) && le(rhs, lhs)
}

/// `Σ z_i^γ ≤ n^{1−γ} (Σ z_i)^γ` for `z_i ≥ 0`, `γ ∈ [0, 1]`.
pub fn power_mean(z: &[f64], gamma: f64) -> Result<bool> {
    check_gamma(gamma)?;
    check_nonnegative(z)?;
    let lhs: f64 = z.iter().map(|v| math::powf(*v, gamma)).sum();
    let n = z.len() as f64;
    let rhs = math::powf(n, 1.0 - gamma) * math::powf(z.iter().sum(), gamma);
    Ok(le(lhs, rhs))
}

/// `E[z^γ] ≤ (E z)^γ` for `z ≥ 0`, `γ ∈ [0, 1]` (concavity of `t ↦ t^γ`).
pub fn jensen_power(samples: &[f64], gamma: f64) -> Result<bool> {
    check_gamma(gamma)?;
    check_nonnegative(samples)?;
    let n = samples.len() as f64;
    let lhs = samples.iter().map(|v| math::powf(*v, gamma)).sum::<f64>() / n;
    let rhs = math::powf(samples.iter().sum::<f64>() / n, gamma);
    Ok(le(lhs, rhs))
}

/// Paired per-individual costs: mean sparse cost ≤ mean support cost.
pub fn corollary_check(sparse_costs: &[f64], support_costs: &[f64]) -> Result<bool> {
    if sparse_costs.len() != support_costs.len() {
        return Err(Error::Dimension { expected: sparse_costs.len(), got: support_costs.len() });
    }
    let (Some(s), Some(d)) = (math::mean(sparse_costs), math::mean(support_costs)) else {
        return Err(Error::Empty("paired costs"));
    };
    Ok(s <= d)
}
