use alloc::vec::Vec;

use crate::{Error, Result};

/// Quantile levels emitted for violin-style plots.
pub const VIOLIN_LEVELS: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

/// Linearly interpolated quantile of `values` at level `p ∈ [0, 1]`.
pub fn quantile(values: &[f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("quantile input"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted_quantile(&sorted, p))
}

fn sorted_quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = crate::math::floor(pos) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

pub fn quantiles(values: &[f64], levels: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::Empty("quantile input"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(levels.iter().map(|p| sorted_quantile(&sorted, *p)).collect())
}

/// `bins + 1` equally spaced edges from `lo` to `hi`.
pub fn uniform_edges(lo: f64, hi: f64, bins: usize) -> Result<Vec<f64>> {
    if bins == 0 || !(hi >= lo) {
        return Err(Error::InvalidArgument(alloc::format!("bad histogram range [{lo}, {hi}] with {bins} bins")));
    }
    Ok((0..=bins).map(|i| lo + (hi - lo) * i as f64 / bins as f64).collect())
}

/// Counts per bin `[e_i, e_{i+1})`, the last bin closed. Values outside the
/// edges are clamped into the first or last bin.
pub fn histogram(values: &[f64], edges: &[f64]) -> Result<Vec<usize>> {
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::InvalidArgument("histogram edges must be sorted with at least two entries".into()));
    }
    let bins = edges.len() - 1;
    let mut counts = alloc::vec![0usize; bins];
    for v in values {
        let i = edges[1..bins].partition_point(|e| e <= v);
        counts[i] += 1;
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn quantile_interpolates() {
        let v = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(quantile(&v, 0.0).unwrap(), 1.0);
        assert_eq!(quantile(&v, 1.0).unwrap(), 4.0);
        assert_eq!(quantile(&v, 0.5).unwrap(), 2.5);
        assert!(quantile(&[], 0.5).is_err());
    }

    #[test]
    fn histogram_bins() {
        let edges = uniform_edges(0.0, 3.0, 3).unwrap();
        assert_eq!(histogram(&[0.0, 0.5, 1.0, 2.9, 3.0, -1.0, 9.0], &edges).unwrap(), vec![3, 1, 3]);
        let v = [0.2, 1.7, 2.2];
        assert_eq!(histogram(&v, &edges).unwrap(), histogram(&v, &edges).unwrap());
    }
}
