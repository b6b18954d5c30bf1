//! Top-two principal components by power iteration with deflation.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;
use crate::math;
use crate::{Error, Result};

const TOLERANCE: f64 = 1e-8;
const MAX_ITERATIONS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// Unit-norm principal directions, largest eigenvalue first.
    pub components: [Vec<f64>; 2],
    pub eigenvalues: [f64; 2],
}

impl Pca {
    /// Coordinates of `x` along the two components.
    pub fn project(&self, x: &[f64]) -> [f64; 2] {
        let c: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        [math::dot(&c, &self.components[0]), math::dot(&c, &self.components[1])]
    }
}

/// Population covariance of `rows` around their mean.
pub fn covariance(rows: &[Vec<f64>]) -> Result<(Vec<f64>, Matrix)> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::Empty("pca input"));
    }
    let d = rows[0].len();
    if let Some(r) = rows.iter().find(|r| r.len() != d) {
        return Err(Error::Dimension { expected: d, got: r.len() });
    }
    let mut mean = vec![0.0; d];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut cov = Matrix::zeros(d, d);
    for r in rows {
        for i in 0..d {
            for j in 0..d {
                cov[(i, j)] += (r[i] - mean[i]) * (r[j] - mean[j]);
            }
        }
    }
    for i in 0..d {
        for j in 0..d {
            cov[(i, j)] /= n as f64;
        }
    }
    Ok((mean, cov))
}

fn power_iteration(m: &Matrix, start: &[f64], orthogonal_to: Option<&[f64]>) -> (Vec<f64>, f64) {
    let orthogonalize = |v: &mut Vec<f64>| {
        if let Some(u) = orthogonal_to {
            let p = math::dot(v, u);
            v.iter_mut().zip(u).for_each(|(a, b)| *a -= p * b);
        }
    };
    let mut v = start.to_vec();
    orthogonalize(&mut v);
    let n = math::norm(&v);
    v.iter_mut().for_each(|a| *a /= n);
    let mut lambda = 0.0;
    for _ in 0..MAX_ITERATIONS {
        let mut w = m.mul_vec(&v);
        orthogonalize(&mut w);
        let norm = math::norm(&w);
        if norm < 1e-300 {
            return (v, 0.0);
        }
        w.iter_mut().for_each(|a| *a /= norm);
        let next_lambda = math::dot(&w, &m.mul_vec(&w));
        let change = w.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        v = w;
        let converged =
            math::sqrt(change) < TOLERANCE && math::abs(next_lambda - lambda) <= TOLERANCE * next_lambda.abs().max(1.0);
        lambda = next_lambda;
        if converged {
            break;
        }
    }
    (v, lambda)
}

/// Needs at least two features.
pub fn fit_pca(rows: &[Vec<f64>]) -> Result<Pca> {
    let (mean, cov) = covariance(rows)?;
    let d = mean.len();
    if d < 2 {
        return Err(Error::InvalidArgument("pca needs at least two features".into()));
    }
    let start: Vec<f64> = (0..d).map(|i| 1.0 + 0.37 * i as f64).collect();
    let (v1, l1) = power_iteration(&cov, &start, None);
    let mut deflated = cov.clone();
    for i in 0..d {
        for j in 0..d {
            deflated[(i, j)] -= l1 * v1[i] * v1[j];
        }
    }
    let alt: Vec<f64> = (0..d).map(|i| if i % 2 == 0 { 1.0 } else { -0.61 - 0.1 * i as f64 }).collect();
    let (v2, l2) = power_iteration(&deflated, &alt, Some(&v1));
    Ok(Pca { mean, components: [v1, v2], eigenvalues: [l1, l2] })
}
