//! Seeded randomness shared by every stochastic routine.

use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

pub type Rng = rand_chacha::ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

pub fn standard_normal(rng: &mut Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// A direction drawn uniformly from the unit sphere in `dim` dimensions.
pub fn unit_direction(rng: &mut Rng, dim: usize) -> alloc::vec::Vec<f64> {
    loop {
        let v: alloc::vec::Vec<f64> = (0..dim).map(|_| standard_normal(rng)).collect();
        let n = crate::math::norm(&v);
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}
