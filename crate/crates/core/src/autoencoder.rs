//! KL-regularized autoencoder for tabular data with one likelihood head per
//! feature, plus the exact linear autoencoder used as an oracle fixture.
//!
//! Encoder: standardized transformed inputs → tanh MLP → latent mean and
//! log-variance. Decoder: latent code → tanh MLP → head parameters:
//!
//! | family                | head output        | likelihood                      |
//! |-----------------------|--------------------|---------------------------------|
//! | `count`               | η                  | Poisson, rate `softplus(η + c)` |
//! | `positive_continuous` | mean, log-variance | Gaussian on standardized `ln x` |
//! | `real`                | mean, log-variance | Gaussian on standardized `x`    |
//!
//! Training minimizes the mean negative log-likelihood plus
//! `kl_weight · KL(q(z|x) ‖ N(0, I))` with Adam on seeded mini-batches.
//! With `kl_weight = 0` the latent mean is used directly (plain autoencoder).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::linalg::{self, Matrix};
use crate::math;
use crate::rng;
use crate::schema::{FeatureSchema, Likelihood, POSITIVE_FLOOR};
use crate::{Error, Result};

const HEAD_LOGVAR: (f64, f64) = (-7.0, 3.0);
const LATENT_LOGVAR: (f64, f64) = (-8.0, 4.0);
const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// A deterministic encoder/decoder pair between `R^d` and `R^k`.
pub trait Generative {
    fn input_dim(&self) -> usize;
    fn latent_dim(&self) -> usize;
    fn encode(&self, x: &[f64]) -> Result<Vec<f64>>;
    fn decode(&self, z: &[f64]) -> Result<Vec<f64>>;
}

/// `decode(z) = E·z + o`, `encode(x) = argmin_z ‖E·z + o − x‖`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearAutoencoder {
    embedding: Matrix,
    offset: Vec<f64>,
}

impl LinearAutoencoder {
    pub fn new(embedding: Matrix, offset: Vec<f64>) -> Result<Self> {
        if offset.len() != embedding.rows() {
            return Err(Error::Dimension { expected: embedding.rows(), got: offset.len() });
        }
        if embedding.cols() > embedding.rows() || linalg::orthonormal_columns(&embedding).is_none() {
            return Err(Error::InvalidArgument("embedding must have full column rank".into()));
        }
        Ok(Self { embedding, offset })
    }

    pub fn identity(d: usize) -> Self {
        Self { embedding: Matrix::identity(d), offset: vec![0.0; d] }
    }

    pub fn from_manifold(spec: &crate::synth::ManifoldSpec) -> Self {
        Self { embedding: spec.embedding().clone(), offset: spec.offset().to_vec() }
    }
}

impl Generative for LinearAutoencoder {
    fn input_dim(&self) -> usize {
        self.embedding.rows()
    }

    fn latent_dim(&self) -> usize {
        self.embedding.cols()
    }

    fn encode(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::Dimension { expected: self.input_dim(), got: x.len() });
        }
        let centered: Vec<f64> = x.iter().zip(&self.offset).map(|(a, b)| a - b).collect();
        linalg::least_squares(&self.embedding, &centered)
            .ok_or_else(|| Error::InvalidArgument("singular embedding".into()))
    }

    fn decode(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.latent_dim() {
            return Err(Error::Dimension { expected: self.latent_dim(), got: z.len() });
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("latent code".into()));
        }
        let mut x = self.embedding.mul_vec(z);
        for (v, o) in x.iter_mut().zip(&self.offset) {
            *v += o;
        }
        Ok(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub kl_weight: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { epochs: 15, learning_rate: 1e-2, kl_weight: 1.0, batch_size: 64, seed: 0 }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.batch_size < 1 || !(self.learning_rate > 0.0) || !(self.kl_weight >= 0.0) {
            return Err(Error::InvalidArgument(format!("invalid training config {self:?}")));
        }
        Ok(())
    }
}

/// Mean objective on the full training set before training (index 0) and
/// after every epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epoch_objectives: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoencoderModel {
    schema: FeatureSchema,
    latent_dim: usize,
    hidden: Vec<usize>,
    params: Vec<f64>,
    /// Mean and scale of the transformed features (`ln(1+x)`, `ln x`, `x`).
    input_mean: Vec<f64>,
    input_scale: Vec<f64>,
    /// Per-feature rate offset for count heads.
    count_offset: Vec<f64>,
}

/// Forward pass state for one sample.
struct Trace {
    enc: Vec<Vec<f64>>,
    dec: Vec<Vec<f64>>,
    z_mean: Vec<f64>,
    z_logvar: Vec<f64>,
    noise: Option<Vec<f64>>,
}

fn layer_sizes(first: usize, hidden: &[usize], last: usize) -> Vec<usize> {
    let mut s = vec![first];
    s.extend_from_slice(hidden);
    s.push(last);
    s
}

fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

/// Returns the activations of every layer, input first. Hidden layers use
/// tanh, the output layer is linear.
fn mlp_forward(params: &[f64], sizes: &[usize], input: &[f64]) -> Vec<Vec<f64>> {
    let mut acts = vec![input.to_vec()];
    let mut at = 0;
    let layers = sizes.len() - 1;
    for l in 0..layers {
        let (n_in, n_out) = (sizes[l], sizes[l + 1]);
        let w = &params[at..at + n_in * n_out];
        let b = &params[at + n_in * n_out..at + n_in * n_out + n_out];
        at += n_in * n_out + n_out;
        let prev = &acts[l];
        let out: Vec<f64> = (0..n_out)
            .map(|o| {
                let pre = b[o] + math::dot(&w[o * n_in..(o + 1) * n_in], prev);
                if l + 1 < layers {
                    math::tanh(pre)
                } else {
                    pre
                }
            })
            .collect();
        acts.push(out);
    }
    acts
}

/// Accumulates parameter gradients into `grads` and returns the gradient
/// with respect to the input.
fn mlp_backward(params: &[f64], sizes: &[usize], acts: &[Vec<f64>], grad_out: &[f64], grads: &mut [f64]) -> Vec<f64> {
    let layers = sizes.len() - 1;
    let mut offsets = Vec::with_capacity(layers);
    let mut at = 0;
    for l in 0..layers {
        offsets.push(at);
        at += sizes[l] * sizes[l + 1] + sizes[l + 1];
    }
    let mut delta = grad_out.to_vec();
    for l in (0..layers).rev() {
        let (n_in, n_out) = (sizes[l], sizes[l + 1]);
        let off = offsets[l];
        let input = &acts[l];
        for o in 0..n_out {
            let row = off + o * n_in;
            for i in 0..n_in {
                grads[row + i] += delta[o] * input[i];
            }
            grads[off + n_in * n_out + o] += delta[o];
        }
        let mut grad_in = vec![0.0; n_in];
        for o in 0..n_out {
            let w = &params[off + o * n_in..off + (o + 1) * n_in];
            for i in 0..n_in {
                grad_in[i] += w[i] * delta[o];
            }
        }
        if l > 0 {
            for (g, a) in grad_in.iter_mut().zip(input) {
                *g *= 1.0 - a * a;
            }
        }
        delta = grad_in;
    }
    delta
}

fn bounded(raw: f64, (lo, hi): (f64, f64)) -> (f64, f64) {
    let s = math::sigmoid(raw);
    (lo + (hi - lo) * s, (hi - lo) * s * (1.0 - s))
}

/// Rounds a decoded count mean to the nearest non-negative integer.
pub fn round_count(mean: f64) -> f64 {
    math::round(mean).max(0.0)
}

impl AutoencoderModel {
    fn head_width(&self) -> usize {
        self.schema.features().iter().map(|f| if f.likelihood == Likelihood::Count { 1 } else { 2 }).sum()
    }

    fn enc_sizes(&self) -> Vec<usize> {
        layer_sizes(self.schema.len(), &self.hidden, 2 * self.latent_dim)
    }

    fn dec_sizes(&self) -> Vec<usize> {
        layer_sizes(self.latent_dim, &self.hidden, self.head_width())
    }

    fn enc_params(&self) -> usize {
        param_count(&self.enc_sizes())
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    fn transform(&self, x: &[f64]) -> Vec<f64> {
        self.schema
            .features()
            .iter()
            .enumerate()
            .map(|(j, f)| {
                let t = match f.likelihood {
                    Likelihood::Count => math::ln_1p(x[j].max(0.0)),
                    Likelihood::PositiveContinuous => math::ln(x[j].max(POSITIVE_FLOOR)),
                    Likelihood::Real => x[j],
                };
                (t - self.input_mean[j]) / self.input_scale[j]
            })
            .collect()
    }

    fn forward(&self, params: &[f64], x: &[f64], noise: Option<&[f64]>) -> Trace {
        let (enc_p, dec_p) = params.split_at(self.enc_params());
        let enc = mlp_forward(enc_p, &self.enc_sizes(), &self.transform(x));
        let k = self.latent_dim;
        let out = enc.last().unwrap();
        let z_mean = out[..k].to_vec();
        let z_logvar: Vec<f64> = out[k..].iter().map(|&r| bounded(r, LATENT_LOGVAR).0).collect();
        let z: Vec<f64> = match noise {
            Some(eps) => (0..k).map(|i| z_mean[i] + math::exp(0.5 * z_logvar[i]) * eps[i]).collect(),
            None => z_mean.clone(),
        };
        let dec = mlp_forward(dec_p, &self.dec_sizes(), &z);
        Trace { enc, dec, z_mean, z_logvar, noise: noise.map(<[f64]>::to_vec) }
    }

    /// Negative log-likelihood of `x` under the decoder heads, and its
    /// gradient with respect to the head outputs.
    fn head_nll(&self, heads: &[f64], x: &[f64]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; heads.len()];
        let mut nll = 0.0;
        let mut at = 0;
        for (j, f) in self.schema.features().iter().enumerate() {
            match f.likelihood {
                Likelihood::Count => {
                    let eta = heads[at] + self.count_offset[j];
                    let rate = math::softplus(eta) + 1e-9;
                    let v = x[j].max(0.0);
                    nll += rate - v * math::ln(rate) + math::ln_gamma(v + 1.0);
                    grad[at] = (1.0 - v / rate) * math::sigmoid(eta);
                    at += 1;
                }
                Likelihood::PositiveContinuous | Likelihood::Real => {
                    let t = match f.likelihood {
                        Likelihood::PositiveContinuous => math::ln(x[j].max(POSITIVE_FLOOR)),
                        _ => x[j],
                    };
                    let target = (t - self.input_mean[j]) / self.input_scale[j];
                    let mu = heads[at];
                    let (lv, dlv) = bounded(heads[at + 1], HEAD_LOGVAR);
                    let inv = math::exp(-lv);
                    let r = target - mu;
                    nll += 0.5 * (LN_2PI + lv + r * r * inv) + math::ln(self.input_scale[j]);
                    if f.likelihood == Likelihood::PositiveContinuous {
                        nll += t;
                    }
                    grad[at] = -r * inv;
                    grad[at + 1] = 0.5 * (1.0 - r * r * inv) * dlv;
                    at += 2;
                }
            }
        }
        (nll, grad)
    }

    fn kl(mean: &[f64], logvar: &[f64]) -> f64 {
        0.5 * mean.iter().zip(logvar).map(|(m, lv)| m * m + math::exp(*lv) - 1.0 - lv).sum::<f64>()
    }

    /// Per-sample objective and (optionally) its parameter gradient,
    /// accumulated into `grads`.
    fn sample_objective(
        &self,
        params: &[f64],
        x: &[f64],
        kl_weight: f64,
        noise: Option<&[f64]>,
        grads: Option<&mut [f64]>,
    ) -> f64 {
        let trace = self.forward(params, x, noise);
        let (nll, head_grad) = self.head_nll(trace.dec.last().unwrap(), x);
        let kl = Self::kl(&trace.z_mean, &trace.z_logvar);
        let objective = nll + kl_weight * kl;
        let Some(grads) = grads else {
            return objective;
        };
        let split = self.enc_params();
        let (enc_p, dec_p) = params.split_at(split);
        let (enc_g, dec_g) = grads.split_at_mut(split);
        let grad_z = mlp_backward(dec_p, &self.dec_sizes(), &trace.dec, &head_grad, dec_g);

        let k = self.latent_dim;
        let raw_lv = &trace.enc.last().unwrap()[k..];
        let mut grad_enc_out = vec![0.0; 2 * k];
        for i in 0..k {
            let (lv, dlv) = bounded(raw_lv[i], LATENT_LOGVAR);
            let mut g_mean = grad_z[i] + kl_weight * trace.z_mean[i];
            let mut g_lv = kl_weight * 0.5 * (math::exp(lv) - 1.0);
            if let Some(eps) = &trace.noise {
                g_lv += grad_z[i] * 0.5 * math::exp(0.5 * lv) * eps[i];
            } else {
                g_mean += 0.0;
            }
            grad_enc_out[i] = g_mean;
            grad_enc_out[k + i] = g_lv * dlv;
        }
        mlp_backward(enc_p, &self.enc_sizes(), &trace.enc, &grad_enc_out, enc_g);
        objective
    }

    /// Mean objective over `rows` with the given parameters and per-row
    /// noise (`None` uses the latent mean), plus its gradient.
    pub fn objective_and_gradient(
        &self,
        params: &[f64],
        rows: &[&[f64]],
        kl_weight: f64,
        noise: Option<&[Vec<f64>]>,
    ) -> (f64, Vec<f64>) {
        let mut grads = vec![0.0; params.len()];
        let mut total = 0.0;
        for (i, x) in rows.iter().enumerate() {
            let eps = noise.map(|n| n[i].as_slice());
            total += self.sample_objective(params, x, kl_weight, eps, Some(&mut grads));
        }
        let n = rows.len() as f64;
        grads.iter_mut().for_each(|g| *g /= n);
        (total / n, grads)
    }

    /// Deterministic mean objective on `data` using latent means.
    pub fn evaluate_objective(&self, data: &Dataset, kl_weight: f64) -> f64 {
        let total: f64 = data.rows().map(|x| self.sample_objective(&self.params, x, kl_weight, None, None)).sum();
        total / data.len() as f64
    }

    /// Mean negative log-likelihood of `data` reconstructed from latent means.
    pub fn reconstruction_loss(&self, data: &Dataset) -> f64 {
        let total: f64 = data
            .rows()
            .map(|x| {
                let trace = self.forward(&self.params, x, None);
                self.head_nll(trace.dec.last().unwrap(), x).0
            })
            .sum();
        total / data.len() as f64
    }

    /// Head means in original units, before count rounding.
    pub fn decode_means(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.latent_dim {
            return Err(Error::Dimension { expected: self.latent_dim, got: z.len() });
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("latent code".into()));
        }
        let dec = mlp_forward(&self.params[self.enc_params()..], &self.dec_sizes(), z);
        let heads = dec.last().unwrap();
        let mut at = 0;
        let mut out = Vec::with_capacity(self.schema.len());
        for (j, f) in self.schema.features().iter().enumerate() {
            match f.likelihood {
                Likelihood::Count => {
                    out.push(math::softplus(heads[at] + self.count_offset[j]));
                    at += 1;
                }
                Likelihood::PositiveContinuous => {
                    let log_mean = heads[at] * self.input_scale[j] + self.input_mean[j];
                    out.push(math::exp(log_mean).max(POSITIVE_FLOOR));
                    at += 2;
                }
                Likelihood::Real => {
                    out.push(heads[at] * self.input_scale[j] + self.input_mean[j]);
                    at += 2;
                }
            }
        }
        Ok(out)
    }
}

impl Generative for AutoencoderModel {
    fn input_dim(&self) -> usize {
        self.schema.len()
    }

    fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    /// The latent posterior mean.
    fn encode(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.schema.check_dim(x)?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("input row".into()));
        }
        Ok(self.forward(&self.params, x, None).z_mean)
    }

    /// Head means mapped back to original units; counts rounded to the
    /// nearest non-negative integer, positive features exponentiated.
    fn decode(&self, z: &[f64]) -> Result<Vec<f64>> {
        let mut x = self.decode_means(z)?;
        for (v, f) in x.iter_mut().zip(self.schema.features()) {
            if f.likelihood == Likelihood::Count {
                *v = round_count(*v);
            }
        }
        Ok(x)
    }
}

/// Trains with the default architecture (two tanh layers of width 32).
pub fn train_autoencoder(
    train: &Dataset,
    latent_dim: usize,
    config: TrainConfig,
) -> Result<(AutoencoderModel, TrainReport)> {
    train_autoencoder_with(train, latent_dim, &[32, 32], config)
}

pub fn train_autoencoder_with(
    train: &Dataset,
    latent_dim: usize,
    hidden: &[usize],
    config: TrainConfig,
) -> Result<(AutoencoderModel, TrainReport)> {
    config.validate()?;
    let d = train.dim();
    if latent_dim == 0 || latent_dim >= d {
        return Err(Error::InvalidArgument(format!("latent dimension must satisfy 0 < k < d = {d}")));
    }
    if train.is_empty() {
        return Err(Error::Empty("training set"));
    }
    let schema = train.schema().clone();
    let n = train.len() as f64;
    let mut input_mean = vec![0.0; d];
    let mut input_scale = vec![0.0; d];
    let mut count_offset = vec![0.0; d];
    for (j, f) in schema.features().iter().enumerate() {
        let col: Vec<f64> = train
            .rows()
            .map(|r| match f.likelihood {
                Likelihood::Count => math::ln_1p(r[j]),
                Likelihood::PositiveContinuous => math::ln(r[j]),
                Likelihood::Real => r[j],
            })
            .collect();
        let m = col.iter().sum::<f64>() / n;
        let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
        input_mean[j] = m;
        input_scale[j] = if var > 1e-12 { math::sqrt(var) } else { 1.0 };
        if f.likelihood == Likelihood::Count {
            // inverse softplus of the mean count
            let mean_count = (train.rows().map(|r| r[j]).sum::<f64>() / n).max(1e-3);
            count_offset[j] = mean_count + math::ln(-math::exp(-mean_count) + 1.0);
        }
    }

    let mut model = AutoencoderModel {
        schema,
        latent_dim,
        hidden: hidden.to_vec(),
        params: Vec::new(),
        input_mean,
        input_scale,
        count_offset,
    };
    let mut r = rng::seeded(config.seed);
    let mut params = Vec::new();
    for sizes in [model.enc_sizes(), model.dec_sizes()] {
        for w in sizes.windows(2) {
            let std = 1.0 / math::sqrt(w[0] as f64);
            params.extend((0..w[0] * w[1]).map(|_| std * rng::standard_normal(&mut r)));
            params.extend(core::iter::repeat_n(0.0, w[1]));
        }
    }
    model.params = params;

    let mut report = TrainReport { epoch_objectives: vec![model.evaluate_objective(train, config.kl_weight)] };
    let (beta1, beta2, eps) = (0.9, 0.999, 1e-8);
    let mut m1 = vec![0.0; model.params.len()];
    let mut m2 = vec![0.0; model.params.len()];
    let mut step = 0i32;
    let mut order: Vec<usize> = (0..train.len()).collect();
    let k = latent_dim;
    let mut batch_index = 0usize;
    for _ in 0..config.epochs {
        order.shuffle(&mut r);
        for chunk in order.chunks(config.batch_size) {
            let rows: Vec<&[f64]> = chunk.iter().map(|&i| train.row(i)).collect();
            let noise: Option<Vec<Vec<f64>>> = (config.kl_weight > 0.0)
                .then(|| chunk.iter().map(|_| (0..k).map(|_| rng::standard_normal(&mut r)).collect()).collect());
            let (objective, grads) =
                model.objective_and_gradient(&model.params, &rows, config.kl_weight, noise.as_deref());
            if !objective.is_finite() || grads.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFinite(format!("autoencoder objective at batch {batch_index}")));
            }
            step += 1;
            let (c1, c2) = (1.0 - math::powf(beta1, step as f64), 1.0 - math::powf(beta2, step as f64));
            for (i, g) in grads.iter().enumerate() {
                m1[i] = beta1 * m1[i] + (1.0 - beta1) * g;
                m2[i] = beta2 * m2[i] + (1.0 - beta2) * g * g;
                model.params[i] -= config.learning_rate * (m1[i] / c1) / (math::sqrt(m2[i] / c2) + eps);
            }
            batch_index += 1;
        }
        let objective = model.evaluate_objective(train, config.kl_weight);
        if !objective.is_finite() {
            return Err(Error::NonFinite(format!("autoencoder objective after batch {batch_index}")));
        }
        report.epoch_objectives.push(objective);
    }
    Ok((model, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Label;
    use crate::schema::{Feature, FeatureSchema};

    fn mixed_data(n: usize, seed: u64) -> Dataset {
        let schema = FeatureSchema::new(vec![
            Feature::new("c", true, Likelihood::Count),
            Feature::new("p", true, Likelihood::PositiveContinuous),
            Feature::new("r", true, Likelihood::Real),
            Feature::new("r2", true, Likelihood::Real),
        ])
        .unwrap();
        let mut r = rng::seeded(seed);
        let mut rows = Vec::new();
        for _ in 0..n {
            let u = rng::standard_normal(&mut r);
            rows.push(vec![
                math::round(math::exp(0.5 + 0.5 * u)),
                math::exp(0.3 * u + 0.1 * rng::standard_normal(&mut r)),
                u,
                -u + 0.1 * rng::standard_normal(&mut r),
            ]);
        }
        let labels = (0..n).map(|i| if i % 2 == 0 { Label::Positive } else { Label::Negative }).collect();
        Dataset::new(schema, rows, labels).unwrap()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let data = mixed_data(20, 1);
        let cfg = TrainConfig { epochs: 2, learning_rate: 1e-2, kl_weight: 0.7, batch_size: 8, seed: 3 };
        let (model, _) = train_autoencoder_with(&data, 2, &[5, 4], cfg).unwrap();
        let rows: Vec<&[f64]> = (0..5).map(|i| data.row(i)).collect();
        let mut r = rng::seeded(11);
        let noise: Vec<Vec<f64>> = (0..5).map(|_| (0..2).map(|_| rng::standard_normal(&mut r)).collect()).collect();
        for noise in [Some(noise.as_slice()), None] {
            let (_, grad) = model.objective_and_gradient(&model.params, &rows, 0.7, noise);
            let h = 1e-5;
            let mut worst = 0.0f64;
            for i in 0..model.params.len() {
                let mut p = model.params.clone();
                p[i] += h;
                let up = model.objective_and_gradient(&p, &rows, 0.7, noise).0;
                p[i] -= 2.0 * h;
                let down = model.objective_and_gradient(&p, &rows, 0.7, noise).0;
                let numeric = (up - down) / (2.0 * h);
                let rel = (numeric - grad[i]).abs() / (numeric.abs().max(grad[i].abs()).max(1e-3));
                worst = worst.max(rel);
            }
            assert!(worst < 1e-4, "worst relative gradient error {worst}");
        }
    }

    #[test]
    fn zero_epochs_is_initialization() {
        let data = mixed_data(30, 2);
        let cfg = TrainConfig { epochs: 0, seed: 5, ..TrainConfig::default() };
        let (a, rep) = train_autoencoder(&data, 2, cfg).unwrap();
        let (b, _) = train_autoencoder(&data, 2, cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(rep.epoch_objectives.len(), 1);
    }

    #[test]
    fn objective_decreases() {
        let data = mixed_data(200, 3);
        let cfg = TrainConfig { epochs: 30, learning_rate: 5e-3, kl_weight: 1.0, batch_size: 32, seed: 1 };
        let (_, rep) = train_autoencoder(&data, 2, cfg).unwrap();
        assert!(rep.epoch_objectives.last().unwrap() <= &rep.epoch_objectives[0]);
    }

    #[test]
    fn zero_kl_weight_is_plain_reconstruction() {
        let data = mixed_data(100, 4);
        let cfg = TrainConfig { epochs: 5, learning_rate: 5e-3, kl_weight: 0.0, batch_size: 16, seed: 2 };
        let (model, rep) = train_autoencoder(&data, 2, cfg).unwrap();
        let recon = model.reconstruction_loss(&data);
        assert!((rep.epoch_objectives.last().unwrap() - recon).abs() < 1e-9);
    }

    #[test]
    fn decode_respects_support_and_encode_is_deterministic() {
        let data = mixed_data(100, 5);
        let (model, _) = train_autoencoder(&data, 2, TrainConfig { epochs: 3, ..TrainConfig::default() }).unwrap();
        let x = data.row(0);
        assert_eq!(model.encode(x).unwrap(), model.encode(x).unwrap());
        let mean: Vec<f64> = (0..4).map(|j| data.column(j).iter().sum::<f64>() / 100.0).collect();
        assert!(model.encode(&mean).unwrap().iter().all(|v| v.is_finite()));
        for z in [[0.0, 0.0], [40.0, -40.0], [-3.0, 7.0]] {
            let y = model.decode(&z).unwrap();
            assert!(y[0] >= 0.0 && y[0].fract() == 0.0);
            assert!(y[1] > 0.0);
        }
        assert!(model.decode(&[f64::NAN, 0.0]).is_err());
        assert!(model.encode(&[1.0, 1.0]).is_err());
    }

    #[test]
    fn count_rounding_rule() {
        assert_eq!(round_count(2.4), 2.0);
        assert_eq!(round_count(2.6), 3.0);
        assert_eq!(round_count(-0.3), 0.0);
    }

    #[test]
    fn rejects_latent_not_below_input_dim() {
        let data = mixed_data(10, 6);
        assert!(train_autoencoder(&data, 4, TrainConfig::default()).is_err());
    }

    #[test]
    fn linear_autoencoder_round_trip() {
        let spec = crate::synth::ManifoldSpec::random_orthonormal(2, 5, 4).unwrap();
        let ae = LinearAutoencoder::from_manifold(&spec);
        let z = [0.3, -1.2];
        let x = ae.decode(&z).unwrap();
        let back = ae.encode(&x).unwrap();
        assert!((back[0] - z[0]).abs() < 1e-12 && (back[1] - z[1]).abs() < 1e-12);
        let id = LinearAutoencoder::identity(3);
        assert_eq!(id.decode(&[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
    }
}
