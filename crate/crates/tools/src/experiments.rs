//! Experiment runners behind the `transfer`, `costs`, `bounds` and
//! `semantics` subcommands.
//!
//! Individuals are processed in parallel with order-preserving collection;
//! every report is assembled sequentially, so an identical configuration
//! reproduces identical JSON.

use std::path::Path;

use rayon::prelude::*;
use recourse_core::analytics::{
    self, calibrate_alpha, corollary_check, cost_report, discrepancy, empirical_multiplicity_cost,
    engine_multiplicity_cost, histogram, quantiles, surprise, transferability, uniform_edges, AlphaCalibration,
    BoundReport, CostMode, CostReport, MethodCosts, MultiplicityCost, SurpriseReport, VIOLIN_LEVELS,
};
use recourse_core::autoencoder::{train_autoencoder_with, AutoencoderModel, LinearAutoencoder};
use recourse_core::classifier::{
    build_level_set, empirical_risk, train_forest, train_linear, Classifier, LevelSet, Scorer,
};
use recourse_core::dataset::{Dataset, Label};
use recourse_core::engine::{audit, Engine, GsConfig, Method, RecourseRequest, RecourseResult};
use recourse_core::pca::{fit_pca, Pca};
use recourse_core::percentile::PercentileTransform;
use recourse_core::schema::FeatureSchema;
use recourse_core::synth::{self, ManifoldSpec};
use serde::{Deserialize, Serialize};

use crate::bundle::{BundlePeer, Manifest, MethodDefaults, ServiceBundle};
use crate::config::{DataSource, ExperimentConfig, GsScale};
use crate::io::{self, SchemaFile};
use crate::{ToolError, ToolResult};

/// A trained model with its report id and hold-out accuracy.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedModel {
    pub id: String,
    pub model: Classifier,
    pub holdout_accuracy: f64,
}

impl Scorer for NamedModel {
    fn dim(&self) -> usize {
        self.model.dim()
    }
    fn score(&self, x: &[f64]) -> f64 {
        self.model.score(x)
    }
    fn affine(&self) -> Option<recourse_core::classifier::Affine> {
        self.model.affine()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Linear,
    Forest,
}

/// Loaded data with its schema and the label column name.
pub struct Source {
    pub data: Dataset,
    pub label: String,
}

pub fn load_source(cfg: &ExperimentConfig, seed: u64) -> ToolResult<Source> {
    match &cfg.data {
        DataSource::SyntheticCredit { n } => {
            Ok(Source { data: synth::synthesize_credit(*n, seed)?, label: synth::CREDIT_LABEL.to_string() })
        }
        DataSource::Csv { path, schema } => {
            let file = io::read_schema(schema)?;
            let data = io::load_csv(path, &file.schema()?, &file.label)?;
            Ok(Source { data, label: file.label })
        }
    }
}

/// Per-seed state shared by the runners: the split, the fitted transform,
/// both base models with their candidate pools and the autoencoder.
pub struct Prepared {
    pub seed: u64,
    pub label: String,
    pub train: Dataset,
    pub test: Dataset,
    pub transform: PercentileTransform,
    pub feature_std: Vec<f64>,
    pub linear_base: NamedModel,
    pub linear_candidates: Vec<NamedModel>,
    pub forest_base: NamedModel,
    pub forest_candidates: Vec<NamedModel>,
    pub autoencoder: Option<AutoencoderModel>,
}

impl Prepared {
    pub fn schema(&self) -> &FeatureSchema {
        self.train.schema()
    }

    pub fn base(&self, family: Family) -> &NamedModel {
        match family {
            Family::Linear => &self.linear_base,
            Family::Forest => &self.forest_base,
        }
    }

    pub fn candidates(&self, family: Family) -> &[NamedModel] {
        match family {
            Family::Linear => &self.linear_candidates,
            Family::Forest => &self.forest_candidates,
        }
    }

    /// ε-level set around the `base` family's base model drawn from the
    /// `peers` family's candidates, with risks measured on the training set.
    pub fn level_set(&self, cfg: &ExperimentConfig, base: Family, peers: Family) -> ToolResult<LevelSet<NamedModel>> {
        Ok(build_level_set(
            self.base(base).clone(),
            self.candidates(peers).to_vec(),
            &self.train,
            cfg.epsilon,
            cfg.window,
        )?)
    }

    /// Test indices rejected by the base model of `family`, capped at
    /// `max_individuals`.
    pub fn individuals(&self, cfg: &ExperimentConfig, family: Family) -> ToolResult<Vec<usize>> {
        let base = self.base(family);
        let mut idx: Vec<usize> = (0..self.test.len()).filter(|&i| base.score(self.test.row(i)) <= 0.0).collect();
        if let Some(cap) = cfg.max_individuals {
            idx.truncate(cap);
        }
        if idx.is_empty() {
            return Err(recourse_core::Error::Empty("negatively decided test points").into());
        }
        Ok(idx)
    }

    pub fn engine(&self, cfg: &ExperimentConfig, method: Method) -> ToolResult<(Engine<'_>, usize)> {
        let missing = || ToolError::Config(format!("method {} is not configured", method.as_str()));
        match method {
            Method::Gs => {
                let m = cfg.methods.gs.as_ref().ok_or_else(missing)?;
                let scale = (m.scale == GsScale::Std).then(|| self.feature_std.clone());
                Ok((Engine::Gs(GsConfig { shells: m.shells, scale }), m.budget))
            }
            Method::Grid => {
                let m = cfg.methods.grid.as_ref().ok_or_else(missing)?;
                Ok((Engine::Grid(&self.transform, m.grid), m.budget))
            }
            Method::Latent => {
                let m = cfg.methods.latent.as_ref().ok_or_else(missing)?;
                let ae = self.autoencoder.as_ref().ok_or_else(missing)?;
                Ok((Engine::Latent(ae, m.shells), m.budget))
            }
            Method::BruteForce => {
                Err(ToolError::Config("brute_force is a test oracle, not an experiment method".into()))
            }
        }
    }

    /// Runs `method` against `target` for every individual; the seed of
    /// individual `i` is derived from the experiment seed and `i`.
    pub fn generate(
        &self,
        cfg: &ExperimentConfig,
        method: Method,
        target: &dyn SyncScorer,
        individuals: &[usize],
    ) -> ToolResult<Vec<RecourseResult>> {
        individuals
            .par_iter()
            .map(|&i| {
                let (engine, budget) = self.engine(cfg, method)?;
                let request = RecourseRequest::new(
                    self.test.row(i).to_vec(),
                    vec![target.as_scorer()],
                    self.schema(),
                    budget,
                    individual_seed(self.seed, i),
                )?;
                Ok(engine.run(&request)?)
            })
            .collect()
    }

    pub fn bundle(&self, cfg: &ExperimentConfig) -> ToolResult<ServiceBundle> {
        let within = self.level_set(cfg, Family::Linear, Family::Linear)?;
        let across = self.level_set(cfg, Family::Linear, Family::Forest)?;
        let mut peers: Vec<BundlePeer> = Vec::new();
        for p in within.peers.iter().chain(across.peers.iter().filter(|p| !p.is_base)) {
            peers.push(BundlePeer {
                id: p.model.id.clone(),
                model: p.model.model.clone(),
                is_base: p.is_base,
                train_risk: p.risk,
                holdout_accuracy: p.model.holdout_accuracy,
            });
        }
        sort_by_accuracy(&mut peers, |p| (p.holdout_accuracy, p.id.as_str()));
        let ae = self
            .autoencoder
            .clone()
            .ok_or_else(|| ToolError::Config("the service bundle needs the latent method".into()))?;
        let gs = cfg.methods.gs.clone().unwrap_or_default();
        let grid = cfg.methods.grid.clone().unwrap_or_default();
        let latent = cfg.methods.latent.clone().unwrap_or_default();
        Ok(ServiceBundle {
            schema: SchemaFile::new(self.schema(), &self.label),
            transform: self.transform.clone(),
            peers,
            autoencoder: ae,
            defaults: MethodDefaults {
                gs: GsConfig { shells: gs.shells, scale: (gs.scale == GsScale::Std).then(|| self.feature_std.clone()) },
                gs_budget: gs.budget,
                grid: grid.grid,
                grid_budget: grid.budget,
                latent: latent.shells,
                latent_budget: latent.budget,
            },
            manifest: Manifest { config_hash: cfg.hash(), seed: self.seed },
        })
    }
}

/// Scorers shared across worker threads.
pub trait SyncScorer: Scorer + Sync {
    fn as_scorer(&self) -> &dyn Scorer;
}

impl<T: Scorer + Sync> SyncScorer for T {
    fn as_scorer(&self) -> &dyn Scorer {
        self
    }
}

pub fn individual_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_mul(1_000_003).wrapping_add(index as u64)
}

/// Ascending accuracy, ties by id, so the most accurate model is last.
fn sort_by_accuracy<T>(items: &mut [T], key: impl Fn(&T) -> (f64, &str)) {
    items.sort_by(|a, b| {
        let (ka, kb) = (key(a), key(b));
        ka.0.total_cmp(&kb.0).then_with(|| ka.1.cmp(kb.1))
    });
}

fn accuracy(model: &Classifier, test: &Dataset) -> ToolResult<f64> {
    Ok(1.0 - empirical_risk(model, test)?)
}

fn fmt_num(v: f64) -> String {
    format!("{v}")
}

/// Per-feature population standard deviation; constant columns get 1.
pub fn feature_std(data: &Dataset) -> Vec<f64> {
    (0..data.dim())
        .map(|j| {
            let col = data.column(j);
            let n = col.len() as f64;
            let mean = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let s = var.sqrt();
            if s > 1e-12 {
                s
            } else {
                1.0
            }
        })
        .collect()
}

pub fn prepare(cfg: &ExperimentConfig, seed: u64) -> ToolResult<Prepared> {
    cfg.validate()?;
    let source = load_source(cfg, seed)?;
    source.data.schema().ensure_usable()?;
    let (train, test) = source.data.split(cfg.train_fraction, seed)?;
    if test.is_empty() || train.is_empty() {
        return Err(ToolError::Config("train_fraction leaves an empty split".into()));
    }
    let transform = PercentileTransform::fit(&train)?;
    let lin = &cfg.models.linear;
    let grid = &cfg.models;

    let mut linear_base = train_linear(&train, lin.base_l2, lin.epochs, lin.learning_rate, seed)?;
    linear_base.meta.train_risk = Some(empirical_risk(&linear_base, &train)?);
    let linear_base = Classifier::Linear(linear_base);

    let linear_jobs: Vec<(f64, usize)> =
        lin.l2.iter().flat_map(|&l2| (0..grid.replicates).map(move |r| (l2, r))).collect();
    let linear_models: Vec<Classifier> = linear_jobs
        .par_iter()
        .map(|&(l2, r)| {
            let job_seed = seed.wrapping_mul(7919).wrapping_add(1 + r as u64);
            let sample = if grid.subsample < 1.0 { train.split(grid.subsample, job_seed)?.0 } else { train.clone() };
            let mut m = train_linear(&sample, l2, lin.epochs, lin.learning_rate, job_seed)?;
            m.meta.train_risk = Some(empirical_risk(&m, &train)?);
            Ok(Classifier::Linear(m))
        })
        .collect::<ToolResult<_>>()?;

    let fo = &cfg.models.forest;
    let mut forest_base = train_forest(&train, fo.n_trees, fo.base_depth, seed)?;
    forest_base.meta.train_risk = Some(empirical_risk(&forest_base, &train)?);
    let forest_base = Classifier::Forest(forest_base);
    let forest_jobs: Vec<(usize, usize)> =
        fo.depths.iter().flat_map(|&d| (0..grid.replicates).map(move |r| (d, r))).collect();
    let forest_models: Vec<Classifier> = forest_jobs
        .par_iter()
        .map(|&(depth, r)| {
            let job_seed = seed.wrapping_mul(7919).wrapping_add(101 + r as u64);
            let mut m = train_forest(&train, fo.n_trees, depth, job_seed)?;
            m.meta.train_risk = Some(empirical_risk(&m, &train)?);
            Ok(Classifier::Forest(m))
        })
        .collect::<ToolResult<_>>()?;

    let named = |id: String, model: Classifier| -> ToolResult<NamedModel> {
        let holdout_accuracy = accuracy(&model, &test)?;
        Ok(NamedModel { id, model, holdout_accuracy })
    };
    let linear_base = named(format!("linear/l2={}/base", lin.base_l2), linear_base)?;
    let linear_candidates = linear_jobs
        .iter()
        .zip(linear_models)
        .map(|(&(l2, r), m)| named(format!("linear/l2={l2}/rep={r}"), m))
        .collect::<ToolResult<_>>()?;
    let forest_base = named(format!("forest/depth={}/base", fo.base_depth), forest_base)?;
    let forest_candidates = forest_jobs
        .iter()
        .zip(forest_models)
        .map(|(&(d, r), m)| named(format!("forest/depth={d}/rep={r}"), m))
        .collect::<ToolResult<_>>()?;

    let autoencoder = match &cfg.methods.latent {
        Some(m) => {
            let tc = recourse_core::autoencoder::TrainConfig { seed, ..m.training };
            Some(train_autoencoder_with(&train, m.latent_dim, &m.hidden, tc)?.0)
        }
        None => None,
    };
    let feature_std = feature_std(&train);
    Ok(Prepared {
        seed,
        label: source.label,
        train,
        test,
        transform,
        feature_std,
        linear_base,
        linear_candidates,
        forest_base,
        forest_candidates,
        autoencoder,
    })
}

fn enabled_methods(cfg: &ExperimentConfig) -> Vec<Method> {
    let mut m = Vec::new();
    if cfg.methods.gs.is_some() {
        m.push(Method::Gs);
    }
    if cfg.methods.grid.is_some() {
        m.push(Method::Grid);
    }
    if cfg.methods.latent.is_some() {
        m.push(Method::Latent);
    }
    m
}

/// Re-checks validity against `targets` and the schema constraints.
fn audit_failures(results: &[RecourseResult], targets: &[&dyn Scorer], schema: &FeatureSchema) -> usize {
    results.iter().filter(|r| r.found && audit(r, targets, schema).is_err()).count()
}

// ---------------------------------------------------------------- transfer

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeerRow {
    pub id: String,
    pub is_base: bool,
    pub train_risk: f64,
    pub holdout_accuracy: f64,
    /// Fraction of found counterfactuals this peer accepts.
    #[serde(rename = "T")]
    pub t: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferPanel {
    pub base_family: Family,
    pub peer_family: Family,
    pub method: Method,
    pub n_individuals: usize,
    pub n_found: usize,
    pub audit_failures: usize,
    pub only_base: bool,
    /// Ascending hold-out accuracy; the base is flagged.
    pub peers: Vec<PeerRow>,
    /// Mean `T` over the non-base peers.
    pub mean_peer_t: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostRow {
    pub individual: usize,
    pub method: Method,
    pub found: bool,
    pub costs: Option<CostReport>,
    pub evaluations_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub levels: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodCostSummary {
    pub method: Method,
    pub n_found: usize,
    pub n_not_found: usize,
    pub audit_failures: usize,
    pub cost_total: Option<Distribution>,
    pub cost_max: Option<Distribution>,
    pub norm_cost: Option<Distribution>,
    pub median_cost_total: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorollaryRow {
    pub sparse_method: Method,
    pub support_method: Method,
    pub paired_rows: usize,
    pub mean_sparse_cost_total: Option<f64>,
    pub mean_support_cost_total: Option<f64>,
    pub holds: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedCosts {
    pub seed: u64,
    pub rows: Vec<CostRow>,
    pub methods: Vec<MethodCostSummary>,
    /// Rows where grid and latent both found a counterfactual and the grid
    /// `cost_total` is not larger, over all such rows.
    pub grid_le_latent_fraction: Option<f64>,
    pub corollary: Vec<CorollaryRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedTransfer {
    pub seed: u64,
    pub panels: Vec<TransferPanel>,
}

/// Everything computed for one seed of a transfer/costs experiment.
pub struct SeedOutcome {
    pub transfer: SeedTransfer,
    pub costs: SeedCosts,
    pub prepared: Prepared,
    /// Linear-base counterfactuals per method, paired over `individuals`.
    pub linear_results: Vec<(Method, Vec<RecourseResult>)>,
    pub individuals: Vec<usize>,
    /// Every generated batch, both base families.
    pub runs: Vec<MethodRun>,
}

pub struct MethodRun {
    pub base: Family,
    pub method: Method,
    pub individuals: Vec<usize>,
    pub results: Vec<RecourseResult>,
}

fn panel(
    base_family: Family,
    peer_family: Family,
    method: Method,
    results: &[RecourseResult],
    set: &LevelSet<NamedModel>,
    audit_failures: usize,
) -> ToolResult<TransferPanel> {
    let found: Vec<RecourseResult> = results.iter().filter(|r| r.found).cloned().collect();
    let report = if found.is_empty() { None } else { Some(transferability(&found, set)?) };
    let mut peers: Vec<PeerRow> = set
        .peers
        .iter()
        .enumerate()
        .map(|(i, p)| PeerRow {
            id: p.model.id.clone(),
            is_base: p.is_base,
            train_risk: p.risk,
            holdout_accuracy: p.model.holdout_accuracy,
            t: report.as_ref().map(|r| r.peers[i].t),
        })
        .collect();
    sort_by_accuracy(&mut peers, |p| (p.holdout_accuracy, p.id.as_str()));
    Ok(TransferPanel {
        base_family,
        peer_family,
        method,
        n_individuals: results.len(),
        n_found: found.len(),
        audit_failures,
        only_base: set.only_base,
        peers,
        mean_peer_t: report.as_ref().and_then(|r| r.mean_peer_t()),
    })
}

fn distribution(values: &[f64]) -> ToolResult<Option<Distribution>> {
    if values.is_empty() {
        return Ok(None);
    }
    Ok(Some(Distribution { levels: VIOLIN_LEVELS.to_vec(), values: quantiles(values, &VIOLIN_LEVELS)? }))
}

fn seed_costs(p: &Prepared, individuals: &[usize], results: &[(Method, Vec<RecourseResult>)]) -> ToolResult<SeedCosts> {
    let target: &dyn Scorer = &p.linear_base;
    let mut rows = Vec::new();
    let mut methods = Vec::new();
    for (method, rs) in results {
        let mut totals = Vec::new();
        let mut maxes = Vec::new();
        let mut norms = Vec::new();
        for (r, &i) in rs.iter().zip(individuals) {
            let costs = if r.found { Some(cost_report(&p.transform, &r.x, &r.x_cf)?) } else { None };
            if let Some(c) = &costs {
                totals.push(c.cost_total);
                maxes.push(c.cost_max);
                norms.push(c.norm_cost);
            }
            rows.push(CostRow {
                individual: i,
                method: *method,
                found: r.found,
                costs,
                evaluations_used: r.evaluations_used,
            });
        }
        methods.push(MethodCostSummary {
            method: *method,
            n_found: totals.len(),
            n_not_found: rs.len() - totals.len(),
            audit_failures: audit_failures(rs, &[target], p.schema()),
            median_cost_total: if totals.is_empty() { None } else { Some(analytics::quantile(&totals, 0.5)?) },
            cost_total: distribution(&totals)?,
            cost_max: distribution(&maxes)?,
            norm_cost: distribution(&norms)?,
        });
    }
    let per_method = |m: Method| results.iter().find(|(k, _)| *k == m).map(|(_, r)| r);
    let paired = |a: &[RecourseResult], b: &[RecourseResult]| -> ToolResult<(Vec<f64>, Vec<f64>)> {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (ra, rb) in a.iter().zip(b) {
            if ra.found && rb.found {
                xs.push(analytics::cost_total(&p.transform, &ra.x, &ra.x_cf)?);
                ys.push(analytics::cost_total(&p.transform, &rb.x, &rb.x_cf)?);
            }
        }
        Ok((xs, ys))
    };
    let mut grid_le_latent_fraction = None;
    let mut corollary = Vec::new();
    if let Some(latent) = per_method(Method::Latent) {
        if let Some(grid) = per_method(Method::Grid) {
            let (g, l) = paired(grid, latent)?;
            if !g.is_empty() {
                let le = g.iter().zip(&l).filter(|(a, b)| a <= b).count();
                grid_le_latent_fraction = Some(le as f64 / g.len() as f64);
            }
        }
        for sparse in [Method::Gs, Method::Grid] {
            let Some(s) = per_method(sparse) else { continue };
            let (xs, ys) = paired(s, latent)?;
            let holds = if xs.is_empty() { None } else { Some(corollary_check(&xs, &ys)?) };
            corollary.push(CorollaryRow {
                sparse_method: sparse,
                support_method: Method::Latent,
                paired_rows: xs.len(),
                mean_sparse_cost_total: recourse_core::math::mean(&xs),
                mean_support_cost_total: recourse_core::math::mean(&ys),
                holds,
            });
        }
    }
    Ok(SeedCosts { seed: p.seed, rows, methods, grid_le_latent_fraction, corollary })
}

/// Trains, generates and evaluates one seed for both the transfer and the
/// cost reports. The grid method is skipped for forest bases.
pub fn evaluate_seed(cfg: &ExperimentConfig, seed: u64) -> ToolResult<SeedOutcome> {
    let p = prepare(cfg, seed)?;
    let methods = enabled_methods(cfg);
    let mut panels = Vec::new();
    let mut linear_results = Vec::new();
    let mut linear_individuals = Vec::new();
    let mut runs = Vec::new();
    for base_family in [Family::Linear, Family::Forest] {
        let individuals = p.individuals(cfg, base_family)?;
        let base = p.base(base_family);
        let sets = [
            (base_family, p.level_set(cfg, base_family, base_family)?),
            (other(base_family), p.level_set(cfg, base_family, other(base_family))?),
        ];
        for &method in &methods {
            if method == Method::Grid && base_family == Family::Forest {
                continue;
            }
            let results = p.generate(cfg, method, base, &individuals)?;
            let failures = audit_failures(&results, &[base as &dyn Scorer], p.schema());
            for (peer_family, set) in &sets {
                panels.push(panel(base_family, *peer_family, method, &results, set, failures)?);
            }
            if base_family == Family::Linear {
                linear_results.push((method, results.clone()));
            }
            runs.push(MethodRun { base: base_family, method, individuals: individuals.clone(), results });
        }
        if base_family == Family::Linear {
            linear_individuals = individuals;
        }
    }
    let costs = seed_costs(&p, &linear_individuals, &linear_results)?;
    Ok(SeedOutcome {
        transfer: SeedTransfer { seed, panels },
        costs,
        prepared: p,
        linear_results,
        individuals: linear_individuals,
        runs,
    })
}

fn other(f: Family) -> Family {
    match f {
        Family::Linear => Family::Forest,
        Family::Forest => Family::Linear,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferReportSet {
    pub config_hash: String,
    pub seeds: Vec<SeedTransfer>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostsReportSet {
    pub config_hash: String,
    pub seeds: Vec<SeedCosts>,
}

fn write_bundle(cfg: &ExperimentConfig, first: &SeedOutcome, out: &Path) -> ToolResult<()> {
    if cfg.methods.latent.is_some() {
        first.prepared.bundle(cfg)?.save(&out.join("bundle"))?;
    }
    Ok(())
}

pub fn run_transfer(cfg: &ExperimentConfig, out: Option<&Path>) -> ToolResult<TransferReportSet> {
    let mut seeds = Vec::new();
    for (k, &seed) in cfg.seeds.iter().enumerate() {
        let outcome = evaluate_seed(cfg, seed)?;
        if let (0, Some(dir)) = (k, out) {
            write_bundle(cfg, &outcome, dir)?;
        }
        seeds.push(outcome.transfer);
    }
    let report = TransferReportSet { config_hash: cfg.hash(), seeds };
    if let Some(dir) = out {
        io::write_json(&dir.join("transfer.json"), &report)?;
        let mut rows = Vec::new();
        for s in &report.seeds {
            for panel in &s.panels {
                for peer in &panel.peers {
                    rows.push(vec![
                        s.seed.to_string(),
                        format!("{:?}", panel.base_family).to_lowercase(),
                        format!("{:?}", panel.peer_family).to_lowercase(),
                        panel.method.as_str().to_string(),
                        peer.id.clone(),
                        peer.is_base.to_string(),
                        fmt_num(peer.holdout_accuracy),
                        peer.t.map(fmt_num).unwrap_or_default(),
                    ]);
                }
            }
        }
        io::write_table(
            &dir.join("transfer.csv"),
            &["seed", "base_family", "peer_family", "method", "peer", "is_base", "holdout_accuracy", "T"],
            &rows,
        )?;
    }
    Ok(report)
}

pub fn run_costs(cfg: &ExperimentConfig, out: Option<&Path>) -> ToolResult<CostsReportSet> {
    let mut seeds = Vec::new();
    for (k, &seed) in cfg.seeds.iter().enumerate() {
        let outcome = evaluate_seed(cfg, seed)?;
        if let (0, Some(dir)) = (k, out) {
            write_bundle(cfg, &outcome, dir)?;
        }
        seeds.push(outcome.costs);
    }
    let report = CostsReportSet { config_hash: cfg.hash(), seeds };
    if let Some(dir) = out {
        io::write_json(&dir.join("costs.json"), &report)?;
        let mut rows = Vec::new();
        for s in &report.seeds {
            for r in &s.rows {
                let c = |f: fn(&CostReport) -> f64| r.costs.as_ref().map(|c| fmt_num(f(c))).unwrap_or_default();
                rows.push(vec![
                    s.seed.to_string(),
                    r.individual.to_string(),
                    r.method.as_str().to_string(),
                    r.found.to_string(),
                    c(|c| c.cost_total),
                    c(|c| c.cost_max),
                    c(|c| c.norm_cost),
                ]);
            }
        }
        io::write_table(
            &dir.join("costs.csv"),
            &["seed", "individual", "method", "found", "cost_total", "cost_max", "norm_cost"],
            &rows,
        )?;
    }
    Ok(report)
}

// ------------------------------------------------------------------ bounds

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundPair {
    pub pair: usize,
    pub data_seed: u64,
    pub calibration: AlphaCalibration,
    pub report: BoundReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurpriseSection {
    /// Exact linear projections; the same numbers serve every method.
    pub exact: SurpriseReport,
    /// Engine estimates of the costs, one report per sparse method paired
    /// with the latent method.
    pub engine: Vec<SurpriseReport>,
    pub engine_costs: Vec<EngineCosts>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineCosts {
    pub method: Method,
    pub joint: MultiplicityCost,
    pub single_f: MultiplicityCost,
    pub single_g: MultiplicityCost,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifoldRow {
    pub index: usize,
    pub sparse_cost: f64,
    pub support_cost: f64,
    pub ratio: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifoldTable {
    pub latent_dim: usize,
    pub ambient_dim: usize,
    pub step: f64,
    /// `support ≤ 2 · sparse + 2 · step` on every row.
    pub slack: f64,
    pub rows: Vec<ManifoldRow>,
    pub not_found: usize,
    pub audit_failures: usize,
    pub max_ratio: f64,
    pub all_hold: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReportSet {
    pub config_hash: String,
    pub seed: u64,
    pub pairs: Vec<BoundPair>,
    pub holds_count: usize,
    pub surprise: SurpriseSection,
    /// The pair `(f, f)`: every `s_bar` is 1 and the discrepancy is 0.
    pub self_check: SurpriseSection,
    pub self_discrepancy: f64,
    pub manifold: ManifoldTable,
}

/// `f` on all rows; `g` on a seeded subsample with a different penalty.
fn pair_models(cfg: &ExperimentConfig, data: &Dataset, seed: u64) -> ToolResult<(Classifier, Classifier)> {
    let lin = &cfg.models.linear;
    let b = &cfg.bounds;
    let f = train_linear(data, b.l2_f, lin.epochs, lin.learning_rate, seed)?;
    let sample = data.split(cfg.models.subsample.min(0.8), seed.wrapping_add(1))?.0;
    let g = train_linear(&sample, b.l2_g, lin.epochs, lin.learning_rate, seed.wrapping_add(1))?;
    Ok((Classifier::Linear(f), Classifier::Linear(g)))
}

fn exact_costs(f: &dyn Scorer, g: &dyn Scorer, data: &Dataset, label: &str) -> ToolResult<MethodCosts> {
    let joint = empirical_multiplicity_cost(f, g, data.rows(), CostMode::ExactLinear)?;
    let single_f = empirical_multiplicity_cost(f, f, data.rows(), CostMode::ExactLinear)?;
    let single_g = empirical_multiplicity_cost(g, g, data.rows(), CostMode::ExactLinear)?;
    Ok(MethodCosts {
        method: label.to_string(),
        joint: joint.mean,
        single_f: single_f.mean,
        single_g: single_g.mean,
        discrepancy: discrepancy(f, g, data.rows())?,
    })
}

fn surprise_section(
    cfg: &ExperimentConfig,
    p: &SurpriseContext,
    f: &Classifier,
    g: &Classifier,
    seed: u64,
) -> ToolResult<SurpriseSection> {
    let exact_f = exact_costs(f, g, &p.data, "exact_linear")?;
    let exact = surprise(&exact_f, &exact_f)?;
    let mut engine_costs = Vec::new();
    let mut engine = Vec::new();
    if let Some(ae) = &p.autoencoder {
        let rows: Vec<&[f64]> = p.data.rows().take(cfg.bounds.surprise_rows).collect();
        let delta = discrepancy(f, g, p.data.rows())?;
        let measure = |method: Method| -> ToolResult<(EngineCosts, MethodCosts)> {
            let (engine, budget) = p.engine(cfg, method, ae)?;
            let schema = p.data.schema();
            let run = |a: &dyn Scorer, b: &dyn Scorer| {
                engine_multiplicity_cost(a, b, rows.iter().copied(), schema, &engine, budget, seed)
            };
            let costs = EngineCosts { method, joint: run(f, g)?, single_f: run(f, f)?, single_g: run(g, g)? };
            let mc = MethodCosts {
                method: method.as_str().to_string(),
                joint: costs.joint.mean,
                single_f: costs.single_f.mean,
                single_g: costs.single_g.mean,
                discrepancy: delta,
            };
            Ok((costs, mc))
        };
        let (latent_costs, latent_mc) = measure(Method::Latent)?;
        for sparse in [Method::Gs, Method::Grid] {
            if (sparse == Method::Gs && cfg.methods.gs.is_none())
                || (sparse == Method::Grid && cfg.methods.grid.is_none())
            {
                continue;
            }
            let (c, mc) = measure(sparse)?;
            engine.push(surprise(&mc, &latent_mc)?);
            engine_costs.push(c);
        }
        engine_costs.push(latent_costs);
    }
    Ok(SurpriseSection { exact, engine, engine_costs })
}

struct SurpriseContext {
    data: Dataset,
    transform: PercentileTransform,
    std: Vec<f64>,
    autoencoder: Option<AutoencoderModel>,
}

impl SurpriseContext {
    fn engine<'a>(
        &'a self,
        cfg: &ExperimentConfig,
        method: Method,
        ae: &'a AutoencoderModel,
    ) -> ToolResult<(Engine<'a>, usize)> {
        Ok(match method {
            Method::Gs => {
                let m = cfg.methods.gs.clone().unwrap_or_default();
                let scale = (m.scale == GsScale::Std).then(|| self.std.clone());
                (Engine::Gs(GsConfig { shells: m.shells, scale }), m.budget)
            }
            Method::Grid => {
                let m = cfg.methods.grid.clone().unwrap_or_default();
                (Engine::Grid(&self.transform, m.grid), m.budget)
            }
            _ => {
                let m = cfg.methods.latent.clone().unwrap_or_default();
                (Engine::Latent(ae, m.shells), m.budget)
            }
        })
    }
}

/// The exact-manifold fixture with sparse and support counterfactuals for
/// every point the planted rule rejects.
pub struct ManifoldRuns {
    pub rule: recourse_core::classifier::LinearModel,
    pub schema: FeatureSchema,
    pub negatives: Vec<usize>,
    /// `(sparse, support)` per negative point.
    pub pairs: Vec<(RecourseResult, RecourseResult)>,
}

pub fn manifold_runs(cfg: &ExperimentConfig, seed: u64) -> ToolResult<ManifoldRuns> {
    let b = &cfg.bounds;
    let spec = ManifoldSpec::random_orthonormal(b.manifold_latent_dim, b.manifold_ambient_dim, seed)?;
    let (data, _) = synth::synthesize_manifold(&spec, b.manifold_n, seed.wrapping_add(1))?;
    let rule = spec.ambient_rule();
    let ae = LinearAutoencoder::from_manifold(&spec);
    let schema = data.schema().clone();
    let shells = recourse_core::engine::ShellConfig { step: b.manifold_step, ..Default::default() };
    let negatives: Vec<usize> = (0..data.len()).filter(|&i| rule.score(data.row(i)) <= 0.0).collect();
    let pairs: Vec<(RecourseResult, RecourseResult)> = negatives
        .par_iter()
        .map(|&i| {
            let req = RecourseRequest::new(
                data.row(i).to_vec(),
                vec![&rule],
                &schema,
                b.manifold_budget,
                individual_seed(seed, i),
            )?;
            let sparse = Engine::Gs(GsConfig { shells, scale: None }).run(&req)?;
            let support = Engine::Latent(&ae, shells).run(&req)?;
            Ok((sparse, support))
        })
        .collect::<ToolResult<_>>()?;
    Ok(ManifoldRuns { rule, schema, negatives, pairs })
}

pub fn manifold_table(cfg: &ExperimentConfig, seed: u64) -> ToolResult<ManifoldTable> {
    let b = &cfg.bounds;
    let ManifoldRuns { rule, schema, negatives, pairs } = manifold_runs(cfg, seed)?;
    let slack = 2.0 * b.manifold_step;
    let mut rows = Vec::new();
    let mut not_found = 0;
    let mut failures = 0;
    for (&i, (s, d)) in negatives.iter().zip(&pairs) {
        failures += audit_failures(&[s.clone(), d.clone()], &[&rule], &schema);
        if !(s.found && d.found) {
            not_found += 1;
            continue;
        }
        rows.push(ManifoldRow {
            index: i,
            sparse_cost: s.norm_cost,
            support_cost: d.norm_cost,
            ratio: d.norm_cost / s.norm_cost,
            holds: d.norm_cost <= 2.0 * s.norm_cost + slack,
        });
    }
    let max_ratio = rows.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
    let all_hold = not_found == 0 && rows.iter().all(|r| r.holds);
    Ok(ManifoldTable {
        latent_dim: b.manifold_latent_dim,
        ambient_dim: b.manifold_ambient_dim,
        step: b.manifold_step,
        slack,
        rows,
        not_found,
        audit_failures: failures,
        max_ratio,
        all_hold,
    })
}

pub fn run_bounds(cfg: &ExperimentConfig, out: Option<&Path>) -> ToolResult<BoundsReportSet> {
    cfg.validate()?;
    let seed = cfg.seeds[0];
    let b = &cfg.bounds;
    if b.pairs < 1 {
        return Err(ToolError::Config("bounds.pairs must be >= 1".into()));
    }
    let pairs: Vec<BoundPair> = (0..b.pairs)
        .into_par_iter()
        .map(|k| {
            let data_seed = seed.wrapping_mul(1000).wrapping_add(k as u64);
            let data = synth::synthesize_credit(b.n, data_seed)?;
            let (f, g) = pair_models(cfg, &data, data_seed)?;
            Ok(BoundPair {
                pair: k,
                data_seed,
                calibration: calibrate_alpha(&f, &g, &data)?,
                report: recourse_core::analytics::verify_multiplicity_bound(&f, &g, &data)?,
            })
        })
        .collect::<ToolResult<_>>()?;
    let holds_count = pairs.iter().filter(|p| p.report.holds).count();

    let data = synth::synthesize_credit(b.n, pairs[0].data_seed)?;
    let (f, g) = pair_models(cfg, &data, pairs[0].data_seed)?;
    let autoencoder = match &cfg.methods.latent {
        Some(m) => {
            let tc = recourse_core::autoencoder::TrainConfig { seed, ..m.training };
            Some(train_autoencoder_with(&data, m.latent_dim, &m.hidden, tc)?.0)
        }
        None => None,
    };
    let ctx =
        SurpriseContext { transform: PercentileTransform::fit(&data)?, std: feature_std(&data), data, autoencoder };
    let surprise = surprise_section(cfg, &ctx, &f, &g, seed)?;
    let self_check = surprise_section(cfg, &ctx, &f, &f, seed)?;
    let self_discrepancy = discrepancy(&f, &f, ctx.data.rows())?;
    let manifold = manifold_table(cfg, seed)?;
    let report = BoundsReportSet {
        config_hash: cfg.hash(),
        seed,
        pairs,
        holds_count,
        surprise,
        self_check,
        self_discrepancy,
        manifold,
    };
    if let Some(dir) = out {
        io::write_json(&dir.join("bounds.json"), &report)?;
        let rows: Vec<Vec<String>> = report
            .manifold
            .rows
            .iter()
            .map(|r| vec![r.index.to_string(), fmt_num(r.sparse_cost), fmt_num(r.support_cost), fmt_num(r.ratio)])
            .collect();
        io::write_table(&dir.join("manifold.csv"), &["index", "sparse_cost", "support_cost", "ratio"], &rows)?;
    }
    Ok(report)
}

// --------------------------------------------------------------- semantics

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureHistogram {
    pub feature: String,
    pub edges: Vec<f64>,
    /// `(group, counts)` with the accepted positives first.
    pub groups: Vec<(String, Vec<usize>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaGroup {
    pub group: String,
    pub points: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticsReport {
    pub config_hash: String,
    pub seed: u64,
    pub histograms: Vec<FeatureHistogram>,
    /// Fitted on the standardized training data.
    pub pca: Pca,
    pub projections: Vec<PcaGroup>,
}

pub const ACCEPTED_POSITIVES: &str = "H_f^+ ∩ D^+";
pub const REJECTED: &str = "H_f^-";

pub fn run_semantics(cfg: &ExperimentConfig, out: Option<&Path>) -> ToolResult<SemanticsReport> {
    cfg.validate()?;
    let seed = cfg.seeds[0];
    let outcome = evaluate_seed(cfg, seed)?;
    let p = &outcome.prepared;
    let features: Vec<usize> = cfg
        .timeliness
        .iter()
        .map(|name| {
            p.schema()
                .index_of(name)
                .ok_or_else(|| ToolError::Config(format!("timeliness feature {name:?} is not in the schema")))
        })
        .collect::<ToolResult<_>>()?;
    let base = &p.linear_base;
    let accepted: Vec<Vec<f64>> = p
        .train
        .rows()
        .zip(p.train.labels())
        .filter(|(x, y)| base.score(x) > 0.0 && **y == Label::Positive)
        .map(|(x, _)| x.to_vec())
        .collect();
    let rejected: Vec<Vec<f64>> = p.train.rows().filter(|x| base.score(x) <= 0.0).map(<[f64]>::to_vec).collect();
    let mut groups: Vec<(String, Vec<Vec<f64>>)> = vec![(ACCEPTED_POSITIVES.to_string(), accepted)];
    for (method, results) in &outcome.linear_results {
        let rows = results.iter().filter(|r| r.found).map(|r| r.x_cf.clone()).collect();
        groups.push((method.as_str().to_string(), rows));
    }
    let mut histograms = Vec::new();
    for &j in &features {
        let values: Vec<f64> = groups.iter().flat_map(|(_, rows)| rows.iter().map(move |r| r[j])).collect();
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (lo, hi) = if values.is_empty() {
            (0.0, 1.0)
        } else if hi > lo {
            (lo, hi)
        } else {
            (lo, lo + 1.0)
        };
        let edges = uniform_edges(lo, hi, cfg.histogram_bins)?;
        let counts = groups
            .iter()
            .map(|(name, rows)| {
                let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
                Ok((name.clone(), histogram(&col, &edges)?))
            })
            .collect::<ToolResult<_>>()?;
        histograms.push(FeatureHistogram { feature: p.schema().feature(j).name.clone(), edges, groups: counts });
    }
    let std = &p.feature_std;
    let mean: Vec<f64> =
        (0..p.train.dim()).map(|j| p.train.column(j).iter().sum::<f64>() / p.train.len() as f64).collect();
    let standardize = |x: &[f64]| -> Vec<f64> { x.iter().zip(&mean).zip(std).map(|((v, m), s)| (v - m) / s).collect() };
    let pca = fit_pca(&p.train.rows().map(standardize).collect::<Vec<_>>())?;
    groups.insert(1, (REJECTED.to_string(), rejected));
    let projections = groups
        .iter()
        .map(|(name, rows)| PcaGroup {
            group: name.clone(),
            points: rows.iter().map(|r| pca.project(&standardize(r))).collect(),
        })
        .collect();
    let report = SemanticsReport { config_hash: cfg.hash(), seed, histograms, pca, projections };
    if let Some(dir) = out {
        io::write_json(&dir.join("semantics.json"), &report)?;
    }
    Ok(report)
}
