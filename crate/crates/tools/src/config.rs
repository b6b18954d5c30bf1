//! JSON experiment configuration. Every field has a default, so `{}` is a
//! valid configuration running all methods on synthetic credit data.

use std::path::{Path, PathBuf};

use recourse_core::autoencoder::TrainConfig;
use recourse_core::classifier::RiskWindow;
use recourse_core::engine::{GridConfig, Objective, ShellConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{ToolError, ToolResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    /// Regenerated per seed.
    SyntheticCredit { n: usize },
    /// `schema` is a schema file; the label column is taken from it.
    Csv { path: PathBuf, schema: PathBuf },
}

impl Default for DataSource {
    fn default() -> Self {
        DataSource::SyntheticCredit { n: 2000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearGrid {
    pub base_l2: f64,
    pub l2: Vec<f64>,
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for LinearGrid {
    fn default() -> Self {
        Self { base_l2: 1e-2, l2: vec![1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0], epochs: 300, learning_rate: 0.3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestGrid {
    pub n_trees: usize,
    pub base_depth: usize,
    pub depths: Vec<usize>,
}

impl Default for ForestGrid {
    fn default() -> Self {
        Self { n_trees: 15, base_depth: 6, depths: vec![4, 5, 6, 7, 8] }
    }
}

/// Candidate models for the level sets. Each grid point is trained
/// `replicates` times on seeded subsamples holding `subsample` of the
/// training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelGrid {
    pub linear: LinearGrid,
    pub forest: ForestGrid,
    pub replicates: usize,
    pub subsample: f64,
}

impl Default for ModelGrid {
    fn default() -> Self {
        Self { linear: LinearGrid::default(), forest: ForestGrid::default(), replicates: 3, subsample: 0.8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GsScale {
    /// Shell radii in raw feature units.
    Unit,
    /// Shell radii in units of the training standard deviation per feature.
    #[default]
    Std,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GsMethod {
    #[serde(flatten)]
    pub shells: ShellConfig,
    pub scale: GsScale,
    pub budget: usize,
}

impl Default for GsMethod {
    fn default() -> Self {
        Self { shells: ShellConfig::default(), scale: GsScale::Std, budget: 5000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridMethod {
    #[serde(flatten)]
    pub grid: GridConfig,
    pub budget: usize,
}

impl Default for GridMethod {
    fn default() -> Self {
        Self { grid: GridConfig::default(), budget: 200_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatentMethod {
    pub latent_dim: usize,
    pub hidden: Vec<usize>,
    pub training: TrainConfig,
    pub shells: ShellConfig,
    pub budget: usize,
}

impl Default for LatentMethod {
    fn default() -> Self {
        Self {
            latent_dim: 6,
            hidden: vec![32, 32],
            training: TrainConfig::default(),
            shells: ShellConfig::default(),
            budget: 5000,
        }
    }
}

/// Methods to run. A missing `methods` key enables all three; an explicit
/// object enables exactly the methods it lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Methods {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gs: Option<GsMethod>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridMethod>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latent: Option<LatentMethod>,
}

impl Default for Methods {
    fn default() -> Self {
        Self { gs: Some(GsMethod::default()), grid: Some(GridMethod::default()), latent: Some(LatentMethod::default()) }
    }
}

/// Settings for the `bounds` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsConfig {
    pub pairs: usize,
    pub n: usize,
    pub l2_f: f64,
    pub l2_g: f64,
    /// Rows used for the engine-mode surprise estimate.
    pub surprise_rows: usize,
    pub manifold_latent_dim: usize,
    pub manifold_ambient_dim: usize,
    pub manifold_n: usize,
    pub manifold_step: f64,
    pub manifold_budget: usize,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        Self {
            pairs: 20,
            n: 2000,
            l2_f: 1e-2,
            l2_g: 0.1,
            surprise_rows: 100,
            manifold_latent_dim: 2,
            manifold_ambient_dim: 6,
            manifold_n: 2000,
            manifold_step: 0.1,
            manifold_budget: 5000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: DataSource,
    pub train_fraction: f64,
    pub models: ModelGrid,
    pub epsilon: f64,
    pub window: RiskWindow,
    pub methods: Methods,
    pub seeds: Vec<u64>,
    /// Cap on the number of rejected test individuals per seed.
    pub max_individuals: Option<usize>,
    /// Features compared in the semantics histograms.
    pub timeliness: Vec<String>,
    pub histogram_bins: usize,
    pub bounds: BoundsConfig,
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            data: DataSource::default(),
            train_fraction: 0.8,
            models: ModelGrid::default(),
            epsilon: 0.05,
            window: RiskWindow::TwoSided,
            methods: Methods::default(),
            seeds: vec![0],
            max_individuals: Some(200),
            timeliness: vec![
                "NumberOfTime30-59DaysPastDueNotWorse".into(),
                "NumberOfTimes90DaysLate".into(),
                "NumberOfTime60-89DaysPastDueNotWorse".into(),
            ],
            histogram_bins: 10,
            bounds: BoundsConfig::default(),
            output_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> ToolResult<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| ToolError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> ToolResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| ToolError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        // relative data paths resolve against the config file
        if let DataSource::Csv { path: p, schema } = &mut cfg.data {
            let base = path.parent().unwrap_or(Path::new("."));
            if p.is_relative() {
                *p = base.join(&*p);
            }
            if schema.is_relative() {
                *schema = base.join(&*schema);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> ToolResult<()> {
        let fail = |m: &str| Err(ToolError::Config(m.to_string()));
        if self.methods.gs.is_none() && self.methods.grid.is_none() && self.methods.latent.is_none() {
            return fail("at least one method must be enabled");
        }
        if self.seeds.is_empty() {
            return fail("seeds must not be empty");
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return fail("train_fraction must lie in (0, 1)");
        }
        if self.epsilon.is_nan() || self.epsilon < 0.0 {
            return fail("epsilon must be >= 0");
        }
        if self.models.replicates < 1 || !(self.models.subsample > 0.0 && self.models.subsample <= 1.0) {
            return fail("models.replicates must be >= 1 and models.subsample in (0, 1]");
        }
        if self.models.linear.l2.is_empty() && self.models.forest.depths.is_empty() {
            return fail("model grid is empty");
        }
        if self.models.forest.n_trees < 1 {
            return fail("models.forest.n_trees must be >= 1");
        }
        if self.histogram_bins < 1 {
            return fail("histogram_bins must be >= 1");
        }
        if self.max_individuals == Some(0) {
            return fail("max_individuals must be >= 1");
        }
        let budgets = [
            self.methods.gs.as_ref().map(|m| m.budget),
            self.methods.grid.as_ref().map(|m| m.budget),
            self.methods.latent.as_ref().map(|m| m.budget),
        ];
        if budgets.iter().flatten().any(|b| *b == 0) {
            return fail("method budgets must be >= 1");
        }
        if let DataSource::SyntheticCredit { n } = self.data {
            if n < 10 {
                return fail("synthetic credit needs n >= 10");
            }
        }
        Ok(())
    }

    /// Canonical JSON of the configuration.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Hex SHA-256 of [`Self::canonical_json`].
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seeds = vec![seed];
        self
    }

    pub fn objective(&self) -> Objective {
        self.methods.grid.as_ref().map(|g| g.grid.objective).unwrap_or_default()
    }
}
