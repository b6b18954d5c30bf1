//! On-disk model bundle: everything the service needs, written as JSON
//! files into one directory.
//!
//! | file               | content                                   |
//! |--------------------|-------------------------------------------|
//! | `schema.json`      | [`SchemaFile`]                            |
//! | `transform.json`   | percentile transform of the training data |
//! | `peers.json`       | level-set peers with ids and accuracies   |
//! | `autoencoder.json` | trained autoencoder                       |
//! | `defaults.json`    | per-method engine settings and budgets    |
//! | `manifest.json`    | config hash and seed                      |
//!
//! Floats are written with round-trip precision, so a reloaded bundle
//! scores, encodes and decodes bit-identically.

use std::path::Path;

use recourse_core::autoencoder::AutoencoderModel;
use recourse_core::classifier::Classifier;
use recourse_core::engine::{GridConfig, GsConfig, ShellConfig};
use recourse_core::percentile::PercentileTransform;
use serde::{Deserialize, Serialize};

use crate::io::{self, SchemaFile};
use crate::{ToolError, ToolResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundlePeer {
    pub id: String,
    pub model: Classifier,
    pub is_base: bool,
    pub train_risk: f64,
    pub holdout_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodDefaults {
    pub gs: GsConfig,
    pub gs_budget: usize,
    pub grid: GridConfig,
    pub grid_budget: usize,
    pub latent: ShellConfig,
    pub latent_budget: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceBundle {
    pub schema: SchemaFile,
    pub transform: PercentileTransform,
    pub peers: Vec<BundlePeer>,
    pub autoencoder: AutoencoderModel,
    pub defaults: MethodDefaults,
    pub manifest: Manifest,
}

impl ServiceBundle {
    pub fn validate(&self) -> ToolResult<()> {
        let schema = self.schema.schema()?;
        let d = schema.len();
        if self.transform.dim() != d {
            return Err(ToolError::Format(format!("transform has {} features, schema {d}", self.transform.dim())));
        }
        if self.peers.iter().filter(|p| p.is_base).count() != 1 {
            return Err(ToolError::Format("bundle needs exactly one base peer".into()));
        }
        let mut ids: Vec<&str> = self.peers.iter().map(|p| p.id.as_str()).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(ToolError::Format("peer ids must be unique".into()));
        }
        use recourse_core::autoencoder::Generative;
        use recourse_core::classifier::Scorer;
        if let Some(p) = self.peers.iter().find(|p| p.model.dim() != d) {
            return Err(ToolError::Format(format!("peer {} has dimension {}", p.id, p.model.dim())));
        }
        if self.autoencoder.input_dim() != d {
            return Err(ToolError::Format("autoencoder dimension does not match schema".into()));
        }
        Ok(())
    }

    pub fn base(&self) -> &BundlePeer {
        self.peers.iter().find(|p| p.is_base).expect("validated bundle has a base")
    }

    pub fn peer(&self, id: &str) -> Option<&BundlePeer> {
        self.peers.iter().find(|p| p.id == id)
    }

    pub fn save(&self, dir: &Path) -> ToolResult<()> {
        self.validate()?;
        io::write_json(&dir.join("schema.json"), &self.schema)?;
        io::write_json(&dir.join("transform.json"), &self.transform)?;
        io::write_json(&dir.join("peers.json"), &self.peers)?;
        io::write_json(&dir.join("autoencoder.json"), &self.autoencoder)?;
        io::write_json(&dir.join("defaults.json"), &self.defaults)?;
        io::write_json(&dir.join("manifest.json"), &self.manifest)
    }

    pub fn load(dir: &Path) -> ToolResult<Self> {
        let bundle = Self {
            schema: io::read_schema(&dir.join("schema.json"))?,
            transform: io::read_json(&dir.join("transform.json"))?,
            peers: io::read_json(&dir.join("peers.json"))?,
            autoencoder: io::read_json(&dir.join("autoencoder.json"))?,
            defaults: io::read_json(&dir.join("defaults.json"))?,
            manifest: io::read_json(&dir.join("manifest.json"))?,
        };
        bundle.validate()?;
        Ok(bundle)
    }
}
