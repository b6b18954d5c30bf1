#![allow(dead_code)]

use std::path::Path;

use recourse_tools::config::{DataSource, ExperimentConfig};

/// A configuration small enough for a few seconds per seed.
pub fn small_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig { data: DataSource::SyntheticCredit { n: 600 }, ..Default::default() };
    cfg.models.linear.l2 = vec![1e-3, 1e-1, 1.0];
    cfg.models.linear.epochs = 150;
    cfg.models.replicates = 2;
    cfg.models.forest.n_trees = 5;
    cfg.models.forest.depths = vec![3, 5];
    cfg.max_individuals = Some(25);
    if let Some(l) = cfg.methods.latent.as_mut() {
        l.training.epochs = 4;
        l.budget = 2000;
    }
    if let Some(g) = cfg.methods.gs.as_mut() {
        g.budget = 2000;
    }
    cfg.bounds.pairs = 3;
    cfg.bounds.n = 600;
    cfg.bounds.surprise_rows = 20;
    cfg.bounds.manifold_n = 300;
    cfg
}

/// Runs `transfer` with [`small_config`] into `dir`, leaving a bundle in
/// `dir/bundle`.
pub fn build_bundle(dir: &Path) {
    recourse_tools::experiments::run_transfer(&small_config(), Some(dir)).unwrap();
}
