use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{empirical_risk, Scorer};
use crate::dataset::Dataset;
use crate::{Error, Result};

/// Which risk window admits a candidate into the level set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RiskWindow {
    /// `|risk − base_risk| ≤ ε`
    #[default]
    TwoSided,
    /// `risk ≤ base_risk + ε`
    OneSided,
}

impl RiskWindow {
    pub fn admits(self, risk: f64, base_risk: f64, epsilon: f64) -> bool {
        match self {
            RiskWindow::TwoSided => risk <= base_risk + epsilon && risk >= base_risk - epsilon,
            RiskWindow::OneSided => risk <= base_risk + epsilon,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Peer<M> {
    pub model: M,
    pub risk: f64,
    pub is_base: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSet<M> {
    pub peers: Vec<Peer<M>>,
    pub epsilon: f64,
    pub base_risk: f64,
    pub window: RiskWindow,
    /// Set when no candidate qualified and the set holds only the base.
    pub only_base: bool,
}

impl<M> LevelSet<M> {
    pub fn base(&self) -> &M {
        &self.peers.iter().find(|p| p.is_base).expect("level set always holds its base").model
    }

    pub fn models(&self) -> impl Iterator<Item = &M> {
        self.peers.iter().map(|p| &p.model)
    }

    pub fn len(&self) -> usize {
        self.peers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.peers.is_empty()
    }
}

/// Admits every candidate whose empirical risk on `reference` lies in the
/// ε-window around the base risk. The base itself is always a peer;
/// candidates equal to the base are skipped. Peers are sorted by risk
/// (stable, base first among ties).
pub fn build_level_set<M: Scorer + PartialEq>(
    base: M,
    candidates: Vec<M>,
    reference: &Dataset,
    epsilon: f64,
    window: RiskWindow,
) -> Result<LevelSet<M>> {
    if candidates.is_empty() {
        return Err(Error::Empty("level-set candidates"));
    }
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidArgument(alloc::format!("epsilon must be >= 0, got {epsilon}")));
    }
    let base_risk = empirical_risk(&base, reference)?;
    let mut admitted = Vec::new();
    for c in candidates {
        if c == base {
            continue;
        }
        let risk = empirical_risk(&c, reference)?;
        if window.admits(risk, base_risk, epsilon) {
            admitted.push(Peer { model: c, risk, is_base: false });
        }
    }
    let only_base = admitted.is_empty();
    let mut peers = Vec::with_capacity(admitted.len() + 1);
    peers.push(Peer { model: base, risk: base_risk, is_base: true });
    peers.extend(admitted);
    peers.sort_by(|a, b| a.risk.total_cmp(&b.risk));
    Ok(LevelSet { peers, epsilon, base_risk, window, only_base })
}
