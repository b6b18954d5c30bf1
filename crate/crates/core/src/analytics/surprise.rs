use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Mean costs measured for one recourse method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodCosts {
    pub method: String,
    /// Mean joint cost over `H_f^− ∪ H_g^−`.
    pub joint: f64,
    /// Mean single-model cost over `H_f^−`.
    pub single_f: f64,
    /// Mean single-model cost over `H_g^−`.
    pub single_g: f64,
    pub discrepancy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSurprise {
    pub method: String,
    pub lhs_joint_cost: f64,
    pub single_cost_f: f64,
    pub single_cost_g: f64,
    /// `single_f / joint`.
    pub s_bar: f64,
    /// Set when `joint < single_f`, which nested constraints rule out for
    /// exact costs; `s_bar` is then reported unclamped.
    pub inconsistent: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    #[serde(rename = "S_more_robust")]
    SMoreRobust,
    #[serde(rename = "D_more_robust")]
    DMoreRobust,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurpriseReport {
    /// Sparse method first, data-support method second.
    pub methods: Vec<MethodSurprise>,
    /// Equal discrepancies (within 1e-6) and `ratio_D < ratio_S`, where
    /// `ratio = single_g / single_f`.
    pub sparse_robust_condition: bool,
    pub ordering_verdict: Verdict,
}

fn per_method(c: &MethodCosts) -> Result<MethodSurprise> {
    if !(c.single_f > 0.0) || !(c.joint >= 0.0) || !(c.single_g >= 0.0) {
        return Err(Error::InvalidArgument(alloc::format!("costs for {} must be positive: {c:?}", c.method)));
    }
    Ok(MethodSurprise {
        method: c.method.clone(),
        lhs_joint_cost: c.joint,
        single_cost_f: c.single_f,
        single_cost_g: c.single_g,
        s_bar: c.single_f / c.joint,
        inconsistent: c.joint < c.single_f,
    })
}

/// Inverse cost of negative surprise for a sparse (`S`) and a data-support
/// (`D`) method, with the ratio condition under which `S` is predicted to
/// be more robust. The verdict reads the measured `s_bar` values and is
/// inconclusive on ties or inconsistent inputs.
pub fn surprise(sparse: &MethodCosts, support: &MethodCosts) -> Result<SurpriseReport> {
    let s = per_method(sparse)?;
    let d = per_method(support)?;
    let ratio_s = sparse.single_g / sparse.single_f;
    let ratio_d = support.single_g / support.single_f;
    let equal_discrepancy = (sparse.discrepancy - support.discrepancy).abs() <= 1e-6;
    let sparse_robust_condition = equal_discrepancy && ratio_d < ratio_s;
    let ordering_verdict = if s.inconsistent || d.inconsistent || s.s_bar == d.s_bar {
        Verdict::Inconclusive
    } else if s.s_bar > d.s_bar {
        Verdict::SMoreRobust
    } else {
        Verdict::DMoreRobust
    };
    Ok(SurpriseReport { methods: alloc::vec![s, d], sparse_robust_condition, ordering_verdict })
}
