//! Request handling shared by the HTTP service and the `recourse` CLI
//! subcommand. Handlers take the raw request body and return the status
//! code with the exact response body, so both front ends emit identical
//! bytes for identical inputs.

use std::collections::BTreeMap;

use recourse_core::analytics::{cost_report, CostReport};
use recourse_core::classifier::Scorer;
use recourse_core::dataset::Label;
use recourse_core::engine::{Engine, Method, Objective, RecourseRequest, RecourseResult};
use recourse_core::schema::Feature;
use serde::{Deserialize, Serialize};

use crate::bundle::ServiceBundle;
use crate::io::SchemaFile;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reply {
    pub status: u16,
    pub body: String,
}

impl Reply {
    fn json<T: Serialize>(status: u16, value: &T) -> Self {
        Self { status, body: serde_json::to_string(value).expect("response serializes") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldError {
    pub feature: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub fields: Vec<FieldError>,
}

fn bad_request(error: impl Into<String>, fields: Vec<FieldError>) -> Reply {
    Reply::json(400, &ErrorBody { error: error.into(), fields })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anchors {
    pub feature: String,
    pub min: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaResponse {
    #[serde(flatten)]
    pub schema: SchemaFile,
    pub anchors: Vec<Anchors>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreRequest {
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreEntry {
    pub id: String,
    pub is_base: bool,
    pub score: f64,
    pub decision: Label,
    pub holdout_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecourseApiRequest {
    pub x: Vec<f64>,
    pub method: String,
    #[serde(default)]
    pub targets: Option<Vec<String>>,
    #[serde(default)]
    pub objective: Option<Objective>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecourseResponse {
    pub result: RecourseResult,
    pub targets: Vec<String>,
    /// Decision of every peer at the counterfactual.
    pub validity: BTreeMap<String, Label>,
    /// Percentile costs with the bundle transform; absent when not found.
    pub costs: Option<CostReport>,
}

pub fn schema(bundle: &ServiceBundle) -> Reply {
    let anchors = bundle
        .schema
        .features
        .iter()
        .enumerate()
        .map(|(j, f)| {
            let [min, p25, p50, p75, max] = bundle.transform.anchors(j);
            Anchors { feature: f.name.clone(), min, p25, p50, p75, max }
        })
        .collect();
    Reply::json(200, &SchemaResponse { schema: bundle.schema.clone(), anchors })
}

/// Every per-feature violation of `x`, or a length error.
fn check_x(features: &[Feature], x: &[f64]) -> Result<(), Reply> {
    if x.len() != features.len() {
        return Err(bad_request(format!("x has {} values, expected {}", x.len(), features.len()), vec![]));
    }
    let fields: Vec<FieldError> = features
        .iter()
        .zip(x)
        .filter_map(|(f, v)| f.check(*v).err().map(|m| FieldError { feature: f.name.clone(), message: m.to_string() }))
        .collect();
    if fields.is_empty() {
        Ok(())
    } else {
        Err(bad_request("x violates the schema", fields))
    }
}

fn parse<T: for<'de> Deserialize<'de>>(body: &str) -> Result<T, Reply> {
    serde_json::from_str(body).map_err(|e| bad_request(format!("malformed request: {e}"), vec![]))
}

pub fn score(bundle: &ServiceBundle, body: &str) -> Reply {
    let req: ScoreRequest = match parse(body) {
        Ok(r) => r,
        Err(reply) => return reply,
    };
    if let Err(reply) = check_x(&bundle.schema.features, &req.x) {
        return reply;
    }
    let entries: Vec<ScoreEntry> = bundle
        .peers
        .iter()
        .map(|p| {
            let score = p.model.score(&req.x);
            ScoreEntry {
                id: p.id.clone(),
                is_base: p.is_base,
                score,
                decision: Label::from_score(score),
                holdout_accuracy: p.holdout_accuracy,
            }
        })
        .collect();
    Reply::json(200, &entries)
}

pub fn recourse(bundle: &ServiceBundle, body: &str) -> Reply {
    let req: RecourseApiRequest = match parse(body) {
        Ok(r) => r,
        Err(reply) => return reply,
    };
    if let Err(reply) = check_x(&bundle.schema.features, &req.x) {
        return reply;
    }
    let method = match req.method.as_str() {
        "gs" => Method::Gs,
        "grid" => Method::Grid,
        "latent" => Method::Latent,
        other => return bad_request(format!("unknown method {other:?}; expected gs, grid or latent"), vec![]),
    };
    let ids = req.targets.clone().unwrap_or_else(|| vec![bundle.base().id.clone()]);
    if ids.is_empty() {
        return bad_request("targets must not be empty", vec![]);
    }
    let mut targets: Vec<&dyn Scorer> = Vec::with_capacity(ids.len());
    for id in &ids {
        match bundle.peer(id) {
            Some(p) => {
                if method == Method::Grid && p.model.as_linear().is_none() {
                    return bad_request(format!("grid method needs linear targets; {id} is not linear"), vec![]);
                }
                targets.push(&p.model);
            }
            None => return bad_request(format!("unknown target {id:?}"), vec![]),
        }
    }
    let schema = match bundle.schema.schema() {
        Ok(s) => s,
        Err(e) => return Reply::json(500, &ErrorBody { error: e.to_string(), fields: vec![] }),
    };
    let d = &bundle.defaults;
    let (engine, budget) = match method {
        Method::Gs => (Engine::Gs(d.gs.clone()), d.gs_budget),
        Method::Grid => {
            let mut grid = d.grid;
            if let Some(o) = req.objective {
                grid.objective = o;
            }
            (Engine::Grid(&bundle.transform, grid), d.grid_budget)
        }
        _ => (Engine::Latent(&bundle.autoencoder, d.latent), d.latent_budget),
    };
    let outcome =
        RecourseRequest::new(req.x, targets, &schema, budget, req.seed.unwrap_or(0)).and_then(|r| engine.run(&r));
    let result = match outcome {
        Ok(r) => r,
        Err(e) => return bad_request(e.to_string(), vec![]),
    };
    let costs = if result.found {
        match cost_report(&bundle.transform, &result.x, &result.x_cf) {
            Ok(c) => Some(c),
            Err(e) => return bad_request(e.to_string(), vec![]),
        }
    } else {
        None
    };
    let validity = bundle.peers.iter().map(|p| (p.id.clone(), p.model.decision(&result.x_cf))).collect();
    let status = if result.found { 200 } else { 422 };
    Reply::json(status, &RecourseResponse { result, targets: ids, validity, costs })
}
