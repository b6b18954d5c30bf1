mod common;

use std::sync::{Arc, OnceLock};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use recourse_core::classifier::Scorer;
use recourse_core::dataset::Label;
use recourse_tools::api::{RecourseResponse, SchemaResponse, ScoreEntry};
use recourse_tools::bundle::ServiceBundle;
use recourse_tools::service::router;
use serde_json::{json, Value};
use tower::ServiceExt;

struct Fixture {
    _dir: tempfile::TempDir,
    bundle: ServiceBundle,
    bundle_dir: std::path::PathBuf,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        common::build_bundle(dir.path());
        let bundle_dir = dir.path().join("bundle");
        let bundle = ServiceBundle::load(&bundle_dir).unwrap();
        Fixture { _dir: dir, bundle, bundle_dir }
    })
}

async fn call(
    bundle: &ServiceBundle,
    method: &str,
    uri: &str,
    body: Option<Value>,
) -> (StatusCode, String, axum::http::HeaderMap) {
    let app = router(Arc::new(bundle.clone()));
    let mut req = Request::builder().method(method).uri(uri).header("origin", "http://localhost:5173");
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let headers = resp.headers().clone();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap(), headers)
}

/// A training-distribution row the base model accepts and one it rejects.
fn rows(bundle: &ServiceBundle) -> (Vec<f64>, Vec<f64>) {
    let data = recourse_core::synth::synthesize_credit(600, bundle.manifest.seed).unwrap();
    let base = &bundle.base().model;
    let pos = data.rows().find(|x| base.score(x) > 0.0).unwrap().to_vec();
    let neg = data.rows().find(|x| base.score(x) <= 0.0).unwrap().to_vec();
    (pos, neg)
}

#[tokio::test]
async fn schema_endpoint() {
    let f = fixture();
    let (status, body, headers) = call(&f.bundle, "GET", "/schema", None).await;
    assert_eq!(status, StatusCode::OK);
    assert!(headers.contains_key("access-control-allow-origin"));
    let resp: SchemaResponse = serde_json::from_str(&body).unwrap();
    assert_eq!(resp.schema.features.len(), 10);
    assert_eq!(resp.anchors.len(), 10);
    assert_eq!(resp.schema, f.bundle.schema);
    for a in &resp.anchors {
        assert!(a.min <= a.p25 && a.p25 <= a.p50 && a.p50 <= a.p75 && a.p75 <= a.max, "{a:?}");
    }
}

#[tokio::test]
async fn preflight_is_allowed() {
    let f = fixture();
    let app = router(Arc::new(f.bundle.clone()));
    let req = Request::builder()
        .method("OPTIONS")
        .uri("/score")
        .header("origin", "http://localhost:5173")
        .header("access-control-request-method", "POST")
        .body(Body::empty())
        .unwrap();
    let resp = app.oneshot(req).await.unwrap();
    assert!(resp.status().is_success());
    assert!(resp.headers().contains_key("access-control-allow-origin"));
}

#[tokio::test]
async fn score_endpoint() {
    let f = fixture();
    let (pos, neg) = rows(&f.bundle);
    let (status, body, _) = call(&f.bundle, "POST", "/score", Some(json!({ "x": pos }))).await;
    assert_eq!(status, StatusCode::OK);
    let entries: Vec<ScoreEntry> = serde_json::from_str(&body).unwrap();
    assert_eq!(entries.len(), f.bundle.peers.len());
    for (e, p) in entries.iter().zip(&f.bundle.peers) {
        assert_eq!(e.id, p.id);
        assert_eq!(e.score, p.model.score(&pos));
        assert_eq!(e.decision, Label::from_score(e.score));
    }
    assert_eq!(entries.iter().find(|e| e.is_base).unwrap().decision, Label::Positive);
    let (_, body_neg, _) = call(&f.bundle, "POST", "/score", Some(json!({ "x": neg }))).await;
    let entries: Vec<ScoreEntry> = serde_json::from_str(&body_neg).unwrap();
    assert_eq!(entries.iter().find(|e| e.is_base).unwrap().decision, Label::Negative);
    let (_, again, _) = call(&f.bundle, "POST", "/score", Some(json!({ "x": pos }))).await;
    assert_eq!(body, again);
}

#[tokio::test]
async fn score_rejects_invalid_x() {
    let f = fixture();
    let (status, body, _) = call(&f.bundle, "POST", "/score", Some(json!({ "x": [1.0, 2.0] }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(body.contains("expected 10"));
    let (mut pos, _) = rows(&f.bundle);
    pos[4] = -5.0;
    pos[1] = 36.5;
    let (status, body, _) = call(&f.bundle, "POST", "/score", Some(json!({ "x": pos }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let v: Value = serde_json::from_str(&body).unwrap();
    let fields: Vec<&str> = v["fields"].as_array().unwrap().iter().map(|f| f["feature"].as_str().unwrap()).collect();
    assert_eq!(fields, vec!["age", "MonthlyIncome"]);
    let (status, _, _) = call(&f.bundle, "POST", "/score", Some(json!({ "y": [] }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn recourse_for_rejected_row() {
    let f = fixture();
    let (_, neg) = rows(&f.bundle);
    for method in ["gs", "grid", "latent"] {
        let (status, body, _) =
            call(&f.bundle, "POST", "/recourse", Some(json!({ "x": neg, "method": method, "seed": 3 }))).await;
        assert_eq!(status, StatusCode::OK, "{method}: {body}");
        let resp: RecourseResponse = serde_json::from_str(&body).unwrap();
        assert!(resp.result.found);
        assert_eq!(resp.targets, vec![f.bundle.base().id.clone()]);
        let costs = resp.costs.unwrap();
        assert!(costs.cost_total > 0.0);
        // validity badges equal a fresh score of x_cf
        let (_, scored, _) = call(&f.bundle, "POST", "/score", Some(json!({ "x": resp.result.x_cf }))).await;
        let entries: Vec<ScoreEntry> = serde_json::from_str(&scored).unwrap();
        for e in entries {
            assert_eq!(resp.validity[&e.id], e.decision);
        }
        assert_eq!(resp.validity[&f.bundle.base().id], Label::Positive);
        let (_, again, _) =
            call(&f.bundle, "POST", "/recourse", Some(json!({ "x": neg, "method": method, "seed": 3 }))).await;
        assert_eq!(body, again);
    }
}

#[tokio::test]
async fn accepted_row_gives_zero_action() {
    let f = fixture();
    let (pos, _) = rows(&f.bundle);
    let (status, body, _) = call(&f.bundle, "POST", "/recourse", Some(json!({ "x": pos, "method": "gs" }))).await;
    assert_eq!(status, StatusCode::OK);
    let resp: RecourseResponse = serde_json::from_str(&body).unwrap();
    assert!(resp.result.found);
    assert_eq!(resp.result.x_cf, pos);
    assert!(resp.result.action.iter().all(|a| *a == 0.0));
    let c = resp.costs.unwrap();
    assert_eq!((c.cost_total, c.cost_max, c.norm_cost), (0.0, 0.0, 0.0));
}

#[tokio::test]
async fn recourse_precondition_errors() {
    let f = fixture();
    let (_, neg) = rows(&f.bundle);
    let (status, _, _) = call(&f.bundle, "POST", "/recourse", Some(json!({ "x": neg, "method": "milp" }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _, _) =
        call(&f.bundle, "POST", "/recourse", Some(json!({ "x": neg, "method": "gs", "targets": ["nope"] }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _, _) =
        call(&f.bundle, "POST", "/recourse", Some(json!({ "x": neg, "method": "gs", "targets": [] }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    if let Some(forest) = f.bundle.peers.iter().find(|p| p.model.as_linear().is_none()) {
        let (status, body, _) =
            call(&f.bundle, "POST", "/recourse", Some(json!({ "x": neg, "method": "grid", "targets": [forest.id] })))
                .await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{body}");
    }
    let mut bad = neg.clone();
    bad[1] += 0.5;
    let (status, _, _) = call(&f.bundle, "POST", "/recourse", Some(json!({ "x": bad, "method": "gs" }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn exhausted_search_is_422_with_stats() {
    let f = fixture();
    let mut starved = f.bundle.clone();
    starved.defaults.gs.shells.max_shells = 1;
    starved.defaults.gs.shells.step = 1e-6;
    starved.defaults.gs_budget = 3;
    let (_, neg) = rows(&starved);
    let (status, body, _) = call(&starved, "POST", "/recourse", Some(json!({ "x": neg, "method": "gs" }))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let resp: RecourseResponse = serde_json::from_str(&body).unwrap();
    assert!(!resp.result.found);
    assert_eq!(resp.result.evaluations_used, 3);
    assert!(resp.costs.is_none());
}

#[test]
fn requests_do_not_mutate_the_bundle() {
    let f = fixture();
    let before = f.bundle.clone();
    let (pos, neg) = rows(&f.bundle);
    let rt = tokio::runtime::Runtime::new().unwrap();
    rt.block_on(async {
        call(&f.bundle, "POST", "/score", Some(json!({ "x": pos }))).await;
        call(&f.bundle, "POST", "/recourse", Some(json!({ "x": neg, "method": "latent" }))).await;
    });
    assert_eq!(ServiceBundle::load(&f.bundle_dir).unwrap(), before);
}

#[test]
fn cli_matches_service_byte_for_byte() {
    let f = fixture();
    let data = recourse_core::synth::synthesize_credit(600, 77).unwrap();
    let base = &f.bundle.base().model;
    let xs: Vec<Vec<f64>> = data.rows().filter(|x| base.score(x) <= 0.0).take(10).map(<[f64]>::to_vec).collect();
    let peer_ids: Vec<String> =
        f.bundle.peers.iter().filter(|p| p.model.as_linear().is_some()).map(|p| p.id.clone()).collect();
    let rt = tokio::runtime::Runtime::new().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mut checked = 0;
    for (i, x) in xs.iter().enumerate() {
        for (k, method) in ["gs", "grid", "latent", "gs", "latent"].iter().enumerate() {
            let targets = if k >= 3 {
                vec![peer_ids[0].clone(), peer_ids[peer_ids.len() - 1].clone()]
            } else {
                vec![f.bundle.base().id.clone()]
            };
            let request = json!({ "x": x, "method": method, "targets": targets, "seed": (i * 5 + k) as u64 });
            let (status, service_body, _) = rt.block_on(call(&f.bundle, "POST", "/recourse", Some(request.clone())));
            let path = dir.path().join(format!("req{i}_{k}.json"));
            std::fs::write(&path, request.to_string()).unwrap();
            let out = std::process::Command::new(env!("CARGO_BIN_EXE_recourse"))
                .args(["recourse", "--bundle"])
                .arg(&f.bundle_dir)
                .arg("--request")
                .arg(&path)
                .output()
                .unwrap();
            let cli_body = String::from_utf8(out.stdout).unwrap();
            assert_eq!(cli_body.trim_end_matches('\n'), service_body);
            let expected_code = match status.as_u16() {
                200 => 0,
                422 => 3,
                _ => 2,
            };
            assert_eq!(out.status.code(), Some(expected_code));
            checked += 1;
        }
    }
    assert_eq!(checked, 50);
}
