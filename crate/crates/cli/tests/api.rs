mod support;

use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use serde_json::{json, Value};
use tower::ServiceExt;

use patway_cli::server::{router, AppState};
use patway_core::checkpoint::{Checkpoint, ModelKind};
use patway_core::evalharness::fit_model;
use patway_core::eventlog::{split_by_pathway, EncodedDataset};
use patway_core::interpret::BundleConfig;

const N: usize = 60;

fn checkpoint(kind: ModelKind, ds: &EncodedDataset) -> Checkpoint {
    let hp = match kind {
        ModelKind::Patwaynet => json!({"hidden_seq": 4, "hidden_static": 4, "learning_rate": 0.01, "batch_size": 16, "max_epochs": 3}),
        _ => json!({"max_depth": 2}),
    };
    let (train, val) = split_by_pathway(ds, 0.25, 11).unwrap();
    let fitted = fit_model(kind, &hp, &train, &val, 3).unwrap();
    Checkpoint::new(&fitted.model, ds, hp, 3, fitted.training)
}

fn app_with(ds: EncodedDataset) -> (Router, Checkpoint) {
    let ckpt = checkpoint(ModelKind::Patwaynet, &support::ward_dataset(N));
    let state = AppState::new(&ckpt, ds, BundleConfig { grid: 20, surface_grid: 8, ..BundleConfig::default() }).unwrap();
    (router(Arc::new(state)), ckpt)
}

async fn call(app: &Router, method: Method, uri: &str) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri).body(Body::empty()).unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = to_bytes(res.into_body(), usize::MAX).await.unwrap();
    let body = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
    (status, body)
}

async fn get(app: &Router, uri: &str) -> (StatusCode, Value) {
    call(app, Method::GET, uri).await
}

#[tokio::test]
async fn lists_patients_and_timelines() {
    let ds = support::ward_dataset(N);
    let (app, _) = app_with(ds.clone());
    let (status, body) = get(&app, "/api/patients").await;
    assert_eq!(status, StatusCode::OK);
    let patients = body["patients"].as_array().unwrap();
    assert_eq!(patients.len(), ds.pathways.len());
    let first = &ds.pathways[0];
    assert_eq!(patients[0]["id"], first.id.as_str());
    assert_eq!(patients[0]["n_events"], first.len);

    let (status, t) = get(&app, &format!("/api/patients/{}", first.id)).await;
    assert_eq!(status, StatusCode::OK);
    let events = t["events"].as_array().unwrap();
    assert_eq!(events.len(), first.len);
    assert_eq!(events[0]["step"], 1);
    assert_eq!(events[0]["activity"], first.activities[0].as_str());
    let names: Vec<&str> = events[0]["values"].as_array().unwrap().iter().map(|v| v["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["CRP", "Antibiotics"]);
}

#[tokio::test]
async fn unknown_pathway_is_404_json() {
    let (app, _) = app_with(support::ward_dataset(N));
    for uri in ["/api/patients/nobody", "/api/patients/nobody/prediction", "/api/patients/nobody/interpretation"] {
        let (status, body) = get(&app, uri).await;
        assert_eq!(status, StatusCode::NOT_FOUND, "{uri}");
        assert_eq!(body["error"], "unknown_pathway", "{uri}");
        assert!(body["message"].as_str().unwrap().contains("nobody"));
    }
    let (status, body) = get(&app, "/api/nothing/here").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["error"], "not_found");
}

#[tokio::test]
async fn prediction_matches_forward_pass_and_bundle() {
    let ds = support::ward_dataset(N);
    let (app, ckpt) = app_with(ds.clone());
    let model = ckpt.model().unwrap();
    let net = model.network().unwrap();
    for pi in [0, 7, 23] {
        let p = &ds.pathways[pi];
        let prefix = p.len.min(2);
        let (status, body) = get(&app, &format!("/api/patients/{}/prediction?prefix_len={prefix}", p.id)).await;
        assert_eq!(status, StatusCode::OK);
        let direct = net.predict(&p.x_static, ds.pathway_seq(pi).truncate(prefix)).unwrap();
        let served = body["probability"].as_f64().unwrap();
        assert!((served - direct).abs() < 1e-10, "{served} vs {direct}");
        assert_eq!(body["prefix_len"], prefix);

        let (status, bundle) = get(&app, &format!("/api/patients/{}/interpretation?prefix_len={prefix}", p.id)).await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(bundle["prediction"], body);
    }
}

#[tokio::test]
async fn interpretation_follows_published_schema() {
    let ds = support::ward_dataset(N);
    let (app, ckpt) = app_with(ds.clone());
    let schema: Value = serde_json::from_str(include_str!("../../../docs/interpretation_bundle.schema.json")).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let (status, bundle) = get(&app, &format!("/api/patients/{}/interpretation", ds.pathways[4].id)).await;
    assert_eq!(status, StatusCode::OK);
    let errors: Vec<String> = validator.iter_errors(&bundle).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:?}");
    assert_eq!(bundle["model_hash"], ckpt.model_hash().unwrap().as_str());
    assert_eq!(bundle["schema_hash"], ds.schema_hash().as_str());
}

#[tokio::test]
async fn importance_endpoint_reports_model() {
    let (app, ckpt) = app_with(support::ward_dataset(N));
    let (status, body) = get(&app, "/api/model/importance").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["model_kind"], "patwaynet");
    assert_eq!(body["model_hash"], ckpt.model_hash().unwrap().as_str());
    let imps = body["importances"].as_array().unwrap();
    assert!(!imps.is_empty());
}

#[tokio::test]
async fn reads_are_idempotent() {
    let ds = support::ward_dataset(N);
    let (app, _) = app_with(ds.clone());
    let id = &ds.pathways[2].id;
    for uri in [
        "/api/patients".to_string(),
        format!("/api/patients/{id}"),
        format!("/api/patients/{id}/prediction"),
        format!("/api/patients/{id}/interpretation"),
        "/api/model/importance".to_string(),
    ] {
        let a = get(&app, &uri).await;
        let b = get(&app, &uri).await;
        assert_eq!(a, b, "{uri}");
    }
}

#[tokio::test]
async fn schema_mismatch_is_409_for_model_endpoints() {
    let other = support::ward_dataset_other_schema(N);
    let id = other.pathways[0].id.clone();
    let (app, _) = app_with(other);
    assert_eq!(get(&app, "/api/patients").await.0, StatusCode::OK);
    for uri in [format!("/api/patients/{id}/prediction"), format!("/api/patients/{id}/interpretation"), "/api/model/importance".into()] {
        let (status, body) = get(&app, &uri).await;
        assert_eq!(status, StatusCode::CONFLICT, "{uri}");
        assert_eq!(body["error"], "schema_mismatch");
    }
}

#[tokio::test]
async fn bad_prefix_len_is_400() {
    let ds = support::ward_dataset(N);
    let (app, _) = app_with(ds.clone());
    let p = &ds.pathways[1];
    for q in ["abc".to_string(), "-1".to_string()] {
        let (status, body) = get(&app, &format!("/api/patients/{}/prediction?prefix_len={q}", p.id)).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{q}");
        assert_eq!(body["error"], "invalid_prefix_len");
    }
    let (status, body) = get(&app, &format!("/api/patients/{}/prediction?prefix_len={}", p.id, p.len + 1)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"], "invalid_prefix_len");
}

#[tokio::test]
async fn writes_are_not_accepted() {
    let ds = support::ward_dataset(N);
    let (app, _) = app_with(ds.clone());
    for method in [Method::POST, Method::PUT, Method::DELETE] {
        let (status, _) = call(&app, method.clone(), &format!("/api/patients/{}", ds.pathways[0].id)).await;
        assert!(!status.is_success(), "{method} returned {status}");
    }
}

#[test]
fn shallow_checkpoints_cannot_be_served() {
    let ds = support::ward_dataset(N);
    let ckpt = checkpoint(ModelKind::Tree, &ds);
    assert!(AppState::new(&ckpt, ds, BundleConfig::default()).is_err());
}
