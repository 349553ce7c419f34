use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use pptree_cli::server::{router, AppState};
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap())
}

fn app() -> Router {
    router(AppState::default())
}

#[tokio::test]
async fn health() {
    let (status, body) = call(&app(), "GET", "/health", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["status"], "ok");
    assert_eq!(body["schema_version"], 1);
}

#[tokio::test]
async fn side_by_side_comparison_flow() {
    let app = app();
    let (status, sim) = call(
        &app,
        "POST",
        "/simulate",
        Some(json!({"scenario": "outlier", "k": 2, "n": 300, "outlier_fraction": 0.15, "seed": 3})),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{sim}");
    assert_eq!(sim["points"].as_array().unwrap().len(), 300);
    assert_eq!(sim["labels"].as_array().unwrap().len(), 300);
    let dataset_id = sim["dataset_id"].as_str().unwrap();

    let mut grids = vec![];
    let mut errors = vec![];
    for variant in ["original", "mod2"] {
        let (status, fitted) = call(
            &app,
            "POST",
            "/fit",
            Some(json!({"dataset_id": dataset_id, "variant": variant})),
        )
        .await;
        assert_eq!(status, StatusCode::OK, "{fitted}");
        assert_eq!(fitted["model"]["variant"], variant);
        errors.push(fitted["training_error"].as_f64().unwrap());
        let (status, grid) = call(
            &app,
            "POST",
            "/boundary",
            Some(json!({"model_id": fitted["model_id"], "resolution": 41})),
        )
        .await;
        assert_eq!(status, StatusCode::OK, "{grid}");
        assert_eq!(grid["grid"]["labels"].as_array().unwrap().len(), 41 * 41);
        grids.push(grid["grid"].clone());
    }
    assert_eq!(grids[0]["bbox"], grids[1]["bbox"]);
    assert_eq!(grids[0]["bbox"], sim["bbox"]);
    assert!(
        errors[1] + 0.05 <= errors[0],
        "mod2 {} original {}",
        errors[1],
        errors[0]
    );
    let (_, health) = call(&app, "GET", "/health", None).await;
    assert_eq!(
        (health["datasets"].as_u64(), health["models"].as_u64()),
        (Some(1), Some(2))
    );
}

#[tokio::test]
async fn refits_serialize_identically() {
    let app = app();
    let (_, sim) = call(
        &app,
        "POST",
        "/simulate",
        Some(json!({"scenario": "mixsim", "k": 3, "seed": 5})),
    )
    .await;
    let req = json!({"dataset_id": sim["dataset_id"], "variant": "mod1", "config": {"rule": 3}});
    let (_, a) = call(&app, "POST", "/fit", Some(req.clone())).await;
    let (_, b) = call(&app, "POST", "/fit", Some(req)).await;
    assert_ne!(a["model_id"], b["model_id"]);
    assert_eq!(a["model"].to_string(), b["model"].to_string());
    assert_eq!(a["model"]["config"]["rule"], 3);
}

#[tokio::test]
async fn unknown_ids_are_404() {
    let app = app();
    let (status, body) = call(&app, "POST", "/fit", Some(json!({"dataset_id": "nope"}))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["error"]["code"], "unknown_dataset");
    let (status, _) = call(&app, "POST", "/boundary", Some(json!({"model_id": "nope"}))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, body) = call(&app, "GET", "/missing", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["error"]["code"], "not_found");
}

#[tokio::test]
async fn schema_violations_are_400() {
    let app = app();
    for (uri, body) in [
        ("/simulate", json!({"n": "many"})),
        ("/simulate", json!({"k": 1})),
        ("/simulate", json!({"n": 50_001})),
        ("/fit", json!({"dataset": "x"})),
        ("/fit", json!({"dataset_id": "x", "config": {"rule": 9}})),
        ("/boundary", json!({"model_id": "x", "resolution": 502})),
        (
            "/bench",
            json!({"datasets": [{"name": "f", "csv": {"path": "/etc/passwd"}}], "models": [{"variant": "mod2"}]}),
        ),
    ] {
        let (status, resp) = call(&app, "POST", uri, Some(body.clone())).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{uri} {body} -> {resp}");
        assert!(resp["error"]["message"]
            .as_str()
            .is_some_and(|m| !m.is_empty()));
    }
}

#[tokio::test]
async fn fit_failures_are_422() {
    let app = app();
    let (_, sim) = call(
        &app,
        "POST",
        "/simulate",
        Some(json!({"k": 2, "n": 3, "seed": 1})),
    )
    .await;
    // two classes but fewer than two rows per class
    let (status, body) = call(
        &app,
        "POST",
        "/fit",
        Some(json!({"dataset_id": sim["dataset_id"], "variant": "original"})),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{body}");
    assert_eq!(body["error"]["code"], "fit_failed");
}

#[tokio::test]
async fn small_benchmark() {
    let spec = json!({
        "datasets": [{"name": "b", "simulate": {"scenario": "basic", "k": 2, "n": 120, "seed": 4}}],
        "models": [{"variant": "original"}, {"variant": "axis_baseline"}],
        "repetitions": 4,
        "seed": 1,
    });
    let (status, a) = call(&app(), "POST", "/bench", Some(spec.clone())).await;
    assert_eq!(status, StatusCode::OK, "{a}");
    assert_eq!(a["report"]["rows"].as_array().unwrap().len(), 2);
    let (_, b) = call(&app(), "POST", "/bench", Some(spec)).await;
    assert_eq!(a, b);
}

#[tokio::test]
async fn expired_entries_are_evicted() {
    let app = router(AppState::new(Duration::ZERO, None));
    let (status, sim) = call(&app, "POST", "/simulate", Some(json!({"k": 2, "n": 40}))).await;
    assert_eq!(status, StatusCode::OK);
    let (status, _) = call(
        &app,
        "POST",
        "/fit",
        Some(json!({"dataset_id": sim["dataset_id"]})),
    )
    .await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}
