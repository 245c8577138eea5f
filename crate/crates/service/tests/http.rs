use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use revhelper::assist::{handle_predict, PredictRequest};
use revhelper::features::{build_dataset, impute_missing, FeatureConfig, ImputeStrategy, FEATURE_NAMES};
use revhelper::ingest::{generate_synthetic_corpus, SynthSpec};
use revhelper::labeling::{label_corpus, LabelPolicy};
use revhelper::learn::{train_classifier, Hyper, ModelKind, TrainedModel};
use revhelper::text::Lexicons;
use revhelper_service::{router, AppState};
use serde_json::Value;
use tower::ServiceExt;

const REQUEST: &str = include_str!("../../core/fixtures/predict_request.json");

fn model() -> TrainedModel {
    let spec = SynthSpec {
        n_prs: 40,
        seed: 3,
        ..SynthSpec::default()
    };
    let mut corpus = generate_synthetic_corpus(&spec).unwrap();
    label_corpus(&mut corpus, &LabelPolicy::default()).unwrap();
    let ds = build_dataset(&corpus, &Lexicons::default(), &FeatureConfig::default(), None)
        .select(&FEATURE_NAMES)
        .unwrap();
    let filled = impute_missing(&ds, ImputeStrategy::Mean).unwrap();
    let hyper = Hyper {
        n_trees: 40,
        ..Hyper::default()
    };
    let mut m = train_classifier(&filled, ModelKind::RandomForest, &hyper, 1).unwrap();
    m.attach_summary(&filled, Some(2)).unwrap();
    m
}

fn app(cors: bool) -> (Router, TrainedModel) {
    let m = model();
    let state = Arc::new(AppState::new(m.clone(), "small", Lexicons::default()));
    (router(state, cors), m)
}

async fn send(app: Router, req: Request<Body>) -> (StatusCode, axum::http::HeaderMap, Value) {
    let resp = app.oneshot(req).await.unwrap();
    let status = resp.status();
    let headers = resp.headers().clone();
    let bytes = to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    (status, headers, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

fn post(body: &str) -> Request<Body> {
    Request::post("/predict")
        .header(header::CONTENT_TYPE, "application/json")
        .body(Body::from(body.to_string()))
        .unwrap()
}

#[tokio::test]
async fn health_reports_model_id() {
    let (app, _) = app(true);
    let (status, _, body) = send(app, Request::get("/health").body(Body::empty()).unwrap()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["status"], "ok");
    assert_eq!(body["model_id"], "small");
}

#[tokio::test]
async fn predict_matches_the_library() {
    let (app, m) = app(true);
    let (status, _, body) = send(app, post(REQUEST)).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["features"].as_array().unwrap().len(), 15);
    let req: PredictRequest = serde_json::from_str(REQUEST).unwrap();
    let direct = handle_predict(&req, &m, &Lexicons::default()).unwrap();
    assert_eq!(body, serde_json::to_value(&direct).unwrap());
}

#[tokio::test]
async fn bad_requests_are_rejected() {
    let (app, _) = app(true);
    let (status, _, body) = send(app.clone(), post(r#"{"comment_body": "   "}"#)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(body["error"].as_str().unwrap().contains("blank"));
    let (status, _, body) = send(app.clone(), post("{not json")).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(body["error"].is_string());
    let (status, _, _) = send(app.clone(), post(r#"{"comment_body": "x", "extra": 1}"#)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _, _) = send(app.clone(), post(r#"{"comment_body": "x", "reviewer_stats": {"ele": 2}}"#)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _, body) = send(app, post(r#"{"comment_body": "rename this", "model_id": "other"}"#)).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert!(body["error"].as_str().unwrap().contains("other"));
}

#[tokio::test]
async fn cors_headers_follow_the_switch() {
    let preflight = || {
        Request::builder()
            .method(Method::OPTIONS)
            .uri("/predict")
            .header(header::ORIGIN, "https://review.example")
            .header(header::ACCESS_CONTROL_REQUEST_METHOD, "POST")
            .body(Body::empty())
            .unwrap()
    };
    let (on, _) = app(true);
    let (_, headers, _) = send(on, preflight()).await;
    assert!(headers.contains_key(header::ACCESS_CONTROL_ALLOW_ORIGIN));
    let (off, _) = app(false);
    let (_, headers, _) = send(off, preflight()).await;
    assert!(!headers.contains_key(header::ACCESS_CONTROL_ALLOW_ORIGIN));
}

#[tokio::test]
async fn replaced_model_serves_new_predictions() {
    let m = model();
    let state = Arc::new(AppState::new(m.clone(), "small", Lexicons::default()));
    let app = router(state.clone(), true);
    let mut other = m.clone();
    other.meta.seed = 77;
    state.replace_model(other);
    assert_eq!(state.model().meta.seed, 77);
    let (status, _, _) = send(app, post(REQUEST)).await;
    assert_eq!(status, StatusCode::OK);
}
