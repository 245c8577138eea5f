//! HTTP prediction endpoint for the reviewer assistant.
//!
//! `POST /predict` takes a [`PredictRequest`] and answers with a
//! [`PredictResponse`]; `GET /health` reports the loaded model id.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};
use std::time::{Duration, SystemTime};

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use revhelper::assist::{handle_predict, PredictRequest};
use revhelper::learn::TrainedModel;
use revhelper::text::Lexicons;
use revhelper::Error;
use serde_json::json;
use tokio::net::TcpListener;
use tower_http::cors::CorsLayer;

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub addr: SocketAddr,
    pub model_path: PathBuf,
    /// Identifier reported by `/health` and matched against `model_id` in
    /// requests. Defaults to the model file stem.
    pub model_id: Option<String>,
    pub cors: bool,
    /// Poll the model file at this interval and reload it when it changes.
    pub reload_interval: Option<Duration>,
    pub lexicons: Lexicons,
}

impl ServeConfig {
    pub fn new(addr: SocketAddr, model_path: impl Into<PathBuf>) -> Self {
        ServeConfig {
            addr,
            model_path: model_path.into(),
            model_id: None,
            cors: true,
            reload_interval: None,
            lexicons: Lexicons::default(),
        }
    }

    fn resolved_id(&self) -> String {
        self.model_id.clone().unwrap_or_else(|| {
            self.model_path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "model".into())
        })
    }
}

/// Shared, read-only state. The model is swapped as a whole on reload.
pub struct AppState {
    model: RwLock<Arc<TrainedModel>>,
    model_id: String,
    lexicons: Lexicons,
}

impl AppState {
    pub fn new(model: TrainedModel, model_id: impl Into<String>, lexicons: Lexicons) -> Self {
        AppState {
            model: RwLock::new(Arc::new(model)),
            model_id: model_id.into(),
            lexicons,
        }
    }

    pub fn model(&self) -> Arc<TrainedModel> {
        self.model.read().expect("model lock poisoned").clone()
    }

    pub fn replace_model(&self, model: TrainedModel) {
        *self.model.write().expect("model lock poisoned") = Arc::new(model);
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(json!({ "error": message.into() }))).into_response()
}

async fn health(State(state): State<Arc<AppState>>) -> Response {
    Json(json!({ "status": "ok", "model_id": state.model_id })).into_response()
}

async fn predict(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    let req: PredictRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error(StatusCode::BAD_REQUEST, format!("malformed request: {e}")),
    };
    if let Some(id) = &req.model_id {
        if id != &state.model_id {
            return error(StatusCode::NOT_FOUND, format!("unknown model_id {id:?}"));
        }
    }
    let model = state.model();
    match handle_predict(&req, &model, &state.lexicons) {
        Ok(resp) => Json(resp).into_response(),
        Err(e @ (Error::Contract(_) | Error::Validation { .. })) => error(StatusCode::BAD_REQUEST, e.to_string()),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

pub fn router(state: Arc<AppState>, cors: bool) -> Router {
    let app = Router::new()
        .route("/health", get(health))
        .route("/predict", post(predict))
        .with_state(state);
    if cors {
        app.layer(CorsLayer::permissive())
    } else {
        app
    }
}

fn mtime(path: &PathBuf) -> Option<SystemTime> {
    std::fs::metadata(path).and_then(|m| m.modified()).ok()
}

async fn watch_model(state: Arc<AppState>, path: PathBuf, every: Duration) {
    let mut seen = mtime(&path);
    let mut tick = tokio::time::interval(every);
    tick.tick().await;
    loop {
        tick.tick().await;
        let now = mtime(&path);
        if now.is_none() || now == seen {
            continue;
        }
        let p = path.clone();
        match tokio::task::spawn_blocking(move || TrainedModel::load(p)).await {
            Ok(Ok(model)) => {
                state.replace_model(model);
                seen = now;
                log::info!("reloaded model from {}", path.display());
            }
            Ok(Err(e)) => log::warn!("model reload failed, keeping previous model: {e}"),
            Err(e) => log::warn!("model reload task failed: {e}"),
        }
    }
}

/// Loads the model and serves until the process is interrupted.
pub async fn serve(cfg: ServeConfig) -> revhelper::Result<()> {
    let model = TrainedModel::load(&cfg.model_path)?;
    let listener = TcpListener::bind(cfg.addr).await?;
    serve_on(listener, model, cfg).await
}

/// As [`serve`], on an already bound listener with a loaded model.
pub async fn serve_on(listener: TcpListener, model: TrainedModel, cfg: ServeConfig) -> revhelper::Result<()> {
    let state = Arc::new(AppState::new(model, cfg.resolved_id(), cfg.lexicons.clone()));
    if let Some(every) = cfg.reload_interval {
        tokio::spawn(watch_model(state.clone(), cfg.model_path.clone(), every));
    }
    log::info!("serving model {} on {}", state.model_id, listener.local_addr()?);
    axum::serve(listener, router(state, cfg.cors))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
