//! HTTP API for the tuning console.
//!
//! Configurations are addressed by hash: the server's own configuration and
//! every configuration posted to `/api/annotate` are remembered, so a later
//! `GET /api/utterance/{id}?config=<hash>` reproduces the same payload.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use prosody_core::api::{utterance_payload, UtterancePayload, UtteranceSummary};
use prosody_core::corpus::CorpusIndex;
use prosody_core::Config;
use serde::{Deserialize, Serialize};

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    index: CorpusIndex,
    config: Config,
    known: Mutex<HashMap<String, Config>>,
}

impl AppState {
    pub fn new(index: CorpusIndex, config: Config) -> Self {
        let known = HashMap::from([(config.hash(), config.clone())]);
        Self {
            inner: Arc::new(Inner {
                index,
                config,
                known: Mutex::new(known),
            }),
        }
    }

    fn remember(&self, config: &Config) -> String {
        let hash = config.hash();
        self.inner
            .known
            .lock()
            .expect("config cache poisoned")
            .entry(hash.clone())
            .or_insert_with(|| config.clone());
        hash
    }

    /// A known hash, or an inline JSON object laid over the server defaults.
    fn lookup(&self, spec: &str) -> Result<Config, ApiError> {
        if let Some(c) = self.inner.known.lock().expect("config cache poisoned").get(spec) {
            return Ok(c.clone());
        }
        let value: serde_json::Value = serde_json::from_str(spec)
            .map_err(|_| ApiError::bad_request(format!("unknown config hash or invalid JSON: {spec}")))?;
        self.overlay(value)
    }

    fn overlay(&self, value: serde_json::Value) -> Result<Config, ApiError> {
        let mut base = serde_json::to_value(&self.inner.config).expect("config serializes");
        merge(&mut base, value);
        let cfg: Config = serde_json::from_value(base).map_err(|e| ApiError::bad_request(e.to_string()))?;
        cfg.validate().map_err(|e| ApiError::bad_request(e.to_string()))?;
        self.remember(&cfg);
        Ok(cfg)
    }
}

fn merge(base: &mut serde_json::Value, patch: serde_json::Value) {
    match (base, patch) {
        (serde_json::Value::Object(b), serde_json::Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn bad_request(message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            message: message.into(),
        }
    }

    fn not_found(id: &str) -> Self {
        Self {
            status: StatusCode::NOT_FOUND,
            message: format!("unknown utterance {id}"),
        }
    }

    fn unprocessable(e: impl std::fmt::Display) -> Self {
        Self {
            status: StatusCode::UNPROCESSABLE_ENTITY,
            message: e.to_string(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(serde_json::json!({ "error": self.message }))).into_response()
    }
}

async fn list_utterances(State(state): State<AppState>) -> Json<Vec<UtteranceSummary>> {
    let summaries = tokio::task::spawn_blocking(move || {
        state
            .inner
            .index
            .entries()
            .iter()
            .filter_map(|e| {
                let load = || -> prosody_core::Result<_> {
                    Ok(UtteranceSummary::new(&e.id, &e.load_alignment()?, &e.load_audio()?))
                };
                load().map_err(|err| log::warn!("{}: {err}", e.id)).ok()
            })
            .collect()
    })
    .await
    .unwrap_or_default();
    Json(summaries)
}

async fn payload(state: AppState, id: String, config: Config) -> Result<Json<UtterancePayload>, ApiError> {
    let entry = state.inner.index.get(&id).ok_or_else(|| ApiError::not_found(&id))?.clone();
    tokio::task::spawn_blocking(move || {
        let audio = entry.load_audio()?;
        let alignment = entry.load_alignment()?;
        utterance_payload(&id, &audio, &alignment, &config)
    })
    .await
    .map_err(ApiError::unprocessable)?
    .map(Json)
    .map_err(ApiError::unprocessable)
}

#[derive(Debug, Deserialize)]
struct ConfigQuery {
    config: Option<String>,
}

async fn get_utterance(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<ConfigQuery>,
) -> Result<Json<UtterancePayload>, ApiError> {
    let config = match q.config.as_deref() {
        Some(spec) => state.lookup(spec)?,
        None => state.inner.config.clone(),
    };
    payload(state, id, config).await
}

/// Body of `POST /api/annotate`; `config` is a partial configuration laid
/// over the server defaults.
#[derive(Debug, Serialize, Deserialize)]
pub struct AnnotateRequest {
    pub id: String,
    #[serde(default)]
    pub config: serde_json::Value,
}

async fn annotate(
    State(state): State<AppState>,
    Json(req): Json<AnnotateRequest>,
) -> Result<Json<UtterancePayload>, ApiError> {
    let patch = match req.config {
        serde_json::Value::Null => serde_json::json!({}),
        v => v,
    };
    let config = state.overlay(patch)?;
    payload(state, req.id, config).await
}

async fn audio(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let path = state.inner.index.get(&id).ok_or_else(|| ApiError::not_found(&id))?.audio.clone();
    let bytes = tokio::task::spawn_blocking(move || std::fs::read(&path).map_err(|e| format!("{}: {e}", path.display())))
        .await
        .map_err(ApiError::unprocessable)?
        .map_err(ApiError::unprocessable)?;
    Ok(([(header::CONTENT_TYPE, "audio/wav")], bytes).into_response())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ConfigResponse {
    pub hash: String,
    pub config: Config,
}

async fn config(State(state): State<AppState>) -> Json<ConfigResponse> {
    Json(ConfigResponse {
        hash: state.inner.config.hash(),
        config: state.inner.config.clone(),
    })
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/utterances", get(list_utterances))
        .route("/api/utterance/{id}", get(get_utterance))
        .route("/api/annotate", post(annotate))
        .route("/api/audio/{id}", get(audio))
        .route("/api/config", get(config))
        .with_state(state)
}

pub async fn serve(state: AppState, addr: SocketAddr) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state)).await?;
    Ok(())
}
