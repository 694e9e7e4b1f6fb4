//! HTTP surface of the FAQ bot.
//!
//! Endpoints:
//!
//! * `GET /webhook`: verification handshake; echoes `hub.challenge` when
//!   `hub.mode=subscribe` and `hub.verify_token` matches.
//! * `POST /webhook`: Messenger-style event envelopes, one dialogue turn
//!   per text message, replies go to an [`OutboundSink`].
//! * `POST /chat`: `{user_id, message}` → reply with debug fields.
//! * `GET /health`: model fingerprint, catalog stats and uptime.
//!
//! The model and catalog are read-only after startup. Per-user context lives
//! in a [`ContextStore`].

mod config;
mod sink;
mod store;

use std::collections::HashMap;
use std::future::Future;
use std::sync::Arc;
use std::time::Instant;

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use faqbot_core::artifact::ModelArtifact;
use faqbot_core::dialogue::{Bot, BotReply};
use faqbot_core::intents::{catalog_stats, load_catalog};
use faqbot_core::text::PreprocessConfig;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

pub use config::{
    ServiceConfig, ENV_ARTIFACT, ENV_BIND, ENV_CATALOG, ENV_RULES_DIR, ENV_SNAPSHOT,
    ENV_VERIFY_TOKEN,
};
pub use sink::{LogSink, OutboundSink, RecordingSink};
pub use store::ContextStore;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("cannot load bot: {0}")]
    Startup(#[from] faqbot_core::Error),
    #[error("context snapshot error: {0}")]
    Snapshot(String),
    #[error("server error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub user_id: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub reply: String,
    pub intent: Option<String>,
    pub confidence: f64,
    pub context: Option<String>,
    pub fallback: bool,
}

impl From<BotReply> for ChatResponse {
    fn from(r: BotReply) -> Self {
        Self {
            reply: r.text,
            intent: r.intent_tag,
            confidence: r.confidence,
            context: r.context_after,
            fallback: r.fallback,
        }
    }
}

#[derive(Clone)]
pub struct AppState {
    bot: Option<Arc<Bot>>,
    store: Arc<ContextStore>,
    verify_token: Arc<str>,
    sink: Arc<dyn OutboundSink>,
    local_mode: bool,
    started: Instant,
}

impl AppState {
    pub fn new(bot: Option<Bot>, store: ContextStore, verify_token: impl Into<String>) -> Self {
        Self {
            bot: bot.map(Arc::new),
            store: Arc::new(store),
            verify_token: verify_token.into().into(),
            sink: Arc::new(LogSink),
            local_mode: true,
            started: Instant::now(),
        }
    }

    pub fn with_sink(mut self, sink: Arc<dyn OutboundSink>) -> Self {
        self.sink = sink;
        self
    }

    pub fn with_local_mode(mut self, local: bool) -> Self {
        self.local_mode = local;
        self
    }

    pub fn store(&self) -> &Arc<ContextStore> {
        &self.store
    }

    /// Loads rules, catalog and artifact named by `config`. Fails before
    /// anything is bound.
    pub fn from_config(config: &ServiceConfig) -> Result<Self, ServiceError> {
        config.validate()?;
        let rules = match &config.rules_dir {
            Some(dir) => PreprocessConfig::from_dir(dir).map_err(faqbot_core::Error::from)?,
            None => PreprocessConfig::default_rules(),
        };
        let catalog = load_catalog(&config.catalog).map_err(faqbot_core::Error::from)?;
        let artifact =
            ModelArtifact::load(&config.artifact, &rules).map_err(faqbot_core::Error::from)?;
        let bot = Bot::new(artifact, catalog, rules, config.dialogue.clone())
            .map_err(faqbot_core::Error::from)?;
        let store = match &config.snapshot {
            Some(path) => ContextStore::with_snapshot(path)?,
            None => ContextStore::new(),
        };
        Ok(Self::new(Some(bot), store, config.verify_token.clone())
            .with_local_mode(config.local_mode))
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/webhook", get(handle_verify).post(handle_webhook_event))
        .route("/chat", post(handle_chat))
        .route("/health", get(handle_health))
        .with_state(state)
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(json!({ "error": message.into() }))).into_response()
}

async fn handle_verify(
    State(state): State<AppState>,
    Query(params): Query<HashMap<String, String>>,
) -> Response {
    let (Some(mode), Some(token), Some(challenge)) = (
        params.get("hub.mode"),
        params.get("hub.verify_token"),
        params.get("hub.challenge"),
    ) else {
        return error(
            StatusCode::BAD_REQUEST,
            "hub.mode, hub.verify_token and hub.challenge are required",
        );
    };
    if mode != "subscribe" || token.as_str() != &*state.verify_token {
        return error(StatusCode::FORBIDDEN, "verification failed");
    }
    (
        StatusCode::OK,
        [(header::CONTENT_TYPE, "text/plain; charset=utf-8")],
        challenge.clone(),
    )
        .into_response()
}

async fn handle_chat(State(state): State<AppState>, body: Bytes) -> Response {
    let Some(bot) = state.bot.clone() else {
        return error(StatusCode::SERVICE_UNAVAILABLE, "model not loaded");
    };
    let request: ChatRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => {
            return error(
                StatusCode::BAD_REQUEST,
                format!("malformed chat request: {e}"),
            )
        }
    };
    if request.user_id.is_empty() {
        return error(StatusCode::BAD_REQUEST, "user_id must not be empty");
    }
    let reply = state
        .store
        .turn(&request.user_id, |ctx| bot.respond(ctx, &request.message))
        .await;
    Json(ChatResponse::from(reply)).into_response()
}

/// One item of `entry[].messaging[]` worth a dialogue turn.
struct Incoming {
    sender: String,
    text: Option<String>,
}

fn parse_envelope(body: &Value) -> Vec<Incoming> {
    let items = body["entry"]
        .as_array()
        .into_iter()
        .flatten()
        .flat_map(|entry| entry["messaging"].as_array().into_iter().flatten());
    items
        .filter_map(|item| {
            let sender = item["sender"]["id"].as_str()?;
            // delivery receipts, reads and echoes carry no message to answer
            let message = item.get("message")?;
            if message["is_echo"].as_bool() == Some(true) {
                return None;
            }
            Some(Incoming {
                sender: sender.to_string(),
                text: message["text"].as_str().map(str::to_string),
            })
        })
        .collect()
}

async fn handle_webhook_event(State(state): State<AppState>, body: Bytes) -> Response {
    let envelope: Value = match serde_json::from_slice(&body) {
        Ok(v) => v,
        Err(e) => return error(StatusCode::BAD_REQUEST, format!("malformed event: {e}")),
    };
    if envelope["object"] != "page" {
        return error(StatusCode::NOT_FOUND, "unsupported object");
    }
    let Some(bot) = state.bot.clone() else {
        return error(StatusCode::SERVICE_UNAVAILABLE, "model not loaded");
    };
    let mut replies = Vec::new();
    for item in parse_envelope(&envelope) {
        let reply = state
            .store
            .turn(&item.sender, |ctx| match &item.text {
                Some(text) => bot.respond(ctx, text),
                None => bot.respond_non_text(ctx),
            })
            .await;
        state.sink.deliver(&item.sender, &reply);
        replies.push(json!({ "recipient": item.sender, "reply": ChatResponse::from(reply) }));
    }
    if state.local_mode {
        Json(json!({ "status": "EVENT_RECEIVED", "replies": replies })).into_response()
    } else {
        (StatusCode::OK, "EVENT_RECEIVED").into_response()
    }
}

async fn handle_health(State(state): State<AppState>) -> Response {
    let uptime = state.started.elapsed().as_secs_f64();
    let Some(bot) = &state.bot else {
        return Json(json!({ "status": "no_model", "uptime_seconds": uptime })).into_response();
    };
    let stats = catalog_stats(bot.catalog());
    Json(json!({
        "status": "ok",
        "model_fingerprint": bot.artifact().preprocess_fingerprint,
        "classifier": bot.artifact().kind(),
        "catalog": {
            "source": bot.catalog().source_path,
            "tags": stats.tags,
            "patterns": stats.patterns,
            "responses": stats.responses,
        },
        "users": state.store.len(),
        "uptime_seconds": uptime,
    }))
    .into_response()
}

/// Serves `state` on `listener` until `shutdown` resolves, then flushes
/// the context snapshot.
pub async fn serve_with(
    listener: tokio::net::TcpListener,
    state: AppState,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> Result<(), ServiceError> {
    let store = state.store.clone();
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await?;
    store.flush()?;
    log::info!("shut down cleanly");
    Ok(())
}

/// Loads everything from `config`, binds, and serves until SIGINT/SIGTERM.
pub async fn serve(config: ServiceConfig) -> Result<(), ServiceError> {
    let state = AppState::from_config(&config)?;
    let listener = tokio::net::TcpListener::bind(&config.bind).await?;
    serve_with(listener, state, shutdown_signal()).await
}

pub async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let terminate = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let terminate = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = terminate => {},
    }
}
