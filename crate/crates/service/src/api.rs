//! HTTP interface over live sessions.
//!
//! | method | path | body | reply |
//! |---|---|---|---|
//! | GET | `/health` | | status, K, session count |
//! | GET | `/catalog` | | K and products with sentence counts |
//! | POST | `/sessions` | [`SessionConfig`] (optional) | 201, new session |
//! | GET | `/sessions/{id}/summary` | | pending or new [`SummaryView`] |
//! | POST | `/sessions/{id}/feedback` | `{summary_id, f}` | [`FeedbackView`] |
//! | GET | `/sessions/{id}/state` | | estimate, config and history |
//!
//! Errors are `{"error": code, "message": text}`.

use std::collections::HashMap;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use prefer_core::simplex::AspectVector;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::{Mutex, RwLock};
use tower_http::cors::CorsLayer;

use crate::session::{
    Engine, FeedbackView, HistoryEntry, ServiceError, Session, SessionConfig, SummaryView,
};
use crate::store::{Event, Store};

type Shared = Arc<Mutex<Session>>;

pub struct AppState {
    engine: Arc<Engine>,
    store: Option<Store>,
    sessions: RwLock<HashMap<String, Shared>>,
}

impl AppState {
    /// In-memory state; sessions are lost on exit.
    pub fn new(engine: Engine) -> Self {
        Self {
            engine: Arc::new(engine),
            store: None,
            sessions: RwLock::new(HashMap::new()),
        }
    }

    /// State backed by `store`, with every logged session replayed.
    pub fn with_store(engine: Engine, store: Store) -> Result<Self, ServiceError> {
        let sessions = store
            .load_all(&engine)?
            .into_iter()
            .map(|s| (s.session_id.clone(), Arc::new(Mutex::new(s))))
            .collect();
        Ok(Self {
            engine: Arc::new(engine),
            store: Some(store),
            sessions: RwLock::new(sessions),
        })
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    async fn session(&self, id: &str) -> Result<Shared, ApiError> {
        self.sessions
            .read()
            .await
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownSession(id.to_string()).into())
    }

    fn log(&self, session_id: &str, event: &Event) -> Result<(), ServiceError> {
        match &self.store {
            Some(store) => store.append(session_id, event),
            None => Ok(()),
        }
    }
}

#[derive(Debug)]
pub enum ApiError {
    Service(ServiceError),
    BadRequest(String),
    Internal(String),
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        Self::Service(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, code, message) = match self {
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, "bad_request", m),
            ApiError::Internal(m) => (StatusCode::INTERNAL_SERVER_ERROR, "internal", m),
            ApiError::Service(e) => {
                let (status, code) = match &e {
                    ServiceError::UnknownSession(_) => (StatusCode::NOT_FOUND, "unknown_session"),
                    ServiceError::UnknownProduct(_) => (StatusCode::BAD_REQUEST, "unknown_product"),
                    ServiceError::BadConfig(_) => (StatusCode::BAD_REQUEST, "bad_config"),
                    ServiceError::Conflict(_) => (StatusCode::CONFLICT, "conflict"),
                    ServiceError::FeedbackOutOfRange(_) => (StatusCode::UNPROCESSABLE_ENTITY, "validation"),
                    ServiceError::CorruptLog { .. } | ServiceError::Store(_) | ServiceError::Simulation(_) => {
                        (StatusCode::INTERNAL_SERVER_ERROR, "internal")
                    }
                };
                (status, code, e.to_string())
            }
        };
        (status, Json(json!({ "error": code, "message": message }))).into_response()
    }
}

fn parse<T: DeserializeOwned + Default>(body: &Bytes) -> Result<T, ApiError> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    serde_json::from_slice(body).map_err(|e| ApiError::BadRequest(format!("invalid JSON body: {e}")))
}

async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    F: FnOnce() -> Result<T, ApiError> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::Internal(format!("worker failed: {e}")))?
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductInfo {
    pub product_id: String,
    pub sentences: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogView {
    pub k: usize,
    pub products: Vec<ProductInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreatedView {
    pub session_id: String,
    pub k: usize,
    pub products: Vec<String>,
    pub round: u64,
    pub w_hat: AspectVector,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeedbackRequest {
    pub summary_id: String,
    pub f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateView {
    pub session_id: String,
    pub k: usize,
    pub round: u64,
    pub w_hat: AspectVector,
    pub baseline: f64,
    /// Step size the next rating will use.
    pub eta: f64,
    pub products: Vec<String>,
    pub config: SessionConfig,
    pub pending_summary_id: Option<String>,
    pub history: Vec<HistoryEntry>,
    pub created_at: u64,
}

impl StateView {
    fn of(s: &Session) -> Self {
        Self {
            session_id: s.session_id.clone(),
            k: s.preference.k(),
            round: s.round(),
            w_hat: s.preference.w_hat.clone(),
            baseline: s.preference.baseline,
            eta: s.preference.eta(),
            products: s.products.clone(),
            config: s.config.clone(),
            pending_summary_id: s.pending.as_ref().map(|p| p.summary_id.clone()),
            history: s.history.clone(),
            created_at: s.created_at,
        }
    }
}

async fn health(State(app): State<Arc<AppState>>) -> Json<serde_json::Value> {
    let sessions = app.sessions.read().await.len();
    Json(json!({ "status": "ok", "k": app.engine.k(), "sessions": sessions }))
}

async fn catalog(State(app): State<Arc<AppState>>) -> Json<CatalogView> {
    let products = app
        .engine
        .products()
        .into_iter()
        .map(|(product_id, sentences)| ProductInfo { product_id, sentences })
        .collect();
    Json(CatalogView {
        k: app.engine.k(),
        products,
    })
}

async fn create_session(State(app): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let config: SessionConfig = parse(&body)?;
    let id = uuid::Uuid::new_v4().simple().to_string();
    let session = app.engine.create(id.clone(), config, now())?;
    app.log(
        &id,
        &Event::Created {
            session_id: id.clone(),
            config: session.config.clone(),
            products: session.products.clone(),
            k: app.engine.k(),
            created_at: session.created_at,
        },
    )?;
    let view = CreatedView {
        session_id: id.clone(),
        k: app.engine.k(),
        products: session.products.clone(),
        round: session.round(),
        w_hat: session.preference.w_hat.clone(),
    };
    app.sessions.write().await.insert(id, Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(view)).into_response())
}

async fn summary(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<SummaryView>, ApiError> {
    let mut guard = app.session(&id).await?.lock_owned().await;
    let state = app.clone();
    let view = blocking(move || {
        let (view, fresh) = state.engine.next_summary(&guard)?;
        if fresh {
            state.log(
                &guard.session_id,
                &Event::SummaryIssued {
                    summary: view.clone(),
                },
            )?;
            state.engine.issue(&mut guard, view.clone())?;
        }
        Ok(view)
    })
    .await?;
    Ok(Json(view))
}

async fn feedback(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<FeedbackView>, ApiError> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Err(ApiError::BadRequest("missing JSON body".into()));
    }
    let req: FeedbackRequest = parse(&body)?;
    let mut guard = app.session(&id).await?.lock_owned().await;
    let state = app.clone();
    let out = blocking(move || {
        let mut next = guard.clone();
        let out = state.engine.submit(&mut next, &req.summary_id, req.f)?;
        state.log(
            &next.session_id,
            &Event::FeedbackApplied {
                summary_id: req.summary_id,
                f: req.f,
                w_hat: out.w_hat.clone(),
            },
        )?;
        *guard = next;
        Ok(out)
    })
    .await?;
    Ok(Json(out))
}

async fn state(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<StateView>, ApiError> {
    let shared = app.session(&id).await?;
    let guard = shared.lock().await;
    Ok(Json(StateView::of(&guard)))
}

pub fn router(app: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/catalog", get(catalog))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/summary", get(summary))
        .route("/sessions/{id}/feedback", post(feedback))
        .route("/sessions/{id}/state", get(state))
        .layer(CorsLayer::permissive())
        .with_state(app)
}

/// Serves until the listener fails or `shutdown` resolves.
pub async fn serve<F>(listener: tokio::net::TcpListener, app: Arc<AppState>, shutdown: F) -> std::io::Result<()>
where
    F: std::future::Future<Output = ()> + Send + 'static,
{
    axum::serve(listener, router(app)).with_graceful_shutdown(shutdown).await
}
