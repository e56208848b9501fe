//! JSON-over-HTTP access to elicitation sessions and order corpora.
//!
//! | method | path | purpose |
//! |---|---|---|
//! | POST | `/v1/sessions` | create a session |
//! | GET | `/v1/sessions/{id}/next-pair` | suggested question |
//! | POST | `/v1/sessions/{id}/answers` | submit an answer |
//! | GET | `/v1/sessions/{id}` | current system, Hasse edges, status |
//! | POST | `/v1/corpora` | store or generate a corpus |
//! | GET | `/v1/corpora/{id}` | fetch a corpus |

pub mod store;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};
use std::time::Instant;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use prefsys_core::decision::DecisionProblem;
use prefsys_core::engine::{Answer, Engine, Guidance, NextPair, Procedure, SessionConfig, SessionStatus, SessionView};
use prefsys_core::guided::{sample_corpus, MallowsModel, OrderCorpus};
use prefsys_core::label::{Label, LabelAnswer};
use prefsys_core::relation::Pair;
use prefsys_core::time::{TimeAnswer, Verdict};
use prefsys_core::Error as CoreError;
use serde::{Deserialize, Serialize};
use serde_json::json;

pub use store::{CorpusRecord, LogEntry, Provenance, Store};

pub const DEFAULT_BIND_ADDR: &str = "127.0.0.1:8080";
pub const DEFAULT_DATA_DIR: &str = "data";
const MAX_GENERATED_CORPUS: usize = 100_000;

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error("{message}")]
    Invalid {
        message: String,
        field: Option<String>,
    },
    #[error("{0} not found")]
    NotFound(String),
    #[error("{0}")]
    KindMismatch(String),
    #[error("{0}")]
    StalePair(String),
    #[error("{0}")]
    Terminal(String),
    #[error("storage failure: {0}")]
    Storage(#[from] std::io::Error),
    #[error("{0}")]
    Internal(String),
}

impl ApiError {
    fn invalid(field: Option<&str>, message: impl ToString) -> Self {
        ApiError::Invalid {
            message: message.to_string(),
            field: field.map(str::to_string),
        }
    }

    fn parts(&self) -> (StatusCode, &'static str) {
        match self {
            ApiError::Invalid { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_request"),
            ApiError::NotFound(_) => (StatusCode::NOT_FOUND, "not_found"),
            ApiError::KindMismatch(_) => (StatusCode::BAD_REQUEST, "kind_mismatch"),
            ApiError::StalePair(_) => (StatusCode::CONFLICT, "stale_pair"),
            ApiError::Terminal(_) => (StatusCode::CONFLICT, "terminal_status"),
            ApiError::Storage(_) | ApiError::Internal(_) => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        }
    }
}

impl From<CoreError> for ApiError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::KindMismatch { .. } => ApiError::KindMismatch(e.to_string()),
            CoreError::PairNotActive(_) | CoreError::PairAlreadyDecided(_) => ApiError::StalePair(e.to_string()),
            CoreError::SessionClosed(_) | CoreError::NoUndecidedPairs | CoreError::AlreadyTerminated => {
                ApiError::Terminal(e.to_string())
            }
            CoreError::Lp(_) => ApiError::Internal(e.to_string()),
            other => ApiError::invalid(None, other),
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::invalid(None, e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, code) = self.parts();
        let mut body = json!({ "error": code, "message": self.to_string() });
        if let ApiError::Invalid { field: Some(f), .. } = &self {
            body["field"] = json!(f);
        }
        (status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

struct Session {
    engine: Mutex<Engine>,
    /// Last committed projection, so that reads never wait for a write.
    view: RwLock<serde_json::Value>,
    served_at: Mutex<Option<Instant>>,
}

pub struct AppState {
    store: Store,
    sessions: RwLock<HashMap<String, Arc<Session>>>,
}

impl AppState {
    pub fn new(store: Store) -> Self {
        Self {
            store,
            sessions: RwLock::new(HashMap::new()),
        }
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    /// Session by id, rebuilt from its log on first access.
    fn session(&self, id: &str) -> ApiResult<Arc<Session>> {
        check_id(id)?;
        if let Some(s) = self.sessions.read().expect("session map poisoned").get(id) {
            return Ok(s.clone());
        }
        let engine = self.replay(id)?;
        let view = render_view(id, &engine)?;
        let session = Arc::new(Session {
            engine: Mutex::new(engine),
            view: RwLock::new(view),
            served_at: Mutex::new(None),
        });
        let mut map = self.sessions.write().expect("session map poisoned");
        Ok(map.entry(id.to_string()).or_insert(session).clone())
    }

    fn replay(&self, id: &str) -> ApiResult<Engine> {
        let entries = self
            .store
            .read_log(id)?
            .ok_or_else(|| ApiError::NotFound(format!("session {id}")))?;
        let mut iter = entries.into_iter();
        let config = match iter.next() {
            Some(LogEntry::Created { config, .. }) => config,
            _ => return Err(ApiError::Internal(format!("session {id} has a malformed log"))),
        };
        let answers: Vec<Answer> = iter
            .filter_map(|e| match e {
                LogEntry::Answer { answer, .. } => Some(answer),
                LogEntry::Created { .. } => None,
            })
            .collect();
        Ok(Engine::replay(config, &answers)?)
    }
}

fn check_id(id: &str) -> ApiResult<()> {
    if id.is_empty() || id.len() > 64 || !id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
        return Err(ApiError::NotFound(format!("id {id:?}")));
    }
    Ok(())
}

fn render_view(id: &str, engine: &Engine) -> ApiResult<serde_json::Value> {
    let view: SessionView = engine.view()?;
    let mut value = serde_json::to_value(view).map_err(|e| ApiError::Internal(e.to_string()))?;
    value["id"] = json!(id);
    value["kind"] = json!(engine.config().procedure.kind());
    if let (Some(problem), Some(chosen)) = (&engine.config().decision, engine.choice_set()) {
        let names: Vec<&str> = chosen.iter().map(|&k| problem.acts[k].name.as_str()).collect();
        value["chosen_acts"] = json!(names);
    }
    Ok(value)
}

/// Guidance as accepted over the wire: corpora may be given inline or by id.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(tag = "strategy", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GuidanceRequest {
    #[default]
    First,
    Scripted {
        pairs: Vec<Pair>,
    },
    Random {
        seed: u64,
    },
    Proportion {
        corpus_id: Option<String>,
        corpus: Option<OrderCorpus>,
    },
    Subgroup {
        corpus_id: Option<String>,
        corpus: Option<OrderCorpus>,
    },
}

fn default_check_every() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize)]
pub struct CreateSessionRequest {
    pub n: usize,
    pub procedure: Procedure,
    #[serde(default)]
    pub guidance: GuidanceRequest,
    #[serde(default)]
    pub decision: Option<DecisionProblem>,
    #[serde(default = "default_check_every")]
    pub check_every: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CreatedSession {
    pub id: String,
    pub kind: &'static str,
    pub status: SessionStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub next_pair: Option<NextPair>,
}

async fn create_session(
    State(app): State<Arc<AppState>>,
    body: Result<Json<CreateSessionRequest>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<CreatedSession>)> {
    let Json(req) = body?;
    let corpus = |id: Option<String>, inline: Option<OrderCorpus>| -> ApiResult<OrderCorpus> {
        match (id, inline) {
            (Some(id), None) => {
                check_id(&id).map_err(|_| ApiError::invalid(Some("guidance.corpus_id"), "malformed corpus id"))?;
                app.store
                    .load_corpus(&id)?
                    .map(|r| r.corpus)
                    .ok_or_else(|| ApiError::invalid(Some("guidance.corpus_id"), format!("unknown corpus {id}")))
            }
            (None, Some(c)) => Ok(c),
            _ => Err(ApiError::invalid(
                Some("guidance"),
                "give exactly one of corpus_id and corpus",
            )),
        }
    };
    let guidance = match req.guidance {
        GuidanceRequest::First => Guidance::First,
        GuidanceRequest::Scripted { pairs } => Guidance::Scripted { pairs },
        GuidanceRequest::Random { seed } => Guidance::Random { seed },
        GuidanceRequest::Proportion { corpus_id, corpus: c } => Guidance::Proportion {
            corpus: corpus(corpus_id, c)?,
        },
        GuidanceRequest::Subgroup { corpus_id, corpus: c } => Guidance::Subgroup {
            corpus: corpus(corpus_id, c)?,
        },
    };
    let config = SessionConfig {
        n: req.n,
        procedure: req.procedure,
        guidance,
        decision: req.decision,
        check_every: req.check_every,
    };
    config.diagnose().map_err(|(field, e)| ApiError::invalid(Some(field), e))?;
    let engine = Engine::new(config)?;
    let id = uuid::Uuid::new_v4().simple().to_string();
    app.store.create_session(&id, engine.config())?;
    app.store.write_snapshot(&id, &engine.snapshot())?;
    let created = CreatedSession {
        id: id.clone(),
        kind: engine.config().procedure.kind(),
        status: engine.status(),
        next_pair: engine.next_pair().ok(),
    };
    let session = Arc::new(Session {
        view: RwLock::new(render_view(&id, &engine)?),
        engine: Mutex::new(engine),
        served_at: Mutex::new(None),
    });
    app.sessions.write().expect("session map poisoned").insert(id.clone(), session);
    tracing::info!(session = %id, "created session");
    Ok((StatusCode::CREATED, Json(created)))
}

async fn next_pair(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<NextPair>> {
    let session = app.session(&id)?;
    let engine = session.engine.lock().expect("engine poisoned");
    let next = engine.next_pair()?;
    session.served_at.lock().expect("timer poisoned").get_or_insert_with(Instant::now);
    Ok(Json(next))
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AnswerRequest {
    Time {
        pair: Pair,
        verdict: Verdict,
        /// Milliseconds from rendering the pair to the answer, measured by
        /// the client. Only required for strict verdicts.
        #[serde(default)]
        elapsed_ms: Option<f64>,
    },
    Label {
        pair: Pair,
        label: Label,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct AnswerResponse {
    pub status: SessionStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub choice_set: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chosen_acts: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub next_pair: Option<NextPair>,
}

async fn submit_answer(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Result<Json<AnswerRequest>, JsonRejection>,
) -> ApiResult<Json<AnswerResponse>> {
    let Json(req) = body?;
    let session = app.session(&id)?;
    let mut engine = session.engine.lock().expect("engine poisoned");
    let (answer, client_elapsed_ms) = match req {
        AnswerRequest::Time {
            pair,
            verdict,
            elapsed_ms,
        } => {
            let strict = matches!(verdict, Verdict::IStrictlyPreferred | Verdict::JStrictlyPreferred);
            let ms = match (strict, elapsed_ms) {
                (true, None) => {
                    return Err(ApiError::invalid(Some("elapsed_ms"), "strict verdicts need elapsed_ms"))
                }
                (_, ms) => ms,
            };
            let seconds = ms.unwrap_or(0.0) / 1000.0;
            (Answer::Time(TimeAnswer::new(pair.0, pair.1, verdict, seconds)), ms)
        }
        AnswerRequest::Label { pair, label } => (Answer::Label(LabelAnswer::new(pair.0, pair.1, label)), None),
    };
    let server_elapsed_ms = session
        .served_at
        .lock()
        .expect("timer poisoned")
        .map(|t| t.elapsed().as_secs_f64() * 1000.0);
    let outcome = engine.submit(answer)?;
    let entry = LogEntry::Answer {
        seq: engine.answers().len(),
        answer,
        client_elapsed_ms,
        server_elapsed_ms,
    };
    if let Err(e) = app.store.append(&id, &entry) {
        // Not logged, so not applied: restore the state the log describes.
        *engine = app.replay(&id)?;
        return Err(e.into());
    }
    app.store.write_snapshot(&id, &engine.snapshot())?;
    *session.view.write().expect("view poisoned") = render_view(&id, &engine)?;
    *session.served_at.lock().expect("timer poisoned") = None;
    let chosen_acts = match (&engine.config().decision, &outcome.choice_set) {
        (Some(p), Some(c)) if outcome.status == SessionStatus::Decided => {
            Some(c.iter().map(|&k| p.acts[k].name.clone()).collect())
        }
        _ => None,
    };
    Ok(Json(AnswerResponse {
        status: outcome.status,
        choice_set: outcome.choice_set,
        chosen_acts,
        next_pair: engine.next_pair().ok(),
    }))
}

async fn get_session(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<serde_json::Value>> {
    let session = app.session(&id)?;
    let view = session.view.read().expect("view poisoned").clone();
    Ok(Json(view))
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum CorpusRequest {
    Generate { model: MallowsModel, count: usize, seed: u64 },
    Upload { corpus: OrderCorpus },
}

async fn create_corpus(
    State(app): State<Arc<AppState>>,
    body: Result<Json<CorpusRequest>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<CorpusRecord>)> {
    let Json(req) = body?;
    let (corpus, provenance) = match req {
        CorpusRequest::Generate { model, count, seed } => {
            if count == 0 || count > MAX_GENERATED_CORPUS {
                return Err(ApiError::invalid(
                    Some("count"),
                    format!("count must be in 1..={MAX_GENERATED_CORPUS}"),
                ));
            }
            model.validate().map_err(|e| ApiError::invalid(Some("model"), e))?;
            let corpus = sample_corpus(&model, count, seed).map_err(|e| ApiError::invalid(Some("model"), e))?;
            (corpus, Provenance::Model { model, seed })
        }
        CorpusRequest::Upload { corpus } => (corpus, Provenance::Human),
    };
    let record = CorpusRecord {
        id: uuid::Uuid::new_v4().simple().to_string(),
        corpus,
        provenance,
    };
    app.store.save_corpus(&record)?;
    Ok((StatusCode::CREATED, Json(record)))
}

async fn get_corpus(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<CorpusRecord>> {
    check_id(&id)?;
    app.store
        .load_corpus(&id)?
        .map(Json)
        .ok_or_else(|| ApiError::NotFound(format!("corpus {id}")))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/v1/sessions", post(create_session))
        .route("/v1/sessions/{id}", get(get_session))
        .route("/v1/sessions/{id}/next-pair", get(next_pair))
        .route("/v1/sessions/{id}/answers", post(submit_answer))
        .route("/v1/corpora", post(create_corpus))
        .route("/v1/corpora/{id}", get(get_corpus))
        .with_state(state)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceConfig {
    pub data_dir: PathBuf,
    pub bind_addr: SocketAddr,
}

impl ServiceConfig {
    /// Reads `PREF_DATA_DIR` and `PREF_BIND_ADDR`, falling back to
    /// `./data` and `127.0.0.1:8080`.
    pub fn from_env() -> Result<Self, String> {
        let data_dir = std::env::var("PREF_DATA_DIR").unwrap_or_else(|_| DEFAULT_DATA_DIR.into());
        let bind = std::env::var("PREF_BIND_ADDR").unwrap_or_else(|_| DEFAULT_BIND_ADDR.into());
        Ok(Self {
            data_dir: data_dir.into(),
            bind_addr: bind.parse().map_err(|e| format!("PREF_BIND_ADDR {bind:?}: {e}"))?,
        })
    }
}

/// Serves the API until interrupted.
pub async fn serve(config: ServiceConfig) -> std::io::Result<()> {
    let state = Arc::new(AppState::new(Store::open(&config.data_dir)?));
    let listener = tokio::net::TcpListener::bind(config.bind_addr).await?;
    tracing::info!(addr = %listener.local_addr()?, data = %config.data_dir.display(), "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
