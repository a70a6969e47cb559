//! REST API over [`Service`].
//!
//! | method | path                      | body              | response          |
//! |--------|---------------------------|-------------------|-------------------|
//! | POST   | `/sessions`               | create document   | session snapshot  |
//! | GET    | `/sessions/{id}`          |                   | session snapshot  |
//! | POST   | `/sessions/{id}/evaluate` | evaluate request  | evaluation result |
//! | POST   | `/sessions/{id}/commit`   | commit request    | program step      |
//! | POST   | `/sessions/{id}/run`      | scenario          | run result        |
//! | GET    | `/sessions/{id}/reports`  |                   | session reports   |
//!
//! Errors are `{code, message, detail}`. A POST carrying an
//! `Idempotency-Key` header is executed once; repeats with the same key and
//! body get the stored response. Commands on one session are serialised.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::de::DeserializeOwned;
use serde::Serialize;
use sensecov::ErrorClass;

use crate::{Service, ServiceError};

pub const IDEMPOTENCY_KEY: &str = "idempotency-key";

#[derive(Clone)]
struct Stored {
    body: Bytes,
    status: StatusCode,
    response: Bytes,
}

struct AppState {
    service: Service,
    sessions: Mutex<HashMap<String, Arc<tokio::sync::Mutex<()>>>>,
    replies: Mutex<HashMap<(String, String), Stored>>,
}

impl AppState {
    fn lock_for(&self, id: &str) -> Arc<tokio::sync::Mutex<()>> {
        self.sessions.lock().expect("lock table").entry(id.to_string()).or_default().clone()
    }
}

fn status_of(e: &ServiceError) -> StatusCode {
    match e {
        ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
        ServiceError::Exists(_) => StatusCode::CONFLICT,
        ServiceError::KeyReused => StatusCode::UNPROCESSABLE_ENTITY,
        ServiceError::Core(_) => match e.class() {
            ErrorClass::Validation => StatusCode::BAD_REQUEST,
            ErrorClass::Infeasible => StatusCode::CONFLICT,
            ErrorClass::Runtime => StatusCode::INTERNAL_SERVER_ERROR,
        },
    }
}

fn json_response(status: StatusCode, body: Bytes) -> Response {
    let mut r = (status, body).into_response();
    r.headers_mut()
        .insert(header::CONTENT_TYPE, HeaderValue::from_static("application/json"));
    r
}

fn encode<T: Serialize>(ok: StatusCode, result: Result<T, ServiceError>) -> (StatusCode, Bytes) {
    match result.and_then(|v| Ok(serde_json::to_vec_pretty(&v)?)) {
        Ok(body) => (ok, Bytes::from(body)),
        Err(e) => {
            if e.class() == ErrorClass::Runtime {
                log::error!("{e}");
            }
            let doc = serde_json::to_vec_pretty(&e.to_document()).expect("error document serialises");
            (status_of(&e), Bytes::from(doc))
        }
    }
}

fn parse<T: DeserializeOwned>(body: &[u8]) -> Result<T, ServiceError> {
    Ok(serde_json::from_slice(body)?)
}

/// Runs a command under the session's lock, replaying the stored response
/// for a repeated idempotency key.
async fn command<T, F>(st: Arc<AppState>, lock: String, scope: String, headers: HeaderMap, body: Bytes, ok: StatusCode, f: F) -> Response
where
    T: Serialize + Send + 'static,
    F: FnOnce(&Service, &[u8]) -> Result<T, ServiceError> + Send + 'static,
{
    let key = headers
        .get(IDEMPOTENCY_KEY)
        .and_then(|v| v.to_str().ok())
        .map(|k| (scope, k.to_string()));
    let replay = |st: &AppState| -> Option<Response> {
        let key = key.as_ref()?;
        let stored = st.replies.lock().expect("reply table").get(key).cloned()?;
        Some(if stored.body == body {
            json_response(stored.status, stored.response)
        } else {
            let (s, b) = encode::<()>(ok, Err(ServiceError::KeyReused));
            json_response(s, b)
        })
    };
    if let Some(r) = replay(&st) {
        return r;
    }
    let guard = st.lock_for(&lock);
    let _held = guard.lock().await;
    if let Some(r) = replay(&st) {
        return r;
    }
    let service = st.service.clone();
    let input = body.clone();
    let result = tokio::task::spawn_blocking(move || f(&service, &input))
        .await
        .unwrap_or_else(|e| Err(ServiceError::Core(sensecov::Error::Session(format!("command failed: {e}")))));
    let (status, response) = encode(ok, result);
    if let Some(key) = key {
        st.replies.lock().expect("reply table").insert(
            key,
            Stored {
                body,
                status,
                response: response.clone(),
            },
        );
    }
    json_response(status, response)
}

async fn query<T, F>(st: Arc<AppState>, f: F) -> Response
where
    T: Serialize + Send + 'static,
    F: FnOnce(&Service) -> Result<T, ServiceError> + Send + 'static,
{
    let service = st.service.clone();
    let result = tokio::task::spawn_blocking(move || f(&service))
        .await
        .unwrap_or_else(|e| Err(ServiceError::Core(sensecov::Error::Session(format!("query failed: {e}")))));
    let (status, body) = encode(StatusCode::OK, result);
    json_response(status, body)
}

async fn create(State(st): State<Arc<AppState>>, headers: HeaderMap, body: Bytes) -> Response {
    command(st, String::new(), "/sessions".into(), headers, body, StatusCode::CREATED, |svc, b| {
        svc.create(parse(b)?)
    })
    .await
}

async fn show(State(st): State<Arc<AppState>>, Path(id): Path<String>) -> Response {
    query(st, move |svc| svc.snapshot(&id)).await
}

async fn reports(State(st): State<Arc<AppState>>, Path(id): Path<String>) -> Response {
    query(st, move |svc| svc.reports(&id)).await
}

async fn evaluate(State(st): State<Arc<AppState>>, Path(id): Path<String>, headers: HeaderMap, body: Bytes) -> Response {
    let scope = format!("/sessions/{id}/evaluate");
    command(st, id.clone(), scope, headers, body, StatusCode::OK, move |svc, b| {
        svc.evaluate(&id, parse(b)?)
    })
    .await
}

async fn commit(State(st): State<Arc<AppState>>, Path(id): Path<String>, headers: HeaderMap, body: Bytes) -> Response {
    let scope = format!("/sessions/{id}/commit");
    command(st, id.clone(), scope, headers, body, StatusCode::OK, move |svc, b| {
        svc.commit(&id, parse(b)?)
    })
    .await
}

async fn run(State(st): State<Arc<AppState>>, Path(id): Path<String>, headers: HeaderMap, body: Bytes) -> Response {
    let scope = format!("/sessions/{id}/run");
    command(st, id.clone(), scope, headers, body, StatusCode::OK, move |svc, b| {
        let scenario = if b.iter().all(u8::is_ascii_whitespace) {
            Default::default()
        } else {
            parse(b)?
        };
        svc.run(&id, scenario)
    })
    .await
}

async fn fallback() -> Response {
    let doc = serde_json::json!({
        "code": "not_found",
        "message": "no such endpoint",
        "detail": { "class": "validation" },
    });
    json_response(StatusCode::NOT_FOUND, Bytes::from(doc.to_string()))
}

pub fn router(service: Service) -> Router {
    let state = Arc::new(AppState {
        service,
        sessions: Mutex::default(),
        replies: Mutex::default(),
    });
    Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(show))
        .route("/sessions/{id}/evaluate", post(evaluate))
        .route("/sessions/{id}/commit", post(commit))
        .route("/sessions/{id}/run", post(run))
        .route("/sessions/{id}/reports", get(reports))
        .fallback(fallback)
        .with_state(state)
}

pub async fn serve(service: Service, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(service))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
