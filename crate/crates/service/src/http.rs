//! HTTP+JSON routes over [`SessionService`].

use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post, put};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use crate::error::ServiceError;
use crate::service::{ClassInfo, CreateSession, SessionService};
use crate::session::{Gallery, Selection, SessionInfo, StrokeRequest};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectRequest {
    pub token: String,
    pub part_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViewRequest {
    pub direction: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub status: u16,
    pub error: String,
}

pub struct ApiError(pub ServiceError);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status =
            StatusCode::from_u16(self.0.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        if status.is_server_error() {
            log::error!("{}", self.0);
        }
        let body = ErrorBody {
            status: status.as_u16(),
            error: self.0.to_string(),
        };
        (status, Json(body)).into_response()
    }
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        ApiError(e)
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError(ServiceError::Invalid(e.body_text()))
    }
}

type ApiResult<T> = Result<T, ApiError>;
type Shared = Arc<SessionService>;

/// Runs session work off the async threads.
async fn blocking<R: Send + 'static>(
    svc: Shared,
    f: impl FnOnce(&SessionService) -> Result<R, ServiceError> + Send + 'static,
) -> ApiResult<R> {
    tokio::task::spawn_blocking(move || f(&svc))
        .await
        .map_err(|e| ApiError(ServiceError::Internal(e.to_string())))?
        .map_err(ApiError)
}

fn png(bytes: Vec<u8>) -> Response {
    ([(header::CONTENT_TYPE, "image/png")], bytes).into_response()
}

async fn classes(State(svc): State<Shared>) -> Json<Vec<ClassInfo>> {
    Json(svc.classes())
}

async fn create(
    State(svc): State<Shared>,
    body: Result<Json<CreateSession>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<SessionInfo>)> {
    let Json(req) = body?;
    let info = blocking(svc, move |s| s.create(&req)).await?;
    Ok((StatusCode::CREATED, Json(info)))
}

async fn info(State(svc): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<SessionInfo>> {
    Ok(Json(
        blocking(svc, move |s| s.with(&id, |sess, e| Ok(sess.info(e)))).await?,
    ))
}

async fn remove(State(svc): State<Shared>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    svc.delete(&id)?;
    Ok(StatusCode::NO_CONTENT)
}

async fn strokes(
    State(svc): State<Shared>,
    Path(id): Path<String>,
    body: Result<Json<StrokeRequest>, JsonRejection>,
) -> ApiResult<Json<Gallery>> {
    let Json(req) = body?;
    Ok(Json(
        blocking(svc, move |s| {
            s.with(&id, |sess, e| sess.submit_strokes(e, &req))
        })
        .await?,
    ))
}

async fn gallery(
    State(svc): State<Shared>,
    Path(id): Path<String>,
) -> ApiResult<Json<Option<Gallery>>> {
    Ok(Json(
        blocking(svc, move |s| {
            s.with(&id, |sess, _| Ok(sess.gallery().cloned()))
        })
        .await?,
    ))
}

async fn select(
    State(svc): State<Shared>,
    Path(id): Path<String>,
    body: Result<Json<SelectRequest>, JsonRejection>,
) -> ApiResult<Json<Selection>> {
    let Json(req) = body?;
    Ok(Json(
        blocking(svc, move |s| {
            s.with(&id, |sess, e| sess.select_part(e, &req.token, &req.part_id))
        })
        .await?,
    ))
}

async fn view(
    State(svc): State<Shared>,
    Path(id): Path<String>,
    body: Result<Json<ViewRequest>, JsonRejection>,
) -> ApiResult<Response> {
    let Json(req) = body?;
    Ok(png(blocking(svc, move |s| {
        s.with(&id, |sess, e| sess.set_view(e, req.direction))
    })
    .await?))
}

async fn shadow(State(svc): State<Shared>, Path(id): Path<String>) -> ApiResult<Response> {
    Ok(png(blocking(svc, move |s| {
        s.with(&id, |sess, e| Ok(sess.shadow_png(e)))
    })
    .await?))
}

async fn model(State(svc): State<Shared>, Path(id): Path<String>) -> ApiResult<Response> {
    let obj = blocking(svc, move |s| s.with(&id, |sess, _| sess.export_model())).await?;
    Ok(([(header::CONTENT_TYPE, "model/obj")], obj).into_response())
}

async fn thumb(
    State(svc): State<Shared>,
    Path((id, entry)): Path<(String, usize)>,
) -> ApiResult<Response> {
    Ok(png(blocking(svc, move |s| {
        s.with(&id, |sess, e| sess.thumbnail(e, entry))
    })
    .await?))
}

async fn remove_slot(
    State(svc): State<Shared>,
    Path((id, slot)): Path<(String, usize)>,
) -> ApiResult<Json<SessionInfo>> {
    Ok(Json(
        blocking(svc, move |s| {
            s.with(&id, |sess, e| {
                sess.remove_slot(slot)?;
                Ok(sess.info(e))
            })
        })
        .await?,
    ))
}

pub fn router(service: Arc<SessionService>) -> Router {
    Router::new()
        .route("/classes", get(classes))
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(info).delete(remove))
        .route("/sessions/{id}/strokes", post(strokes))
        .route("/sessions/{id}/select", post(select))
        .route("/sessions/{id}/view", put(view))
        .route("/sessions/{id}/shadow", get(shadow))
        .route("/sessions/{id}/model", get(model))
        .route("/sessions/{id}/gallery", get(gallery))
        .route("/sessions/{id}/gallery/{entry}/thumb", get(thumb))
        .route("/sessions/{id}/slots/{slot}", delete(remove_slot))
        .with_state(service)
}

/// Serves the API on `addr` until Ctrl-C.
pub async fn serve(service: Arc<SessionService>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(service))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
