mod common;

use std::sync::Arc;

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use partsketch_service::{router, ClassInfo, Gallery, Selection, SessionInfo, SessionService};
use serde_json::{json, Value};
use tower::ServiceExt;

fn app() -> (Router, Arc<SessionService>) {
    let svc = Arc::new(SessionService::with_canvas(common::engine(), 256));
    (router(svc.clone()), svc)
}

async fn call(
    app: &Router,
    method: Method,
    uri: &str,
    body: Option<Value>,
) -> (StatusCode, String, Vec<u8>) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header(header::CONTENT_TYPE, "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let ctype = resp
        .headers()
        .get(header::CONTENT_TYPE)
        .map(|v| v.to_str().unwrap().to_string())
        .unwrap_or_default();
    let bytes = resp
        .into_body()
        .collect()
        .await
        .unwrap()
        .to_bytes()
        .to_vec();
    (status, ctype, bytes)
}

fn json_of<T: serde::de::DeserializeOwned>(bytes: &[u8]) -> T {
    serde_json::from_slice(bytes).unwrap()
}

#[tokio::test]
async fn full_session_over_http() {
    let (app, svc) = app();
    let (st, _, body) = call(&app, Method::GET, "/classes", None).await;
    assert_eq!(st, StatusCode::OK);
    let classes: Vec<ClassInfo> = json_of(&body);
    assert_eq!(classes[0].class, "chair");
    assert!(classes[0].categories.contains(&"back".to_string()));

    let (st, _, body) = call(
        &app,
        Method::POST,
        "/sessions",
        Some(json!({"class": "chair"})),
    )
    .await;
    assert_eq!(st, StatusCode::CREATED);
    let info: SessionInfo = json_of(&body);
    let base = format!("/sessions/{}", info.id);

    let (st, ctype, png) = call(&app, Method::GET, &format!("{base}/shadow"), None).await;
    assert_eq!((st, ctype.as_str()), (StatusCode::OK, "image/png"));
    assert!(png.starts_with(b"\x89PNG"));

    let (st, _, _) = call(&app, Method::GET, &format!("{base}/model"), None).await;
    assert_eq!(st, StatusCode::CONFLICT);

    let seat = info
        .slots
        .iter()
        .position(|s| s.category == "seat")
        .unwrap();
    let strokes = svc
        .with(&info.id, |s, e| Ok(common::trace(s, e, seat)))
        .unwrap();
    let (st, _, body) = call(
        &app,
        Method::POST,
        &format!("{base}/strokes"),
        Some(serde_json::to_value(&strokes).unwrap()),
    )
    .await;
    assert_eq!(st, StatusCode::OK, "{}", String::from_utf8_lossy(&body));
    let gallery: Gallery = json_of(&body);
    let raw: Value = json_of(&body);
    for key in [
        "token",
        "slot",
        "category",
        "fallback",
        "candidates",
        "entries",
    ] {
        assert!(raw.get(key).is_some(), "missing {key}");
    }
    for key in [
        "index",
        "part_id",
        "category",
        "score",
        "breakdown",
        "origin",
        "thumbnail",
    ] {
        assert!(raw["entries"][0].get(key).is_some(), "missing entry.{key}");
    }

    let (st, ctype, _) = call(
        &app,
        Method::GET,
        &format!("{base}/{}", gallery.entries[0].thumbnail),
        None,
    )
    .await;
    assert_eq!((st, ctype.as_str()), (StatusCode::OK, "image/png"));
    let (st, _, _) = call(
        &app,
        Method::GET,
        &format!("{base}/gallery/999/thumb"),
        None,
    )
    .await;
    assert_eq!(st, StatusCode::NOT_FOUND);

    let pick = json!({"token": "stale", "part_id": gallery.entries[0].part_id});
    let (st, _, body) = call(&app, Method::POST, &format!("{base}/select"), Some(pick)).await;
    assert_eq!(st, StatusCode::CONFLICT);
    let err: Value = json_of(&body);
    assert_eq!(err["status"], 409);

    let pick = json!({"token": gallery.token, "part_id": gallery.entries[0].part_id});
    let (st, _, body) = call(&app, Method::POST, &format!("{base}/select"), Some(pick)).await;
    assert_eq!(st, StatusCode::OK, "{}", String::from_utf8_lossy(&body));
    let sel: Selection = json_of(&body);
    assert_eq!(sel.changed_slots, vec![seat]);

    let (st, ctype, body) = call(&app, Method::GET, &format!("{base}/model"), None).await;
    assert_eq!((st, ctype.as_str()), (StatusCode::OK, "model/obj"));
    let obj = String::from_utf8(body).unwrap();
    assert!(obj
        .lines()
        .any(|l| l.starts_with("g ") && l.contains(&gallery.entries[0].part_id)));

    let (st, ctype, side) = call(
        &app,
        Method::PUT,
        &format!("{base}/view"),
        Some(json!({"direction": [2.0, 0.0, 0.0]})),
    )
    .await;
    assert_eq!((st, ctype.as_str()), (StatusCode::OK, "image/png"));
    let (_, _, again) = call(&app, Method::GET, &format!("{base}/shadow"), None).await;
    assert_eq!(side, again);
    let (_, _, body) = call(&app, Method::GET, &base, None).await;
    let info: SessionInfo = json_of(&body);
    assert_eq!(info.view, [1.0, 0.0, 0.0]);

    let (st, _, body) = call(&app, Method::DELETE, &format!("{base}/slots/{seat}"), None).await;
    assert_eq!(st, StatusCode::OK);
    let info: SessionInfo = json_of(&body);
    assert!(info.slots[seat].placed.is_none());

    let (st, _, _) = call(&app, Method::DELETE, &base, None).await;
    assert_eq!(st, StatusCode::NO_CONTENT);
    let (st, _, _) = call(&app, Method::GET, &base, None).await;
    assert_eq!(st, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn bad_requests_are_rejected_with_json_errors() {
    let (app, _) = app();
    let (st, _, body) = call(
        &app,
        Method::POST,
        "/sessions",
        Some(json!({"class": "boat"})),
    )
    .await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
    let err: Value = json_of(&body);
    assert!(err["error"].as_str().unwrap().contains("chair"));

    let (st, _, _) = call(
        &app,
        Method::POST,
        "/sessions",
        Some(json!({"klass": "chair"})),
    )
    .await;
    assert_eq!(st, StatusCode::BAD_REQUEST);

    let (_, _, body) = call(
        &app,
        Method::POST,
        "/sessions",
        Some(json!({"class": "chair", "lambda1": 0.0})),
    )
    .await;
    let info: SessionInfo = json_of(&body);
    assert_eq!((info.lambda1, info.lambda2), (0.0, 0.5));
    let base = format!("/sessions/{}", info.id);

    let empty = json!({"canvas": {"width": 256, "height": 256}, "strokes": [], "category": "back"});
    let (st, _, _) = call(&app, Method::POST, &format!("{base}/strokes"), Some(empty)).await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
    let (st, _, _) = call(
        &app,
        Method::PUT,
        &format!("{base}/view"),
        Some(json!({"direction": [0.0, 0.0, 0.0]})),
    )
    .await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
    let (st, _, _) = call(&app, Method::GET, "/sessions/nope/shadow", None).await;
    assert_eq!(st, StatusCode::NOT_FOUND);
}
