use std::sync::{Arc, RwLock};
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;
use voxskin_service::{router, Session, SessionConfig};

fn app() -> Router {
    router(Arc::new(RwLock::new(Session::new(SessionConfig::default()).unwrap())))
}

async fn call(app: &Router, method: Method, path: &str, body: Option<Value>) -> (StatusCode, Value, Duration) {
    let req = Request::builder()
        .method(method)
        .uri(path)
        .header("content-type", "application/json");
    let req = match body {
        Some(b) => req.body(Body::from(b.to_string())).unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let start = Instant::now();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let elapsed = start.elapsed();
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()))
    };
    (status, value, elapsed)
}

fn addr(row: usize, col: usize) -> Value {
    json!({"row": row, "col": col})
}

#[tokio::test]
async fn presets_list_six_joint_configurations() {
    let app = app();
    let (status, body, t) = call(&app, Method::GET, "/presets/joints", None).await;
    assert_eq!(status, StatusCode::OK);
    let names: Vec<&str> = body["presets"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["name"].as_str().unwrap())
        .collect();
    assert_eq!(
        names,
        [
            "bend_unilateral_small",
            "bend_unilateral_large",
            "hinge_bilateral_small",
            "hinge_bilateral_large",
            "twist",
            "shear"
        ]
    );
    assert!(t < Duration::from_secs(1));
}

#[tokio::test]
async fn empty_pattern_leaves_stiffness_unchanged() {
    let app = app();
    let (status, body, _) = call(
        &app,
        Method::PUT,
        "/pattern",
        Some(json!({"version": 0, "pattern": {"addresses": []}})),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["version"], 1);
    let (status, body, t) = call(&app, Method::POST, "/evaluate", None).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["version"], 1);
    assert_eq!(body["report"]["before"], body["report"]["after"]);
    assert!(t < Duration::from_secs(1));
}

#[tokio::test]
async fn trim_then_evaluate_excludes_trimmed_cells() {
    let app = app();
    let (_, untrimmed, _) = call(&app, Method::POST, "/evaluate", Some(json!({}))).await;
    let region = json!([addr(3, 16), addr(3, 17), addr(3, 18), addr(3, 19)]);
    let (status, body, _) = call(
        &app,
        Method::POST,
        "/trim",
        Some(json!({"version": 0, "addresses": region})),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["version"], 2);
    let (_, grid, _) = call(&app, Method::GET, "/grid", None).await;
    let trimmed = grid["grid"]["cells"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["health"] == "trimmed")
        .count();
    assert_eq!(trimmed, 4);
    let (status, report, t) = call(&app, Method::POST, "/evaluate", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(report["version"], 2);
    let k = |v: &Value| v["report"]["before"]["axial"].as_f64().unwrap();
    assert!(k(&report) < k(&untrimmed));
    assert!(t < Duration::from_secs(1));
}

#[tokio::test]
async fn mutations_with_stale_versions_conflict() {
    let app = app();
    let put = |v: u64| json!({"version": v, "pattern": {"addresses": [addr(1, 1)]}});
    assert_eq!(
        call(&app, Method::PUT, "/pattern", Some(put(0))).await.0,
        StatusCode::OK
    );
    let (status, body, _) = call(&app, Method::PUT, "/pattern", Some(put(0))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["error"], "stale_version");
    assert_eq!(body["current_version"], 1);
    let (status, _, _) = call(
        &app,
        Method::POST,
        "/trim",
        Some(json!({"version": 0, "addresses": []})),
    )
    .await;
    assert_eq!(status, StatusCode::CONFLICT);
}

#[tokio::test]
async fn rejected_mutations_leave_the_session_untouched() {
    let app = app();
    let (_, before, _) = call(&app, Method::GET, "/session", None).await;
    let bad_pattern = json!({"version": 0, "pattern": {"addresses": [addr(9, 9)]}});
    assert_eq!(
        call(&app, Method::PUT, "/pattern", Some(bad_pattern)).await.0,
        StatusCode::BAD_REQUEST
    );
    let bad_trim = json!({"version": 0, "addresses": [addr(0, 0), addr(7, 0)]});
    assert_eq!(
        call(&app, Method::POST, "/trim", Some(bad_trim)).await.0,
        StatusCode::BAD_REQUEST
    );
    let (_, after, _) = call(&app, Method::GET, "/session", None).await;
    assert_eq!(before, after);
}

#[tokio::test]
async fn malformed_bodies_are_schema_errors() {
    let app = app();
    let (status, body, _) = call(&app, Method::PUT, "/pattern", Some(json!({"version": "x"}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"], "schema");
    let (status, _, _) = call(
        &app,
        Method::POST,
        "/schedule/plan",
        Some(json!({"budget": {"peak": 9.0, "extra": 1}})),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _, _) = call(&app, Method::POST, "/evaluate", Some(json!({"unknown": true}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn schedule_plan_respects_budget_and_maps_infeasibility() {
    let app = app();
    let pattern = json!({"version": 0, "pattern": {"spec": {"kind": "hinge_bilateral", "location": addr(1, 0), "band_width": 1, "magnitude": "small"}}});
    let (status, body, _) = call(&app, Method::PUT, "/pattern", Some(pattern)).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let (status, plan, t) = call(
        &app,
        Method::POST,
        "/schedule/plan",
        Some(json!({"budget": {"peak": 100.0}})),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{plan}");
    assert!(t < Duration::from_secs(1));
    assert_eq!(plan["version"], 1);
    for e in plan["timeline"].as_array().unwrap() {
        assert!(e["cumulative_power"].as_f64().unwrap() <= 100.0 + 1e-9);
    }
    let heats = plan["schedule"]["intervals"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|i| i["kind"] == "heat")
        .count();
    assert_eq!(heats, body["pattern"]["addresses"].as_array().unwrap().len());

    let (status, err, _) = call(
        &app,
        Method::POST,
        "/schedule/plan",
        Some(json!({"budget": {"peak": 5.0}})),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["error"], "infeasible");
    assert!(err["message"].as_str().unwrap().contains("voxel ("));
}

#[tokio::test]
async fn evaluation_is_repeatable() {
    let app = app();
    let body = json!({"pattern": {"addresses": [addr(1, 4), addr(2, 5)]}});
    let (_, a, _) = call(&app, Method::POST, "/evaluate", Some(body.clone())).await;
    let (_, b, _) = call(&app, Method::POST, "/evaluate", Some(body)).await;
    assert_eq!(a.to_string(), b.to_string());
}

#[tokio::test]
async fn design_sweep_and_schema() {
    let app = app();
    let (status, body, t) = call(
        &app,
        Method::POST,
        "/design/sweep",
        Some(json!({"parameter": "t_f", "from": 0.5, "to": 2.0, "steps": 4})),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["sweep"]["rows"].as_array().unwrap().len(), 4);
    assert!(
        body["sweep"]["fits"]["bending"]["stiffness"]["exponent"]
            .as_f64()
            .unwrap()
            > 2.0
    );
    assert!(t < Duration::from_secs(1));
    let (status, schema, _) = call(&app, Method::GET, "/schema", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(schema["endpoints"].as_array().unwrap().len(), 10);
}

#[tokio::test]
async fn session_export_import_round_trip() {
    let source = app();
    let put = json!({"version": 0, "pattern": {"addresses": [addr(2, 2)]}});
    call(&source, Method::PUT, "/pattern", Some(put)).await;
    let (_, exported, _) = call(&source, Method::GET, "/session", None).await;
    let fresh = app();
    let (status, body, _) = call(
        &fresh,
        Method::PUT,
        "/session",
        Some(json!({"version": 0, "session": exported})),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["version"], 1);
    let (_, grid, _) = call(&fresh, Method::GET, "/grid", None).await;
    assert_eq!(grid["pattern"]["addresses"], json!([addr(2, 2)]));
}
