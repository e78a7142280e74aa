use std::path::PathBuf;
use std::process::Command;
use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::http::{Request, StatusCode};
use qinterp::commands::load_kb;
use qinterp::server::{router, AppState};
use qinterp_core::config::EngineConfig;
use tower::ServiceExt;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn state() -> Arc<AppState> {
    Arc::new(AppState {
        kb: load_kb(&fixture("table1")).unwrap(),
        config: EngineConfig::default(),
    })
}

async fn get(state: &Arc<AppState>, uri: &str) -> (StatusCode, String) {
    let response = router(Arc::clone(state))
        .oneshot(Request::builder().uri(uri).body(Body::empty()).unwrap())
        .await
        .unwrap();
    let status = response.status();
    let body = to_bytes(response.into_body(), usize::MAX).await.unwrap();
    (status, String::from_utf8(body.to_vec()).unwrap())
}

/// The serialized `interpretations` array, byte for byte.
fn interpretations_payload(body: &str) -> &str {
    let start = body.find("\"interpretations\":").expect("interpretations field");
    let end = body.find(",\"timings\":").expect("timings field");
    &body[start..end]
}

#[tokio::test]
async fn health_is_ok() {
    let (status, body) = get(&state(), "/health").await;
    assert_eq!(status, StatusCode::OK);
    assert!(body.contains("\"ok\""));
}

#[tokio::test]
async fn empty_and_missing_queries_are_rejected() {
    let s = state();
    for uri in ["/interpret?q=", "/interpret", "/interpret?q=+++"] {
        let (status, body) = get(&s, uri).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{uri}");
        assert!(body.contains("error"));
    }
    let long = vec!["dance"; 40].join("+");
    let (status, body) = get(&s, &format!("/interpret?q={long}")).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(body.contains("40 terms"));
}

#[tokio::test]
async fn table1_query_returns_both_skeletons() {
    let (status, body) = get(&state(), "/interpret?q=new+york+times+square+dance").await;
    assert_eq!(status, StatusCode::OK);
    let v: serde_json::Value = serde_json::from_str(&body).unwrap();
    assert_eq!(v["query"], "new york times square dance");
    let links: Vec<&serde_json::Value> = v["interpretations"].as_array().unwrap().iter().map(|i| &i["links"]).collect();
    assert!(links.contains(&&serde_json::json!(["The_New_York_Times", "Square_Dance"])));
    assert!(links.contains(&&serde_json::json!(["New_York_City", "Times_Square", null])));
    for key in ["segmentation_ms", "linking_ms", "combination_ms", "total_ms"] {
        assert!(v["timings"][key].as_f64().unwrap() >= 0.0);
    }
}

#[tokio::test]
async fn service_matches_cli_byte_for_byte() {
    let (_, served) = get(&state(), "/interpret?q=New%20York%20Times%20Square%20Dance").await;
    let cli = Command::new(env!("CARGO_BIN_EXE_qinterp"))
        .args(["interpret", "--kb", fixture("table1").to_str().unwrap(), "New York Times Square Dance"])
        .output()
        .unwrap();
    assert!(cli.status.success());
    let printed = String::from_utf8(cli.stdout).unwrap();
    assert_eq!(interpretations_payload(&served), interpretations_payload(printed.trim_end()));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_requests_agree() {
    let s = state();
    let handles: Vec<_> = (0..16)
        .map(|_| {
            let s = Arc::clone(&s);
            tokio::spawn(async move { get(&s, "/interpret?q=new+york+times+square+dance").await })
        })
        .collect();
    let mut payloads = Vec::new();
    for h in handles {
        let (status, body) = h.await.unwrap();
        assert_eq!(status, StatusCode::OK);
        payloads.push(interpretations_payload(&body).to_string());
    }
    assert!(payloads.windows(2).all(|w| w[0] == w[1]));
}
