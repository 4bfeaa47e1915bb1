use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use prosody_cli::server::{router, AppState};
use prosody_core::corpus::CorpusIndex;
use prosody_core::fixtures::{generate, write_corpus, FixtureOptions};
use prosody_core::Config;
use serde_json::Value;
use tower::ServiceExt;

fn app() -> (tempfile::TempDir, axum::Router) {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = generate(&FixtureOptions { n_utterances: 2, ..FixtureOptions::default() }).unwrap();
    write_corpus(tmp.path(), &corpus).unwrap();
    let index = CorpusIndex::from_dir(tmp.path()).unwrap();
    (tmp, router(AppState::new(index, Config::default())))
}

async fn call(app: &axum::Router, req: Request<Body>) -> (StatusCode, Vec<u8>) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
}

async fn get_json(app: &axum::Router, uri: &str) -> (StatusCode, Value) {
    let (s, body) = call(app, Request::get(uri).body(Body::empty()).unwrap()).await;
    (s, serde_json::from_slice(&body).unwrap())
}

#[tokio::test]
async fn lists_and_serves_utterances() {
    let (_tmp, app) = app();
    let (s, list) = get_json(&app, "/api/utterances").await;
    assert_eq!(s, StatusCode::OK);
    let list = list.as_array().unwrap();
    assert_eq!(list.len(), 2);
    assert_eq!(list[0]["id"], "fx000");
    assert!(list[0]["n_words"].as_u64().unwrap() > 0);

    let (s, cfg) = get_json(&app, "/api/config").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(cfg["hash"], Config::default().hash());

    let (s, p) = get_json(&app, "/api/utterance/fx000").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(p["config_hash"], Config::default().hash());
    assert_eq!(p["words"].as_array().unwrap().len(), list[0]["n_words"].as_u64().unwrap() as usize);
    assert_eq!(p["scalogram"]["rows"].as_array().unwrap().len(), 13);

    let (s, wav) = call(&app, Request::get("/api/audio/fx000").body(Body::empty()).unwrap()).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(&wav[..4], b"RIFF");

    let (s, _) = get_json(&app, "/api/utterance/nope").await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn posted_config_is_addressable_by_hash() {
    let (_tmp, app) = app();
    let body = r#"{"id": "fx001", "config": {"labeler": {"thresholds": {"prominence": [0.05, 0.1]}}}}"#;
    let req = Request::post("/api/annotate")
        .header("content-type", "application/json")
        .body(Body::from(body))
        .unwrap();
    let (s, bytes) = call(&app, req).await;
    assert_eq!(s, StatusCode::OK);
    let posted: Value = serde_json::from_slice(&bytes).unwrap();
    let hash = posted["config_hash"].as_str().unwrap();
    assert_ne!(hash, Config::default().hash());
    assert_eq!(posted["thresholds"]["prominence"], serde_json::json!([0.05, 0.1]));

    let (s, again) = get_json(&app, &format!("/api/utterance/fx001?config={hash}")).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(again, posted);

    let (s, _) = get_json(&app, "/api/utterance/fx001?config=deadbeefdeadbeef").await;
    assert_eq!(s, StatusCode::BAD_REQUEST);

    let req = Request::post("/api/annotate")
        .header("content-type", "application/json")
        .body(Body::from(r#"{"id": "fx001", "config": {"labeler": {"thresholds": {"prominence": [0.9, 0.1]}}}}"#))
        .unwrap();
    assert_eq!(call(&app, req).await.0, StatusCode::BAD_REQUEST);
}
