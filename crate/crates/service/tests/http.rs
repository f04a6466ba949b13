use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::http::{Request, StatusCode};
use crowdvote::crowdsim::synthetic_tasks;
use crowdvote::tasking::{allocate, AllocationConfig, WorkerProfile};
use crowdvote_service::{router, VoteStore};
use serde_json::Value;
use tower::ServiceExt;

fn app(dir: &std::path::Path) -> (axum::Router, Vec<crowdvote::Assignment>) {
    let tasks = synthetic_tasks(10, &["S_0124".into()], &["en".into()], 4).unwrap();
    let workers: Vec<WorkerProfile> = (0..3)
        .map(|i| WorkerProfile {
            worker_id: format!("w{i}"),
            native_language: "en".into(),
            other_languages: vec![],
        })
        .collect();
    let ids: Vec<String> = tasks.iter().map(|t| t.task_id.clone()).collect();
    let assignments = allocate(&ids, &workers, &AllocationConfig::new(3, 10, 2)).unwrap();
    std::fs::write(dir.join("index.html"), "<html>vote</html>").unwrap();
    let store = VoteStore::open(tasks, assignments.clone(), &dir.join("votes.jsonl")).unwrap();
    (router(Arc::new(store), Some(dir.to_path_buf())), assignments)
}

async fn call(app: &axum::Router, req: Request<Body>) -> (StatusCode, String) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let body = to_bytes(resp.into_body(), 1 << 20).await.unwrap();
    (status, String::from_utf8(body.to_vec()).unwrap())
}

fn vote_req(assignment: &str, worker: &str, choice: i64) -> Request<Body> {
    Request::post("/api/vote")
        .header("content-type", "application/json")
        .body(Body::from(
            serde_json::json!({"assignment_id": assignment, "worker_id": worker, "choice": choice}).to_string(),
        ))
        .unwrap()
}

#[tokio::test]
async fn endpoints() {
    let dir = tempfile::tempdir().unwrap();
    let (app, _) = app(dir.path());
    let (s, body) = call(&app, Request::get("/healthz").body(Body::empty()).unwrap()).await;
    assert_eq!((s, body.as_str()), (StatusCode::OK, "ok"));

    let (s, body) = call(&app, Request::get("/api/task?worker_id=w1").body(Body::empty()).unwrap()).await;
    assert_eq!(s, StatusCode::OK);
    let view: Value = serde_json::from_str(&body).unwrap();
    assert_eq!(view["status"], "task");
    assert_eq!(view["progress"]["total"], 10);
    let assignment = view["assignment_id"].as_str().unwrap().to_string();

    let (s, _) = call(&app, vote_req(&assignment, "w1", 3)).await;
    assert_eq!(s, StatusCode::OK);
    let (s, body) = call(&app, vote_req(&assignment, "w1", 3)).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(serde_json::from_str::<Value>(&body).unwrap()["error"], "AlreadyVoted");
    let (s, _) = call(&app, vote_req(&assignment, "w2", 3)).await;
    assert_eq!(s, StatusCode::FORBIDDEN);
    let (s, body) = call(&app, vote_req(&assignment, "w1", 9)).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert!(body.contains("BadChoice"));

    let (s, body) = call(&app, Request::get("/api/progress?worker_id=w1").body(Body::empty()).unwrap()).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(serde_json::from_str::<Value>(&body).unwrap(), serde_json::json!({"done": 1, "total": 10}));
    let (s, body) = call(&app, Request::get("/api/progress?worker_id=zz").body(Body::empty()).unwrap()).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert!(body.contains("UnknownWorker"));

    let (s, body) = call(&app, Request::get("/index.html").body(Body::empty()).unwrap()).await;
    assert_eq!((s, body.as_str()), (StatusCode::OK, "<html>vote</html>"));
}
