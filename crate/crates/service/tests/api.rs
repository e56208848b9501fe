use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use prefsys_core::guided::{proportion_next_pair, total_order, MallowsModel, OrderCorpus, OrderSupport};
use prefsys_core::scenarios::{
    example1_labels, example1_pairs, example1_problem, example1_times, run_example1, Example1Variant,
};
use prefsys_core::time::Verdict;
use prefsys_service::{router, AppState, Store};
use serde_json::{json, Value};
use tower::ServiceExt;

fn app(dir: &std::path::Path) -> Router {
    router(Arc::new(AppState::new(Store::open(dir).unwrap())))
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string()))
            .unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, value)
}

fn example1_session(kind: &str) -> Value {
    let variant = if kind == "TIME" { Example1Variant::Time } else { Example1Variant::Label };
    let procedure = if kind == "TIME" {
        json!({"kind": "TIME"})
    } else {
        json!({"kind": "LABEL", "r": 5})
    };
    json!({
        "n": 8,
        "procedure": procedure,
        "guidance": {"strategy": "SCRIPTED", "pairs": example1_pairs()},
        "decision": example1_problem(variant),
    })
}

async fn create(app: &Router, body: Value) -> String {
    let (status, v) = call(app, "POST", "/v1/sessions", Some(body)).await;
    assert_eq!(status, StatusCode::CREATED, "{v}");
    v["id"].as_str().unwrap().to_string()
}

fn pair_of(v: &Value) -> (usize, usize) {
    (v[0].as_u64().unwrap() as usize, v[1].as_u64().unwrap() as usize)
}

#[tokio::test]
async fn example1_labels_decide_after_four_answers() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let id = create(&app, example1_session("LABEL")).await;

    let (_, fresh) = call(&app, "GET", &format!("/v1/sessions/{id}"), None).await;
    assert_eq!(fresh["status"], "ACTIVE");
    assert_eq!(fresh["hasse_edges"], json!([]));

    let labels = example1_labels();
    for (step, (pair, label)) in labels.iter().enumerate() {
        let (status, next) = call(&app, "GET", &format!("/v1/sessions/{id}/next-pair"), None).await;
        assert_eq!(status, StatusCode::OK);
        let suggested = pair_of(&next["pair"]);
        assert!(suggested == *pair || suggested == (pair.1, pair.0), "step {step}");
        let (status, out) = call(
            &app,
            "POST",
            &format!("/v1/sessions/{id}/answers"),
            Some(json!({"kind": "LABEL", "pair": pair, "label": label})),
        )
        .await;
        assert_eq!(status, StatusCode::OK, "{out}");
        let expected = if step + 1 == labels.len() { "DECIDED" } else { "ACTIVE" };
        assert_eq!(out["status"], expected, "step {step}: {out}");
    }

    let (_, state) = call(&app, "GET", &format!("/v1/sessions/{id}"), None).await;
    assert_eq!(state["choice_set"], json!([0]));
    assert_eq!(state["chosen_acts"], json!(["X1"]));
    let mut edges: Vec<(usize, usize)> = state["hasse_edges"].as_array().unwrap().iter().map(pair_of).collect();
    edges.sort();
    let mut expected: Vec<(usize, usize)> = labels.iter().map(|(p, _)| *p).collect();
    expected.sort();
    assert_eq!(edges, expected);

    let local = run_example1(Example1Variant::Label).unwrap();
    assert_eq!(state["system"], serde_json::to_value(&local.system).unwrap());

    let (status, err) = call(&app, "GET", &format!("/v1/sessions/{id}/next-pair"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(err["error"], "terminal_status");
}

#[tokio::test]
async fn example1_times_decide_after_four_answers() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let id = create(&app, example1_session("TIME")).await;
    let times = example1_times();
    let mut last = Value::Null;
    for answer in &times {
        assert_eq!(answer.verdict, Verdict::IStrictlyPreferred);
        let (status, out) = call(
            &app,
            "POST",
            &format!("/v1/sessions/{id}/answers"),
            Some(json!({
                "kind": "TIME",
                "pair": answer.pair,
                "verdict": "I_STRICTLY_PREFERRED",
                "elapsed_ms": answer.elapsed * 1000.0,
            })),
        )
        .await;
        assert_eq!(status, StatusCode::OK, "{out}");
        last = out;
    }
    assert_eq!(last["status"], "DECIDED");
    assert_eq!(last["choice_set"], json!([0]));

    let log = std::fs::read_to_string(dir.path().join("sessions").join(&id).join("log.jsonl")).unwrap();
    let lines: Vec<Value> = log.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 1 + times.len());
    assert_eq!(lines[0]["event"], "created");
    assert_eq!(lines[4]["client_elapsed_ms"], json!(350.0));
}

#[tokio::test]
async fn invalid_configs_report_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());

    let mut body = example1_session("LABEL");
    body["decision"]["acts"][0]["outcomes"][0] = json!(9);
    let (status, err) = call(&app, "POST", "/v1/sessions", Some(body)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["field"], "decision");

    let mut body = example1_session("TIME");
    body["procedure"] = json!({"kind": "TIME", "c_inf": 0.0});
    let (status, err) = call(&app, "POST", "/v1/sessions", Some(body)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["field"], "procedure");

    let (status, _) = call(&app, "POST", "/v1/sessions", Some(json!({"n": "eight"}))).await;
    assert!(status.is_client_error());

    let (status, _) = call(&app, "GET", "/v1/sessions/doesnotexist", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = call(&app, "GET", "/v1/sessions/..%2F..%2Fetc/next-pair", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn stale_pairs_and_kind_mismatches_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let id = create(&app, example1_session("LABEL")).await;
    let uri = format!("/v1/sessions/{id}/answers");
    let (status, _) = call(&app, "POST", &uri, Some(json!({"kind": "LABEL", "pair": [7, 6], "label": 2}))).await;
    assert_eq!(status, StatusCode::OK);
    let (status, err) = call(&app, "POST", &uri, Some(json!({"kind": "LABEL", "pair": [6, 7], "label": 1}))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(err["error"], "stale_pair");
    let (status, err) = call(
        &app,
        "POST",
        &uri,
        Some(json!({"kind": "TIME", "pair": [5, 4], "verdict": "I_STRICTLY_PREFERRED", "elapsed_ms": 500})),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(err["error"], "kind_mismatch");
    let (status, _) = call(&app, "POST", &uri, Some(json!({"kind": "LABEL", "pair": [5, 4], "label": 9}))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);

    // Rejected answers leave no trace in the log.
    let log = std::fs::read_to_string(dir.path().join("sessions").join(&id).join("log.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 2);
}

#[tokio::test]
async fn sessions_survive_a_restart_and_a_torn_log() {
    let dir = tempfile::tempdir().unwrap();
    let id = {
        let app = app(dir.path());
        let id = create(&app, example1_session("LABEL")).await;
        for (pair, label) in example1_labels().into_iter().take(2) {
            let (status, _) = call(
                &app,
                "POST",
                &format!("/v1/sessions/{id}/answers"),
                Some(json!({"kind": "LABEL", "pair": pair, "label": label})),
            )
            .await;
            assert_eq!(status, StatusCode::OK);
        }
        id
    };
    let session_dir = dir.path().join("sessions").join(&id);
    let snapshot_before = std::fs::read(session_dir.join("snapshot.json")).unwrap();

    let mut log = std::fs::OpenOptions::new().append(true).open(session_dir.join("log.jsonl")).unwrap();
    std::io::Write::write_all(&mut log, b"{\"event\":\"answer\",\"seq\":3,\"ans").unwrap();
    drop(log);

    let app = app(dir.path());
    let (status, state) = call(&app, "GET", &format!("/v1/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(state["answered"], json!(2));
    let store = Store::open(dir.path()).unwrap();
    let replayed = serde_json::to_vec_pretty(&store.read_snapshot(&id).unwrap()).unwrap();
    assert_eq!(replayed, snapshot_before);

    let (_, next) = call(&app, "GET", &format!("/v1/sessions/{id}/next-pair"), None).await;
    let p = pair_of(&next["pair"]);
    assert!(p == (2, 0) || p == (0, 2));
}

#[tokio::test]
async fn corpora_round_trip_and_guide_sessions() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let mode = total_order(&[3, 1, 0, 2]);
    let model = MallowsModel::new(mode, 0.7, false, OrderSupport::TotalOrders).unwrap();
    let (status, record) = call(
        &app,
        "POST",
        "/v1/corpora",
        Some(json!({"model": model, "count": 60, "seed": 4})),
    )
    .await;
    assert_eq!(status, StatusCode::CREATED, "{record}");
    let corpus_id = record["id"].as_str().unwrap().to_string();
    assert_eq!(record["provenance"]["source"], "MODEL");

    let (status, fetched) = call(&app, "GET", &format!("/v1/corpora/{corpus_id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(fetched, record);
    let corpus: OrderCorpus = serde_json::from_value(fetched["corpus"].clone()).unwrap();

    let id = create(
        &app,
        json!({
            "n": 4,
            "procedure": {"kind": "TIME", "mode": "BASIC"},
            "guidance": {"strategy": "PROPORTION", "corpus_id": corpus_id},
        }),
    )
    .await;
    let (_, next) = call(&app, "GET", &format!("/v1/sessions/{id}/next-pair"), None).await;
    let all: Vec<(usize, usize)> = (0..4).flat_map(|i| (i + 1..4).map(move |j| (i, j))).collect();
    let (expected, _) = proportion_next_pair(&corpus, &all).unwrap();
    assert_eq!(pair_of(&next["pair"]), expected);

    let (status, human) = call(&app, "POST", "/v1/corpora", Some(json!({"corpus": corpus}))).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(human["provenance"]["source"], "HUMAN");

    let (status, _) = call(
        &app,
        "POST",
        "/v1/sessions",
        Some(json!({"n": 5, "procedure": {"kind": "LABEL", "r": 3},
                    "guidance": {"strategy": "SUBGROUP", "corpus_id": corpus_id}})),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_sessions_are_independent() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let mut handles = Vec::new();
    for _ in 0..6 {
        let app = app.clone();
        handles.push(tokio::spawn(async move {
            let id = create(&app, example1_session("LABEL")).await;
            for (pair, label) in example1_labels() {
                let (status, _) = call(
                    &app,
                    "POST",
                    &format!("/v1/sessions/{id}/answers"),
                    Some(json!({"kind": "LABEL", "pair": pair, "label": label})),
                )
                .await;
                assert_eq!(status, StatusCode::OK);
            }
            let (_, state) = call(&app, "GET", &format!("/v1/sessions/{id}"), None).await;
            state
        }));
    }
    let mut states = Vec::new();
    for h in handles {
        let mut s = h.await.unwrap();
        s["id"] = Value::Null;
        states.push(s);
    }
    assert!(states.iter().all(|s| s == &states[0]));
    assert_eq!(states[0]["status"], "DECIDED");
}
