mod common;

use std::sync::Arc;

use axum::http::StatusCode;
use common::{drive, keys, runner, Client};
use interview_core::backend::Faulty;
use interview_core::persona::cohort::{positive, rule_faithful_cohort};
use interview_core::session::SessionStatus;
use interview_core::{EngineAction, MockBackend, ModuleTag};
use interview_service::api::{ActionPayload, SessionView};
use interview_service::{AppState, FileStore, MemoryStore, SessionStore};
use serde_json::json;

fn mock() -> Arc<MockBackend> {
    Arc::new(MockBackend::bundled())
}

#[tokio::test]
async fn create_returns_entry_question() {
    let c = Client::memory(mock());
    let a = c.create().await;
    assert_eq!(a.schema_version, 1);
    assert_eq!(a.tree, "mini");
    assert_eq!(a.turn, 0);
    assert_eq!(a.status, SessionStatus::Active);
    match &a.action {
        EngineAction::AskQuestion { node, strategy, utterance } => {
            assert_eq!(node.as_str(), "a1a");
            assert_eq!(strategy.as_str(), "probe");
            assert!(!utterance.is_empty());
        }
        other => panic!("unexpected first action {other:?}"),
    }
    let b = c.create().await;
    assert_ne!(a.session_id, b.session_id);
}

#[tokio::test]
async fn unknown_tree_is_a_validation_error() {
    let c = Client::memory(mock());
    let r = c.send("POST", "/sessions", Some(json!({"tree": "nope"})), &[]).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(r.error_code(), "VALIDATION");
    assert_eq!(r.json()["error"]["http_status"], 422);
    assert_eq!(r.json()["schema_version"], 1);

    let r = c.send("POST", "/sessions", None, &[]).await;
    assert_eq!(r.status, StatusCode::CREATED, "empty body uses defaults");
    let id = r.json()["session_id"].as_str().unwrap().to_string();
    let bad = c
        .send("POST", &format!("/sessions/{id}/messages"), Some(json!({"txt": "x"})), &[])
        .await;
    assert_eq!(bad.error_code(), "VALIDATION");
    let empty = c.message(&id, "   ").await;
    assert_eq!(empty.error_code(), "VALIDATION");
}

#[tokio::test]
async fn gad_positive_flow_and_report() {
    let mut c = Client::memory(mock());
    let profile = positive(ModuleTag::GeneralizedAnxiety);
    let mut persona = runner(&profile);
    let start = c.create().await;
    let id = start.session_id.clone();

    let early = c.get(&format!("/sessions/{id}/report")).await;
    assert_eq!(early.status, StatusCode::CONFLICT);
    assert_eq!(early.error_code(), "INCOMPLETE");

    let end = drive(&mut c, start, &mut persona, |_, _| {}).await;
    assert_eq!(end.action, EngineAction::DiagnosisReady);
    assert_eq!(end.status, SessionStatus::Completed);

    let first = c.get(&format!("/sessions/{id}/report")).await;
    assert_eq!(first.status, StatusCode::OK);
    assert!(first.content_type.starts_with("application/json"));
    let second = c.get(&format!("/sessions/{id}/report")).await;
    assert_eq!(first.body, second.body, "repeated reads are byte-identical");
    let report = first.json();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["mode"], "psycot");
    let gad = report["report"]["modules"]
        .as_array()
        .unwrap()
        .iter()
        .find(|m| m["module"] == "generalized_anxiety")
        .unwrap();
    assert_eq!(gad["decision"]["positive"], true);

    let text = c
        .send("GET", &format!("/sessions/{id}/report"), None, &[("accept", "text/plain")])
        .await;
    assert!(text.content_type.starts_with("text/plain"));
    let human = text.text();
    for section in ["[Criterion A]", "[Criterion B]", "[Criterion C]", "[Criterion E]"] {
        assert!(human.contains(section), "missing {section}");
    }

    let late = c.message(&id, "one more thing").await;
    assert_eq!(late.status, StatusCode::CONFLICT);
    assert_eq!(late.error_code(), "CONFLICT");

    let view: SessionView = serde_json::from_slice(&c.get(&format!("/sessions/{id}")).await.body).unwrap();
    assert_eq!(view.status, SessionStatus::Completed);
    assert!(view.report_ready);
    assert_eq!(view.turn, end.turn);
}

#[tokio::test]
async fn unknown_session_is_not_found() {
    let c = Client::memory(mock());
    for r in [
        c.get("/sessions/missing").await,
        c.get("/sessions/missing/report").await,
        c.message("missing", "hello").await,
    ] {
        assert_eq!(r.status, StatusCode::NOT_FOUND);
        assert_eq!(r.error_code(), "NOT_FOUND");
    }
}

#[tokio::test]
async fn backend_outage_leaves_session_unchanged() {
    let faulty = Arc::new(Faulty::new(MockBackend::bundled()));
    let c = Client::memory(faulty.clone());
    let control = Client::memory(mock());
    let a = c.create().await;
    let b = control.create().await;
    let reply = "Yes, I have felt depressed most of the day for the past month";

    let before = c.get(&format!("/sessions/{}", a.session_id)).await.json();
    faulty.set_down(true);
    let r = c.message(&a.session_id, reply).await;
    assert_eq!(r.status, StatusCode::SERVICE_UNAVAILABLE);
    assert_eq!(r.error_code(), "BACKEND_UNAVAILABLE");
    let after = c.get(&format!("/sessions/{}", a.session_id)).await.json();
    assert_eq!(before["transcript"], after["transcript"]);
    assert_eq!(before["turn"], after["turn"]);

    faulty.set_down(false);
    let retried: ActionPayload = serde_json::from_slice(&c.message(&a.session_id, reply).await.body).unwrap();
    let clean: ActionPayload = serde_json::from_slice(&control.message(&b.session_id, reply).await.body).unwrap();
    assert_eq!(retried.action, clean.action);
    assert_eq!(retried.turn, 1);
}

#[tokio::test]
async fn superseded_turn_conflicts() {
    let c = Client::memory(mock());
    let a = c.create().await;
    let uri = format!("/sessions/{}/messages", a.session_id);
    let ok = c.send("POST", &uri, Some(json!({"text": "yes, every day", "turn": 0})), &[]).await;
    assert_eq!(ok.status, StatusCode::OK);
    let stale = c.send("POST", &uri, Some(json!({"text": "yes, every day", "turn": 0})), &[]).await;
    assert_eq!(stale.status, StatusCode::CONFLICT);
    assert_eq!(stale.error_code(), "CONFLICT");
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_messages_are_serialized() {
    let c = Client::memory(mock());
    let a = c.create().await;
    let texts = ["Hard to say really", "Maybe, it varies", "I guess, sort of, depends"];
    let handles: Vec<_> = texts
        .iter()
        .map(|t| {
            let c = c.clone();
            let id = a.session_id.clone();
            let t = t.to_string();
            tokio::spawn(async move { c.message(&id, &t).await })
        })
        .collect();
    let mut turns = Vec::new();
    for h in handles {
        let r = h.await.unwrap();
        assert_eq!(r.status, StatusCode::OK, "{}", r.text());
        turns.push(r.json()["turn"].as_u64().unwrap());
    }
    turns.sort();
    assert_eq!(turns, [1, 2, 3], "each message saw the previous step");
    let view: SessionView = serde_json::from_slice(&c.get(&format!("/sessions/{}", a.session_id)).await.body).unwrap();
    let said: Vec<&str> = view
        .transcript
        .iter()
        .filter(|t| t.is_participant())
        .map(|t| t.text.as_str())
        .collect();
    assert_eq!(said.len(), 3);
    let mut sorted = said.clone();
    sorted.sort();
    let mut expected = texts.to_vec();
    expected.sort();
    assert_eq!(sorted, expected);
    // transcript alternates interviewer and participant turns
    for pair in view.transcript.chunks(2) {
        assert!(!pair[0].is_participant());
        if pair.len() == 2 {
            assert!(pair[1].is_participant());
        }
    }
}

#[tokio::test]
async fn crash_and_restore_reproduces_the_report() {
    let profile = rule_faithful_cohort()
        .into_iter()
        .find(|p| p.name == "gad-case-5")
        .expect("cohort persona");

    let mut reference = Client::memory(mock());
    let start = reference.create().await;
    let rid = start.session_id.clone();
    let mut persona = runner(&profile);
    drive(&mut reference, start, &mut persona, |_, _| {}).await;
    let expected = reference.get(&format!("/sessions/{rid}/report")).await.json()["report"].clone();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sessions.json");
    let store: Arc<dyn SessionStore> = Arc::new(FileStore::open(&path).unwrap());
    let mut c = Client::with_store(mock(), store);
    let start = c.create().await;
    let id = start.session_id.clone();
    let mut persona = runner(&profile);
    let crash_at = 12;
    let path2 = path.clone();
    let mut crashed = false;
    drive(&mut c, start, &mut persona, |n, client| {
        if n == crash_at {
            crashed = true;
            // drop the running service and bring up a fresh one on the same file
            let store: Arc<dyn SessionStore> = Arc::new(FileStore::open(&path2).unwrap());
            *client = Client::with_store(mock(), store);
        }
    })
    .await;
    assert!(crashed, "session finished before the crash point");
    let restored = c.get(&format!("/sessions/{id}/report")).await;
    assert_eq!(restored.status, StatusCode::OK);
    assert_eq!(restored.json()["report"], expected);
    assert!(!dir.path().join("sessions.json.tmp").exists());
}

#[tokio::test]
async fn payloads_carry_no_prompt_field() {
    let mut c = Client::memory(mock());
    let profile = positive(ModuleTag::Depression);
    let mut persona = runner(&profile);
    let start = c.create().await;
    let id = start.session_id.clone();
    let mut seen = Vec::new();
    keys(&serde_json::to_value(&start).unwrap(), &mut seen);
    let mut payloads = Vec::new();
    drive(&mut c, start, &mut persona, |_, _| {}).await;
    payloads.push(c.get(&format!("/sessions/{id}")).await.json());
    payloads.push(c.get(&format!("/sessions/{id}/report")).await.json());
    payloads.push(c.get("/trees").await.json());
    payloads.push(c.get("/healthz").await.json());
    payloads.push(c.get("/sessions/x").await.json());
    for p in &payloads {
        assert_eq!(p["schema_version"], 1);
        keys(p, &mut seen);
    }
    assert!(!seen.is_empty());
    assert!(!seen.iter().any(|k| k == "prompt"), "a payload exposes a prompt");
}

#[tokio::test]
async fn trees_and_health() {
    let c = Client::memory(mock());
    let trees = c.get("/trees").await.json();
    assert_eq!(trees["trees"][0]["name"], "mini");
    assert_eq!(trees["trees"][0]["modules"].as_array().unwrap().len(), 4);
    let h = c.get("/healthz").await;
    assert_eq!(h.status, StatusCode::OK);
    assert_eq!(h.json()["status"], "ok");
}

#[tokio::test]
async fn extra_trees_are_served_by_name() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("gad_only.json"),
        include_str!("../../core/tests/fixtures/gad_only_tree.json"),
    )
    .unwrap();
    let mut state = AppState::new(mock(), Arc::new(MemoryStore::new()));
    for (name, engine) in interview_service::api::load_tree_dir(dir.path()).unwrap() {
        state = state.with_tree(name, engine);
    }
    let c = Client::new(state);
    let r = c.send("POST", "/sessions", Some(json!({"tree": "gad_only"})), &[]).await;
    assert_eq!(r.status, StatusCode::CREATED, "{}", r.text());
    assert_eq!(r.json()["action"]["node"], "N1a");
    assert_eq!(c.get("/trees").await.json()["trees"].as_array().unwrap().len(), 2);
}

#[tokio::test]
async fn shared_secret_gate() {
    let state = AppState::new(mock(), Arc::new(MemoryStore::new())).with_secret(Some("s3cret".into()));
    let c = Client::new(state);
    assert_eq!(c.get("/healthz").await.status, StatusCode::OK);
    let denied = c.send("POST", "/sessions", Some(json!({})), &[]).await;
    assert_eq!(denied.status, StatusCode::UNAUTHORIZED);
    let wrong = c.send("GET", "/trees", None, &[("x-interview-secret", "nope")]).await;
    assert_eq!(wrong.status, StatusCode::UNAUTHORIZED);
    let ok = c
        .send("POST", "/sessions", Some(json!({})), &[("x-interview-secret", "s3cret")])
        .await;
    assert_eq!(ok.status, StatusCode::CREATED);
}

#[tokio::test]
async fn per_session_config_overrides_threshold() {
    let c = Client::memory(mock());
    let r = c
        .send("POST", "/sessions", Some(json!({"config": {"threshold": 1}})), &[])
        .await;
    let id = r.json()["session_id"].as_str().unwrap().to_string();
    let next = c.message(&id, "Hard to say really").await.json();
    assert_eq!(next["action"]["type"], "present_forced_choice");
    assert_eq!(next["action"]["question"]["node"], "a1a");
}
