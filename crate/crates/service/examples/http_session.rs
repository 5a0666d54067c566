//! Drives one scripted participant through the HTTP API in process, then
//! prints the text report.

use std::sync::Arc;

use axum::body::Body;
use axum::http::Request;
use http_body_util::BodyExt;
use interview_core::persona::cohort::positive;
use interview_core::persona::PersonaRunner;
use interview_core::{Catalog, EngineAction, MockBackend, ModuleTag};
use interview_service::api::ActionPayload;
use interview_service::{router, AppState, MemoryStore};
use tower::ServiceExt;

async fn call(app: &axum::Router, method: &str, uri: &str, body: Option<String>, accept: &str) -> String {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .header("accept", accept)
        .body(body.map(Body::from).unwrap_or_default())
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    String::from_utf8(resp.into_body().collect().await.unwrap().to_bytes().to_vec()).unwrap()
}

#[tokio::main]
async fn main() {
    let app = router(AppState::new(Arc::new(MockBackend::bundled()), Arc::new(MemoryStore::new())));
    let profile = positive(ModuleTag::SocialAnxiety);
    let mut persona = PersonaRunner::new(&profile, &Catalog::bundled().negation_cues);

    let mut at: ActionPayload = serde_json::from_str(&call(&app, "POST", "/sessions", None, "application/json").await).unwrap();
    let id = at.session_id.clone();
    while at.action != EngineAction::DiagnosisReady {
        let reply = persona.respond(&at.action).unwrap();
        println!("Q: {}", at.action.utterance().unwrap_or_default());
        println!("A: {reply}");
        let body = serde_json::json!({ "text": reply, "turn": at.turn }).to_string();
        let resp = call(&app, "POST", &format!("/sessions/{id}/messages"), Some(body), "application/json").await;
        at = serde_json::from_str(&resp).unwrap();
    }
    println!("\n{}", call(&app, "GET", &format!("/sessions/{id}/report"), None, "text/plain").await);
}
