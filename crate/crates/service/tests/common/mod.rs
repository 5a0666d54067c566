#![allow(dead_code)]

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use interview_core::persona::PersonaRunner;
use interview_core::{Catalog, EngineAction, LanguageBackend, PersonaProfile};
use interview_service::api::ActionPayload;
use interview_service::{router, AppState, MemoryStore, SessionStore};
use serde_json::Value;
use tower::ServiceExt;

pub struct Reply {
    pub status: StatusCode,
    pub content_type: String,
    pub body: Vec<u8>,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_slice(&self.body).expect("json body")
    }

    pub fn text(&self) -> String {
        String::from_utf8(self.body.clone()).expect("utf-8 body")
    }

    pub fn error_code(&self) -> String {
        self.json()["error"]["code"].as_str().unwrap_or_default().to_string()
    }
}

#[derive(Clone)]
pub struct Client {
    pub app: Router,
}

impl Client {
    pub fn new(state: AppState) -> Self {
        Self { app: router(state) }
    }

    pub fn memory(backend: Arc<dyn LanguageBackend>) -> Self {
        Self::new(AppState::new(backend, Arc::new(MemoryStore::new())))
    }

    pub fn with_store(backend: Arc<dyn LanguageBackend>, store: Arc<dyn SessionStore>) -> Self {
        Self::new(AppState::new(backend, store))
    }

    pub async fn send(&self, method: &str, uri: &str, body: Option<Value>, headers: &[(&str, &str)]) -> Reply {
        let mut req = Request::builder().method(method).uri(uri);
        for (k, v) in headers {
            req = req.header(*k, *v);
        }
        let body = match body {
            Some(v) => {
                req = req.header("content-type", "application/json");
                Body::from(v.to_string())
            }
            None => Body::empty(),
        };
        let resp = self.app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
        let status = resp.status();
        let content_type = resp
            .headers()
            .get("content-type")
            .and_then(|v| v.to_str().ok())
            .unwrap_or_default()
            .to_string();
        let body = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
        Reply {
            status,
            content_type,
            body,
        }
    }

    pub async fn get(&self, uri: &str) -> Reply {
        self.send("GET", uri, None, &[]).await
    }

    pub async fn create(&self) -> ActionPayload {
        let r = self.send("POST", "/sessions", Some(serde_json::json!({})), &[]).await;
        assert_eq!(r.status, StatusCode::CREATED, "{}", r.text());
        serde_json::from_slice(&r.body).unwrap()
    }

    pub async fn message(&self, id: &str, text: &str) -> Reply {
        let body = serde_json::json!({ "text": text });
        self.send("POST", &format!("/sessions/{id}/messages"), Some(body), &[]).await
    }
}

/// Drives a persona through the API, calling `between` after every accepted
/// message; `between` may swap the client. Returns the last payload.
pub async fn drive(
    client: &mut Client,
    start: ActionPayload,
    runner: &mut PersonaRunner<'_>,
    mut between: impl FnMut(usize, &mut Client),
) -> ActionPayload {
    let mut at = start;
    let mut n = 0;
    while at.action != EngineAction::DiagnosisReady {
        let reply = runner.respond(&at.action).expect("persona replies");
        let r = client.message(&at.session_id, &reply).await;
        assert_eq!(r.status, StatusCode::OK, "{}", r.text());
        at = serde_json::from_slice(&r.body).unwrap();
        n += 1;
        between(n, client);
        assert!(n < 500, "session did not finish");
    }
    at
}

pub fn runner(profile: &PersonaProfile) -> PersonaRunner<'_> {
    PersonaRunner::new(profile, &Catalog::bundled().negation_cues)
}

/// Every object key in a JSON document, recursively.
pub fn keys(v: &Value, out: &mut Vec<String>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                out.push(k.clone());
                keys(x, out);
            }
        }
        Value::Array(a) => a.iter().for_each(|x| keys(x, out)),
        _ => {}
    }
}
