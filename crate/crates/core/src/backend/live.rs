//! Blocking adapter for an OpenAI-compatible chat-completions endpoint.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tracing::{debug, warn};

use super::{BackendError, BackendRequest, BackendResponse, LanguageBackend, Purpose, Speaker};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LiveConfig {
    /// Base URL, e.g. `http://localhost:8000/v1`; `/chat/completions` is appended.
    pub base_url: String,
    pub model: String,
    /// Environment variable holding the bearer token. Unset or empty sends no header.
    pub api_key_env: String,
    pub timeout_secs: u64,
    pub max_retries: u32,
    pub backoff_ms: u64,
    pub max_in_flight: usize,
}

impl Default for LiveConfig {
    fn default() -> Self {
        Self {
            base_url: "http://127.0.0.1:8000/v1".into(),
            model: "gpt-4o-mini".into(),
            api_key_env: "INTERVIEW_API_KEY".into(),
            timeout_secs: 60,
            max_retries: 3,
            backoff_ms: 250,
            max_in_flight: 8,
        }
    }
}

struct Gate {
    used: Mutex<usize>,
    freed: Condvar,
    cap: usize,
}

impl Gate {
    fn acquire(&self) -> GateGuard<'_> {
        let mut used = self.used.lock().unwrap_or_else(|e| e.into_inner());
        while *used >= self.cap {
            used = self.freed.wait(used).unwrap_or_else(|e| e.into_inner());
        }
        *used += 1;
        GateGuard(self)
    }
}

struct GateGuard<'a>(&'a Gate);

impl Drop for GateGuard<'_> {
    fn drop(&mut self) {
        let mut used = self.0.used.lock().unwrap_or_else(|e| e.into_inner());
        *used -= 1;
        self.0.freed.notify_one();
    }
}

pub struct LiveBackend {
    config: LiveConfig,
    agent: ureq::Agent,
    gate: Gate,
}

enum Attempt {
    Retry(String),
    Fatal(String),
}

impl LiveBackend {
    pub fn new(config: LiveConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        let gate = Gate {
            used: Mutex::new(0),
            freed: Condvar::new(),
            cap: config.max_in_flight.max(1),
        };
        Self {
            config,
            agent,
            gate,
        }
    }

    pub fn config(&self) -> &LiveConfig {
        &self.config
    }

    fn system_prompt(purpose: Purpose) -> &'static str {
        match purpose {
            Purpose::Judge => {
                "You judge whether a participant reply satisfies one structured-interview criterion. \
                 Answer with exactly one line: VERDICT=<MET|NOT_MET|AMBIGUOUS>; SPAN=<start>-<end>; WHY=<reason>. \
                 SPAN gives byte offsets of the decisive words in the reply, or - if none."
            }
            Purpose::Anchor => {
                "You verify one diagnostic criterion against quoted interview evidence. \
                 End with exactly one line: VERDICT=<YES|NO|UNCERTAIN>; SPAN=<start>-<end>; WHY=<reason>."
            }
            Purpose::Question => {
                "You are a structured clinical interviewer. Ask exactly one short question \
                 that advances the current interview item. Do not diagnose."
            }
            Purpose::Persona => {
                "You role-play an interview participant described in the prompt. Reply in one or two sentences."
            }
        }
    }

    fn body(&self, req: &BackendRequest) -> Value {
        let mut messages = vec![json!({"role": "system", "content": Self::system_prompt(req.purpose)})];
        for turn in &req.context {
            let role = match turn.speaker {
                Speaker::Interviewer => "assistant",
                Speaker::Participant => "user",
            };
            messages.push(json!({"role": role, "content": turn.text}));
        }
        messages.push(json!({"role": "user", "content": req.prompt}));
        json!({
            "model": self.config.model,
            "messages": messages,
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
        })
    }

    fn attempt(&self, url: &str, body: &Value) -> Result<String, Attempt> {
        let mut call = self.agent.post(url);
        if let Ok(key) = std::env::var(&self.config.api_key_env) {
            if !key.is_empty() {
                call = call.header("Authorization", &format!("Bearer {key}"));
            }
        }
        let mut response = call
            .send_json(body)
            .map_err(|e| Attempt::Retry(e.to_string()))?;
        let status = response.status().as_u16();
        if status == 429 || status >= 500 {
            return Err(Attempt::Retry(format!("status {status}")));
        }
        if status >= 400 {
            return Err(Attempt::Fatal(format!("status {status}")));
        }
        let payload: Value = response
            .body_mut()
            .read_json()
            .map_err(|e| Attempt::Fatal(format!("bad completion payload: {e}")))?;
        payload["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| Attempt::Fatal("completion payload lacks message content".into()))
    }
}

impl LanguageBackend for LiveBackend {
    fn complete(&self, req: &BackendRequest) -> Result<BackendResponse, BackendError> {
        if req.prompt.trim().is_empty() {
            return Err(BackendError::MalformedResponse("empty prompt".into()));
        }
        let url = format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'));
        let body = self.body(req);
        let _slot = self.gate.acquire();
        let mut delay = Duration::from_millis(self.config.backoff_ms);
        let mut last = String::new();
        for attempt in 0..=self.config.max_retries {
            match self.attempt(&url, &body) {
                Ok(text) => {
                    debug!(purpose = ?req.purpose, attempt, "completion received");
                    return Ok(BackendResponse::from_text(req.purpose, text));
                }
                Err(Attempt::Fatal(msg)) => return Err(BackendError::Unavailable(msg)),
                Err(Attempt::Retry(msg)) => {
                    warn!(attempt, error = %msg, "transient backend failure");
                    last = msg;
                    if attempt < self.config.max_retries {
                        std::thread::sleep(delay);
                        delay *= 2;
                    }
                }
            }
        }
        Err(BackendError::Unavailable(last))
    }

    fn name(&self) -> &str {
        "live"
    }
}
