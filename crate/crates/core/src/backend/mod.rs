//! Language-model boundary: one completion call, a live HTTP adapter and a
//! deterministic mock.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub mod live;
pub mod mock;
pub mod verdict;

pub use live::{LiveBackend, LiveConfig};
pub use mock::{configure_mock, MockBackend, MockTables};
pub use verdict::{format_verdict, ParsedVerdict, VerdictToken};

/// Request tag keys.
pub mod tag {
    pub const NODE: &str = "node";
    pub const HINT: &str = "hint";
    pub const STRATEGY: &str = "strategy";
    pub const CHECK: &str = "check";
    pub const KEYWORDS: &str = "keywords";
    pub const CANONICAL: &str = "canonical";
    pub const MODE: &str = "mode";
    pub const CRITERION: &str = "criterion";
}

pub const DEFAULT_TEMPERATURE: f32 = 0.7;
pub const DEFAULT_MAX_TOKENS: u32 = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Purpose {
    Judge,
    Question,
    Anchor,
    Persona,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Speaker {
    Interviewer,
    Participant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextTurn {
    pub speaker: Speaker,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendRequest {
    pub purpose: Purpose,
    pub prompt: String,
    /// Recent transcript turns, oldest first.
    pub context: Vec<ContextTurn>,
    pub temperature: f32,
    pub max_tokens: u32,
    /// Structured hints for adapters that can use them (node id, strategy,
    /// check kind). The live adapter ignores them; the mock keys on them.
    pub tags: BTreeMap<String, String>,
}

impl BackendRequest {
    pub fn new(purpose: Purpose, prompt: impl Into<String>) -> Self {
        Self {
            purpose,
            prompt: prompt.into(),
            context: Vec::new(),
            temperature: DEFAULT_TEMPERATURE,
            max_tokens: DEFAULT_MAX_TOKENS,
            tags: BTreeMap::new(),
        }
    }

    pub fn with_context(mut self, context: Vec<ContextTurn>) -> Self {
        self.context = context;
        self
    }

    pub fn tag(mut self, key: &str, value: impl Into<String>) -> Self {
        self.tags.insert(key.to_string(), value.into());
        self
    }

    pub fn get_tag(&self, key: &str) -> Option<&str> {
        self.tags.get(key).map(String::as_str)
    }

    pub fn last_text(&self) -> &str {
        self.context.last().map_or("", |t| t.text.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendResponse {
    pub text: String,
    pub structured: Option<ParsedVerdict>,
}

impl BackendResponse {
    /// Wraps completion text, parsing the verdict line for judge and anchor calls.
    pub fn from_text(purpose: Purpose, text: impl Into<String>) -> Self {
        let text = text.into();
        let structured = match purpose {
            Purpose::Judge | Purpose::Anchor => verdict::parse_verdict(purpose, &text).ok(),
            _ => None,
        };
        Self { text, structured }
    }

    pub fn verdict(&self) -> Result<&ParsedVerdict, BackendError> {
        self.structured
            .as_ref()
            .ok_or_else(|| BackendError::MalformedResponse(self.text.clone()))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BackendError {
    #[error("backend unavailable: {0}")]
    Unavailable(String),
    #[error("malformed backend response: {0}")]
    MalformedResponse(String),
}

pub trait LanguageBackend: Send + Sync {
    fn complete(&self, request: &BackendRequest) -> Result<BackendResponse, BackendError>;

    fn name(&self) -> &str {
        "backend"
    }
}

impl<B: LanguageBackend + ?Sized> LanguageBackend for Arc<B> {
    fn complete(&self, request: &BackendRequest) -> Result<BackendResponse, BackendError> {
        (**self).complete(request)
    }

    fn name(&self) -> &str {
        (**self).name()
    }
}

impl<B: LanguageBackend + ?Sized> LanguageBackend for &B {
    fn complete(&self, request: &BackendRequest) -> Result<BackendResponse, BackendError> {
        (**self).complete(request)
    }

    fn name(&self) -> &str {
        (**self).name()
    }
}

/// Wraps a backend with a switchable outage and a call counter.
pub struct Faulty<B> {
    inner: B,
    down: AtomicBool,
    fail_next: AtomicUsize,
    calls: AtomicUsize,
}

impl<B: LanguageBackend> Faulty<B> {
    pub fn new(inner: B) -> Self {
        Self {
            inner,
            down: AtomicBool::new(false),
            fail_next: AtomicUsize::new(0),
            calls: AtomicUsize::new(0),
        }
    }

    pub fn set_down(&self, down: bool) {
        self.down.store(down, Ordering::SeqCst);
    }

    /// Fails the next `n` calls, then recovers.
    pub fn fail_next(&self, n: usize) {
        self.fail_next.store(n, Ordering::SeqCst);
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl<B: LanguageBackend> LanguageBackend for Faulty<B> {
    fn complete(&self, request: &BackendRequest) -> Result<BackendResponse, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        if self.down.load(Ordering::SeqCst) {
            return Err(BackendError::Unavailable("injected outage".into()));
        }
        let pending = self
            .fail_next
            .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |n| n.checked_sub(1));
        if pending.is_ok() {
            return Err(BackendError::Unavailable("injected failure".into()));
        }
        self.inner.complete(request)
    }

    fn name(&self) -> &str {
        self.inner.name()
    }
}
