//! Sends one judgment request to an OpenAI-compatible endpoint.
//!
//! INTERVIEW_BASE_URL=http://localhost:8000/v1 INTERVIEW_MODEL=my-model \
//!   cargo run --example live_backend

use interview_core::backend::{tag, BackendRequest, Purpose};
use interview_core::{LanguageBackend, LiveBackend, LiveConfig};

fn main() {
    let mut config = LiveConfig::default();
    if let Ok(url) = std::env::var("INTERVIEW_BASE_URL") {
        config.base_url = url;
    }
    if let Ok(model) = std::env::var("INTERVIEW_MODEL") {
        config.model = model;
    }
    config.max_retries = 1;
    let backend = LiveBackend::new(config);
    let request = BackendRequest::new(
        Purpose::Judge,
        "Criterion: excessive worry. Participant reply: \"I worry about everything.\" \
         Answer with VERDICT=MET|NOT_MET|AMBIGUOUS; SPAN=<start>-<end>|-; WHY=<reason>",
    )
    .tag(tag::NODE, "N1a");
    match backend.complete(&request) {
        Ok(r) => println!("{}\nparsed: {:?}", r.text, r.structured),
        Err(e) => println!("backend error: {e}"),
    }
}
