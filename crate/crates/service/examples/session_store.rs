//! Persists a half-finished session to a file store, reopens the file and
//! carries on from the saved snapshot.

use interview_core::persona::cohort::positive;
use interview_core::persona::PersonaRunner;
use interview_core::{Engine, EngineAction, EngineConfig, MockBackend, Mode, ModuleTag};
use interview_service::{FileStore, SessionStore, SessionStoreEntry};

fn main() {
    let dir = std::env::temp_dir().join(format!("interview-store-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("sessions.json");

    let engine = Engine::bundled();
    let backend = MockBackend::bundled();
    let profile = positive(ModuleTag::Depression);
    let mut persona = PersonaRunner::new(&profile, &engine.catalog().negation_cues);

    let store = FileStore::open(&path).unwrap();
    let (mut state, mut action) = engine.start_session("demo", EngineConfig::default(), &backend).unwrap();
    for _ in 0..5 {
        let reply = persona.respond(&action).unwrap();
        (state, action) = engine.step(&state, &reply, &backend).unwrap();
        store.put(SessionStoreEntry::new("mini", &state)).unwrap();
    }
    println!("saved after {} transcript turns to {}", state.transcript.len(), path.display());
    drop(store);

    let reopened = FileStore::open(&path).unwrap();
    let entry = reopened.get("demo").unwrap().expect("session saved");
    let mut state = engine.restore(&entry.snapshot).unwrap();
    let mut action = state.last_action.clone().expect("active session has a pending action");
    while action != EngineAction::DiagnosisReady {
        let reply = persona.respond(&action).unwrap();
        (state, action) = engine.step(&state, &reply, &backend).unwrap();
    }
    let (_, trace, _) = engine.finalize(&state, &backend, Mode::Psycot).unwrap();
    let positive = trace.module(ModuleTag::Depression).is_some_and(|m| m.positive());
    println!("resumed to the end: depression positive = {positive}");
    std::fs::remove_dir_all(&dir).ok();
}
