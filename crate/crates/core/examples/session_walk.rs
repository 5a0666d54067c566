//! Drives one scripted interview turn by turn and prints the transcript.

use interview_core::persona::cohort::positive;
use interview_core::persona::PersonaRunner;
use interview_core::transcript::render_transcript;
use interview_core::{Engine, EngineAction, EngineConfig, MockBackend, ModuleTag};

fn main() {
    let engine = Engine::bundled();
    let backend = MockBackend::bundled();
    let mut profile = positive(ModuleTag::GeneralizedAnxiety);
    profile.ambiguity.insert("N2".into(), 5);
    let mut persona = PersonaRunner::new(&profile, &engine.catalog().negation_cues);

    let (mut state, mut action) = engine
        .start_session("walk", EngineConfig::default(), &backend)
        .expect("session starts");
    while action != EngineAction::DiagnosisReady {
        let reply = persona.respond(&action).expect("scripted reply");
        (state, action) = engine.step(&state, &reply, &backend).expect("step");
        if let EngineAction::ModuleComplete { module, .. } = &action {
            println!("-- finished {module}");
        }
    }
    println!("{}", render_transcript(&state.transcript));
    println!("snapshot is {} bytes", state.snapshot().len());
}
