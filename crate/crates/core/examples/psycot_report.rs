//! Runs a persona through the interview and prints the diagnosis report in
//! each diagnosis mode.
//!
//! cargo run --example psycot_report -- [persona.json]

use interview_core::persona::cohort::positive;
use interview_core::persona::run_persona;
use interview_core::{Engine, EngineConfig, MockBackend, Mode, ModuleTag, PersonaProfile};

fn main() {
    let profile = match std::env::args().nth(1) {
        Some(path) => PersonaProfile::load(path.as_ref()).expect("persona file"),
        None => positive(ModuleTag::GeneralizedAnxiety),
    };
    let engine = Engine::bundled();
    let backend = MockBackend::bundled();
    for mode in [Mode::Psycot, Mode::Cot, Mode::Vanilla] {
        let run = run_persona(&engine, &profile, &backend, &EngineConfig::default(), mode).expect("run");
        println!("{}", run.report.human);
    }
}
