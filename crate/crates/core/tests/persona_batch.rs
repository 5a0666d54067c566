use std::path::Path;

use interview_core::backend::{configure_mock, MockTables};
use interview_core::metrics::write_cohort;
use interview_core::persona::cohort::{canonical_personas, clause_knockouts, positive, rule_faithful_cohort, PersonaBuilder};
use interview_core::persona::{load_dir, run_batch, run_persona, PersonaError, PersonaRunner, RunError, DEFAULT_REPLY};
use interview_core::{cohort_metrics, Engine, EngineAction, EngineConfig, Label, MockBackend, Mode, ModuleTag, NodeId, Strategy};

#[test]
fn rule_faithful_cohort_agrees_perfectly() {
    let engine = Engine::bundled();
    let cohort = rule_faithful_cohort();
    assert_eq!(cohort.len(), 40);
    let out = run_batch(&engine, &cohort, &MockBackend::bundled(), &EngineConfig::default(), Mode::Psycot, 4);
    assert!(out.failures.is_empty());
    let pooled = out.pooled();
    assert_eq!(pooled.len(), 160);
    let m = cohort_metrics(&pooled).unwrap();
    assert_eq!(m.kappa, 1.0);
    assert_eq!(m.macro_f1, 1.0);
    for pairs in out.pairs.values() {
        assert_eq!(pairs.iter().filter(|p| p.reference == Label::Case).count(), 5);
    }
}

#[test]
fn mislabeled_criterion_costs_cases_not_controls() {
    let engine = Engine::bundled();
    let mut tables = MockTables::bundled();
    tables.mislabel("ra4");
    let out = run_batch(&engine, &rule_faithful_cohort(), &configure_mock(tables), &EngineConfig::default(), Mode::Psycot, 4);
    let m = cohort_metrics(&out.pooled()).unwrap();
    assert_eq!(m.confusion.fn_, 5);
    assert_eq!(m.confusion.fp, 0);
    assert!(m.case_f1 < 1.0);
    assert!(m.control_f1 >= 0.9);
}

#[test]
fn batches_are_deterministic_and_order_preserving() {
    let engine = Engine::bundled();
    let cohort = rule_faithful_cohort();
    let backend = MockBackend::bundled();
    let a = run_batch(&engine, &cohort, &backend, &EngineConfig::default(), Mode::Psycot, 1);
    let b = run_batch(&engine, &cohort, &backend, &EngineConfig::default(), Mode::Psycot, 8);
    assert_eq!(write_cohort(&a.pooled()), write_cohort(&b.pooled()));
    let names: Vec<_> = b.runs.iter().map(|r| r.persona.clone()).collect();
    assert_eq!(names, cohort.iter().map(|p| p.name.clone()).collect::<Vec<_>>());
    for (x, y) in a.runs.iter().zip(&b.runs) {
        assert_eq!(x.report, y.report);
        assert_eq!(x.state.snapshot(), y.state.snapshot());
    }
}

#[test]
fn empty_batch_is_empty() {
    let out = run_batch(&Engine::bundled(), &[], &MockBackend::bundled(), &EngineConfig::default(), Mode::Psycot, 2);
    assert!(out.runs.is_empty() && out.failures.is_empty() && out.pairs.is_empty());
}

#[test]
fn every_clause_knockout_is_control_and_positive_is_case() {
    let engine = Engine::bundled();
    let backend = MockBackend::bundled();
    for module in ModuleTag::ALL {
        let run = run_persona(&engine, &positive(module), &backend, &EngineConfig::default(), Mode::Psycot).unwrap();
        assert!(run.trace.module(module).unwrap().positive(), "{module}");
        for k in clause_knockouts(module) {
            let run = run_persona(&engine, &k, &backend, &EngineConfig::default(), Mode::Psycot).unwrap();
            assert!(!run.trace.module(module).is_some_and(|m| m.positive()), "{}", k.name);
        }
    }
}

#[test]
fn four_symptoms_plus_core_and_impairment_is_control() {
    let engine = Engine::bundled();
    let profile = PersonaBuilder::new("four", ModuleTag::Depression)
        .affirm_all()
        .deny(&["ra3c", "ra3d", "ra3e", "ra3f", "ra3g"])
        .build();
    let run = run_persona(&engine, &profile, &MockBackend::bundled(), &EngineConfig::default(), Mode::Psycot).unwrap();
    let dep = run.trace.module(ModuleTag::Depression).unwrap();
    assert!(!dep.positive());
    assert_eq!(dep.decision.clauses[0].counted, vec![1, 2, 3, 4]);
}

#[test]
fn persona_replies() {
    let engine = Engine::bundled();
    let profile = positive(ModuleTag::Depression);
    let mut runner = PersonaRunner::new(&profile, &engine.catalog().negation_cues);
    let ask = |id: &str| EngineAction::AskQuestion {
        node: NodeId::new(id),
        utterance: "?".into(),
        strategy: Strategy::Probe,
    };
    assert!(runner.respond(&ask("a1a")).unwrap().contains("sad"));
    assert_eq!(runner.respond(&ask("F1a")).unwrap(), DEFAULT_REPLY);
    assert_eq!(runner.respond(&EngineAction::DiagnosisReady), Err(PersonaError::NothingAsked));

    let mut strict = profile.clone();
    strict.strict = true;
    let err = run_persona(&engine, &strict, &MockBackend::bundled(), &EngineConfig::default(), Mode::Psycot).unwrap_err();
    assert!(matches!(err, RunError::Persona(PersonaError::NoReplyConfigured(n)) if n.as_str() == "b1a"));
}

#[test]
fn bundled_persona_files_match_the_canonical_set() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/personas");
    let mut loaded = load_dir(&dir).unwrap();
    let mut canonical = canonical_personas();
    loaded.sort_by(|a, b| a.name.cmp(&b.name));
    canonical.sort_by(|a, b| a.name.cmp(&b.name));
    assert_eq!(loaded, canonical);
}
