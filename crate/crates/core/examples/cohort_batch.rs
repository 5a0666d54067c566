//! Runs the forty-persona cohort under the mock backend, then again with one
//! criterion's judge phrases labeled backwards.

use interview_core::backend::{configure_mock, MockTables};
use interview_core::metrics::cohort_metrics;
use interview_core::persona::{cohort::rule_faithful_cohort, run_batch};
use interview_core::{Engine, EngineConfig, MockBackend, Mode};

fn main() {
    let engine = Engine::bundled();
    let cohort = rule_faithful_cohort();
    let config = EngineConfig::default();

    let clean = run_batch(&engine, &cohort, &MockBackend::bundled(), &config, Mode::Psycot, 4);
    for (name, err) in &clean.failures {
        println!("failed {name}: {err}");
    }
    for pair in clean.pooled().iter().filter(|p| p.reference != p.predicted) {
        println!("mismatch {} ref {:?} pred {:?}", pair.id, pair.reference, pair.predicted);
    }
    println!("clean cohort\n{}", cohort_metrics(&clean.pooled()).expect("non-empty").table());

    let mut tables = MockTables::bundled();
    tables.mislabel("ra4");
    let corrupted = run_batch(&engine, &cohort, &configure_mock(tables), &config, Mode::Psycot, 4);
    println!("ra4 mislabeled\n{}", cohort_metrics(&corrupted.pooled()).expect("non-empty").table());
}

