//! One PASS/FAIL line per acceptance criterion. Run with `--nocapture` to see them.

mod common;

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use common::{drive, runner, Client};
use interview_core::backend::{configure_mock, MockTables};
use interview_core::metrics::{cohort_metrics, Label, LabeledPair};
use interview_core::persona::cohort::{canonical_personas, positive, rule_faithful_cohort};
use interview_core::persona::{run_batch, run_persona, PersonaRunner, VAGUE_REPLIES};
use interview_core::psycot::parse_report;
use interview_core::rules::{all_status_vectors, oracle::enumerate_oracle};
use interview_core::testing::{random_trace, seed_defect, soundness_violations, walk, walk_violations, SEEDABLE};
use interview_core::tree::{bundled_tree, parse_tree, Verdict};
use interview_core::{
    evaluate_rule, render_report, rule_for, validate_tree, Catalog, Engine, EngineAction, EngineConfig, MockBackend,
    Mode, ModuleTag, NodeId,
};
use interview_service::{FileStore, SessionStore};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn rule_oracle() -> Check {
    let started = Instant::now();
    let mut vectors = 0;
    for m in ModuleTag::ALL {
        let rule = rule_for(m);
        let oracle = enumerate_oracle(&rule).map_err(|e| e.to_string())?;
        for v in all_status_vectors(rule.arity) {
            let got = evaluate_rule(&rule, &v).map_err(|e| e.to_string())?.positive;
            ensure(got == oracle[&v], format!("{m} mismatch at {v:?}"))?;
            vectors += 1;
        }
    }
    let took = started.elapsed();
    ensure(took < Duration::from_secs(10), format!("took {took:?}"))?;
    Ok(format!("{vectors} vectors, 0 mismatches, {:.2}s", took.as_secs_f64()))
}

fn forced_choice() -> Check {
    let engine = Engine::bundled();
    let backend = MockBackend::bundled();
    for t in [1u32, 2, 5] {
        let mut profile = positive(ModuleTag::GeneralizedAnxiety);
        profile.ambiguity.insert("N2".into(), t);
        let config = EngineConfig {
            threshold: t,
            ..EngineConfig::default()
        };
        let mut persona = PersonaRunner::new(&profile, &engine.catalog().negation_cues);
        let (mut state, mut action) = engine.start_session("fc", config, &backend).map_err(|e| e.to_string())?;
        while action.node().map(NodeId::as_str) != Some("N2") {
            let reply = persona.respond(&action).map_err(|e| e.to_string())?;
            (state, action) = engine.step(&state, &reply, &backend).map_err(|e| e.to_string())?;
        }
        for turn in 1..=t {
            let reply = persona.respond(&action).map_err(|e| e.to_string())?;
            ensure(VAGUE_REPLIES.contains(&reply.as_str()), "persona reply was not ambiguous")?;
            (state, action) = engine.step(&state, &reply, &backend).map_err(|e| e.to_string())?;
            let forced = matches!(action, EngineAction::PresentForcedChoice { .. });
            ensure(forced == (turn == t), format!("t={t}: turn {turn} forced={forced}"))?;
        }
        let reply = persona.respond(&action).map_err(|e| e.to_string())?;
        (state, action) = engine.step(&state, &reply, &backend).map_err(|e| e.to_string())?;
        ensure(action.node().map(NodeId::as_str) == Some("N3a"), format!("t={t}: no transition after the choice"))?;
        let conclusive = state
            .record(ModuleTag::GeneralizedAnxiety, 4)
            .is_some_and(|r| r.verdict == Verdict::Met);
        ensure(conclusive, format!("t={t}: N2 not recorded Met"))?;
    }
    Ok("t in {1,2,5}: forced choice on turn t, conclusive on t+1".into())
}

fn navigation() -> Check {
    let tree = bundled_tree();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut gate_hits = 0;
    for i in 0..1000 {
        let w = walk(&tree, |_| if rng.random_bool(0.5) { Verdict::Met } else { Verdict::NotMet });
        let v = walk_violations(&tree, &w);
        ensure(v.is_empty(), format!("walk {i}: {v:?}"))?;
        if let Some(gate) = &tree.suicide_gate {
            gate_hits += w
                .visited
                .iter()
                .zip(&w.outcomes)
                .filter(|(n, o)| *n == gate && **o == Verdict::Met)
                .count();
        }
    }
    Ok(format!("1000 walks clean, {gate_hits} suicide-gate Met routed"))
}

fn end_to_end() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let personas = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/personas");
    let mut slowest = Duration::ZERO;
    let profiles = canonical_personas();
    ensure(profiles.len() == 8, "canonical set is not 8 personas")?;
    for p in &profiles {
        let file = personas.join(format!("{}.json", p.name));
        let mut outputs = Vec::new();
        for run in 0..2 {
            let out = dir.path().join(format!("{}-{run}", p.name));
            let started = Instant::now();
            let o = Command::new(env!("CARGO_BIN_EXE_interview"))
                .args(["interview", "run", "mini", "--mock", "--persona"])
                .arg(&file)
                .arg("--out")
                .arg(&out)
                .output()
                .map_err(|e| e.to_string())?;
            let took = started.elapsed();
            slowest = slowest.max(took);
            ensure(o.status.success(), format!("{}: {}", p.name, String::from_utf8_lossy(&o.stderr)))?;
            ensure(took < Duration::from_secs(1), format!("{} took {took:?}", p.name))?;
            let mut files = vec![o.stdout];
            for f in ["transcript.json", "trace.json", "report.txt"] {
                files.push(std::fs::read(out.join(f)).map_err(|e| e.to_string())?);
            }
            outputs.push(files);
        }
        ensure(outputs[0] == outputs[1], format!("{} differs between runs", p.name))?;
    }
    Ok(format!("8 personas byte-identical twice, slowest run {} ms", slowest.as_millis()))
}

fn cohort() -> Check {
    let engine = Engine::bundled();
    let profiles = rule_faithful_cohort();
    let config = EngineConfig::default();
    let clean = run_batch(&engine, &profiles, &MockBackend::bundled(), &config, Mode::Psycot, 4);
    ensure(clean.failures.is_empty(), format!("failures {:?}", clean.failures))?;
    let m = cohort_metrics(&clean.pooled()).map_err(|e| e.to_string())?;
    ensure(m.kappa == 1.0 && m.macro_f1 == 1.0, format!("clean kappa {} macro {}", m.kappa, m.macro_f1))?;

    let mut tables = MockTables::bundled();
    tables.mislabel("ra4");
    let bad = run_batch(&engine, &profiles, &configure_mock(tables), &config, Mode::Psycot, 4);
    let c = cohort_metrics(&bad.pooled()).map_err(|e| e.to_string())?;
    ensure(c.case_f1 < m.case_f1, format!("case F1 did not drop: {}", c.case_f1))?;
    ensure(c.control_f1 >= 0.9, format!("control F1 {}", c.control_f1))?;
    Ok(format!(
        "{} personas kappa 1.000 macro-F1 1.000; ra4 mislabeled: case F1 {:.3}, control F1 {:.3}",
        profiles.len(),
        c.case_f1,
        c.control_f1
    ))
}

fn metrics() -> Check {
    let mut pairs = Vec::new();
    for (n, r, p) in [
        (40, Label::Case, Label::Case),
        (10, Label::Case, Label::Control),
        (5, Label::Control, Label::Case),
        (45, Label::Control, Label::Control),
    ] {
        for _ in 0..n {
            pairs.push(LabeledPair {
                id: pairs.len().to_string(),
                reference: r,
                predicted: p,
            });
        }
    }
    let m = cohort_metrics(&pairs).map_err(|e| e.to_string())?;
    ensure((m.kappa - 0.7).abs() <= 1e-9, format!("kappa {}", m.kappa))?;
    ensure((m.macro_f1 - 0.8496).abs() <= 1e-4, format!("macro {}", m.macro_f1))?;
    ensure(m.accuracy == 0.85, format!("accuracy {}", m.accuracy))?;

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for i in 0..100 {
        let n = rng.random_range(2..60);
        let pick = |rng: &mut ChaCha8Rng| if rng.random() { Label::Case } else { Label::Control };
        let cohort: Vec<LabeledPair> = (0..n)
            .map(|j| LabeledPair {
                id: j.to_string(),
                reference: pick(&mut rng),
                predicted: pick(&mut rng),
            })
            .collect();
        let swapped: Vec<LabeledPair> = cohort
            .iter()
            .map(|p| LabeledPair {
                id: p.id.clone(),
                reference: p.reference.flip(),
                predicted: p.predicted.flip(),
            })
            .collect();
        let a = cohort_metrics(&cohort).map_err(|e| e.to_string())?;
        let b = cohort_metrics(&swapped).map_err(|e| e.to_string())?;
        let same = (a.kappa - b.kappa).abs() < 1e-12
            && (a.macro_f1 - b.macro_f1).abs() < 1e-12
            && (a.case_f1 - b.control_f1).abs() < 1e-12
            && (a.control_f1 - b.case_f1).abs() < 1e-12;
        ensure(same, format!("cohort {i} not swap-symmetric"))?;
    }
    Ok("fixture kappa 0.700, macro-F1 0.8496, accuracy 0.85; 100 swapped cohorts symmetric".into())
}

fn psycot_soundness() -> Check {
    let engine = Engine::bundled();
    let backend = MockBackend::bundled();
    let config = EngineConfig::default();
    let mut profiles = rule_faithful_cohort();
    profiles.extend(canonical_personas());
    let mut sessions = 0;
    for mode in [Mode::Vanilla, Mode::Cot, Mode::Psycot] {
        for p in &profiles {
            let run = run_persona(&engine, p, &backend, &config, mode).map_err(|e| format!("{}: {e}", p.name))?;
            let v = soundness_violations(&run.trace, run.transcript());
            ensure(v.is_empty(), format!("{} {mode:?}: {v:?}", p.name))?;
            sessions += 1;
        }
    }
    let catalog = Catalog::bundled();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for i in 0..100 {
        let trace = random_trace(&mut rng);
        let back = parse_report(&render_report(&trace, &catalog).machine).map_err(|e| e.to_string())?;
        ensure(back == trace, format!("trace {i} did not round-trip"))?;
    }
    Ok(format!("{sessions} sessions sound; 100 random traces round-trip"))
}

fn validator() -> Check {
    ensure(validate_tree(&bundled_tree()).is_valid(), "bundled tree has violations")?;
    for kind in SEEDABLE {
        let doc = seed_defect(kind).ok_or("defect not seedable")?;
        let tree = parse_tree(&doc).map_err(|e| e.to_string())?;
        let kinds = validate_tree(&tree).kinds();
        ensure(kinds == BTreeSet::from([kind]), format!("{kind:?} gave {kinds:?}"))?;
    }
    Ok("bundled clean; 5 seeded defects each yield exactly their kind".into())
}

async fn service() -> Check {
    let profile = positive(ModuleTag::GeneralizedAnxiety);
    let mock = || Arc::new(MockBackend::bundled());

    let mut plain = Client::memory(mock());
    let start = plain.create().await;
    let id = start.session_id.clone();
    let mut persona = runner(&profile);
    let end = drive(&mut plain, start, &mut persona, |_, _| {}).await;
    ensure(end.action == EngineAction::DiagnosisReady, "flow did not reach the diagnosis")?;
    let expected = plain.get(&format!("/sessions/{id}/report")).await.json()["report"].clone();
    ensure(expected.is_object(), "no report")?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("sessions.json");
    let open = |p: &Path| -> Arc<dyn SessionStore> { Arc::new(FileStore::open(p).expect("store opens")) };
    let mut c = Client::with_store(mock(), open(&path));
    let start = c.create().await;
    let id = start.session_id.clone();
    let mut persona = runner(&profile);
    let mut crashed = false;
    drive(&mut c, start, &mut persona, |n, client| {
        if n == 10 {
            crashed = true;
            *client = Client::with_store(mock(), open(&path));
        }
    })
    .await;
    ensure(crashed, "session ended before the crash point")?;
    let restored = c.get(&format!("/sessions/{id}/report")).await.json()["report"].clone();
    ensure(restored == expected, "restored session produced a different report")?;
    Ok(format!("{} turns over HTTP; crash at turn 10 restored to the same report", end.turn))
}

#[tokio::test(flavor = "multi_thread")]
async fn acceptance() {
    let blocking: [Criterion; 8] = [
        ("rule-oracle equivalence", rule_oracle),
        ("forced-choice trigger", forced_choice),
        ("navigation guarantees", navigation),
        ("end-to-end determinism", end_to_end),
        ("desk-scale cohort", cohort),
        ("metric correctness", metrics),
        ("psycot soundness", psycot_soundness),
        ("tree validator", validator),
    ];
    let mut results = Vec::new();
    for (name, check) in blocking {
        let r = tokio::task::spawn_blocking(check).await.expect("check panicked");
        results.push((name, r));
    }
    results.push(("service", service().await));

    let mut failed = 0;
    for (name, r) in &results {
        match r {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    assert_eq!(failed, 0, "{failed} acceptance criteria failed");
}
