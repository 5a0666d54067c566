//! Checks and generators shared by the test suites.

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::Rng;
use serde_json::Value;

use crate::psycot::anchor::{AnchorChecks, ExclusionCheck, ExistenceCheck, TemporalCheck};
use crate::psycot::{
    synthesize, CheckOutcome, ClauseBinding, CriterionBinding, Deviation, DeviationKind, EvidenceRef, Mode,
    ModuleTrace, PsyCoTTrace, SymptomRecord, TRACE_SCHEMA_VERSION,
};
use crate::rules::{rule_for, SymptomStatus};
use crate::transcript::Turn;
use crate::tree::{InterviewTree, ModuleTag, NodeId, NodeKind, Target, Verdict, ViolationKind, BUNDLED_TREE};

/// Defect kinds that can be seeded into the bundled tree one at a time.
pub const SEEDABLE: [ViolationKind; 5] = [
    ViolationKind::UnreachableNode,
    ViolationKind::Cycle,
    ViolationKind::MissingConclusiveBranch,
    ViolationKind::SuicideRouteBroken,
    ViolationKind::SkippableMandatoryNode,
];

fn node_mut<'a>(doc: &'a mut Value, id: &str) -> &'a mut Value {
    doc["nodes"]
        .as_array_mut()
        .expect("nodes array")
        .iter_mut()
        .find(|n| n["id"] == id)
        .expect("bundled node")
}

/// The bundled tree document with exactly one structural defect.
pub fn seed_defect(kind: ViolationKind) -> Option<String> {
    let mut doc: Value = serde_json::from_str(BUNDLED_TREE).expect("bundled tree is JSON");
    match kind {
        ViolationKind::UnreachableNode => {
            doc["nodes"].as_array_mut()?.push(serde_json::json!({
                "id": "zz1",
                "module": "social_anxiety",
                "kind": "screening",
                "canonical": "orphan",
                "hint": "never asked",
                "branches": {"met": "TERMINAL", "not_met": "TERMINAL"}
            }));
        }
        ViolationKind::Cycle => {
            node_mut(&mut doc, "F5")["branches"]["met"] = "F3".into();
        }
        ViolationKind::MissingConclusiveBranch => {
            node_mut(&mut doc, "F5")["branches"]
                .as_object_mut()?
                .remove("not_met");
        }
        ViolationKind::SuicideRouteBroken => {
            doc["suicide_gate"] = "N1a".into();
        }
        ViolationKind::SkippableMandatoryNode => {
            node_mut(&mut doc, "A3a")["branches"]["not_met"] = "ra3a".into();
        }
        _ => return None,
    }
    Some(serde_json::to_string_pretty(&doc).expect("document serializes"))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Walk {
    /// Non-terminal nodes in visit order.
    pub visited: Vec<NodeId>,
    pub outcomes: Vec<Verdict>,
    pub terminated: bool,
}

/// Follows conclusive outcomes from the entry, giving up after `|nodes| + 1` steps.
pub fn walk(tree: &InterviewTree, mut outcome: impl FnMut(&NodeId) -> Verdict) -> Walk {
    let mut at = tree.entry.clone();
    let mut w = Walk {
        visited: Vec::new(),
        outcomes: Vec::new(),
        terminated: false,
    };
    for _ in 0..=tree.len() {
        let node = tree.node(&at).expect("walk stays in tree");
        if node.is_terminal() {
            w.terminated = true;
            return w;
        }
        w.visited.push(at.clone());
        let v = outcome(&at);
        w.outcomes.push(v);
        match node.branches.get(v) {
            Some(Target::Node(next)) => at = next.clone(),
            _ => {
                w.terminated = true;
                return w;
            }
        }
    }
    w
}

/// Broken guarantees along one walk: length bound, mandatory coverage of
/// entered modules, and suicide routing.
pub fn walk_violations(tree: &InterviewTree, w: &Walk) -> Vec<String> {
    let mut out = Vec::new();
    if !w.terminated || w.visited.len() > tree.len() {
        out.push(format!("walk did not terminate within {} steps", tree.len()));
    }
    let seen: BTreeSet<&NodeId> = w.visited.iter().collect();
    let entered: BTreeSet<ModuleTag> = w
        .visited
        .iter()
        .filter_map(|id| tree.node(id))
        .filter(|n| n.kind == NodeKind::Symptom)
        .map(|n| n.module)
        .collect();
    for n in tree.nodes() {
        if n.mandatory && entered.contains(&n.module) && !seen.contains(&n.id) {
            out.push(format!("mandatory node {} skipped", n.id));
        }
    }
    if let Some(gate) = &tree.suicide_gate {
        for (i, id) in w.visited.iter().enumerate() {
            if id == gate && w.outcomes[i] == Verdict::Met {
                let enters = w.visited[i + 1..]
                    .first()
                    .and_then(|next| tree.node(next))
                    .is_some_and(|n| n.module == ModuleTag::Suicide);
                if !enters {
                    out.push("suicide gate Met did not enter the suicide module".into());
                }
            }
        }
    }
    out
}

/// Soundness of a trace: every Yes record quotes the transcript verbatim and,
/// in psycot mode, no check on it failed. Also checks that only psycot mode
/// records checks and that positive decisions bind evidence for every
/// counted criterion.
pub fn soundness_violations(trace: &PsyCoTTrace, transcript: &[Turn]) -> Vec<String> {
    let mut out = Vec::new();
    for m in &trace.modules {
        for r in &m.criteria {
            let has_checks = r.checks.is_some();
            let wrong = match trace.mode {
                Mode::Vanilla | Mode::Cot => has_checks,
                Mode::Psycot => r.status != SymptomStatus::Uncertain && !has_checks,
            };
            if wrong {
                out.push(format!("{} criterion {}: checks present={has_checks} in {:?} mode", m.module, r.criterion, trace.mode));
            }
        }
        for b in &m.bindings {
            for i in &b.criteria {
                let bound = b.evidence.iter().any(|e| {
                    e.verify(transcript)
                        && m.criteria.iter().any(|r| r.criterion == *i && r.evidence.contains(e))
                });
                if !bound {
                    out.push(format!("{} clause {}: criterion {i} has no bound quote", m.module, b.clause));
                }
            }
        }
        for r in m.criteria.iter().filter(|r| r.status == SymptomStatus::Yes) {
            let at = format!("{} criterion {}", m.module, r.criterion);
            if r.evidence.is_empty() {
                out.push(format!("{at}: Yes without evidence"));
            }
            for e in &r.evidence {
                if !e.verify(transcript) {
                    out.push(format!("{at}: quote {:?} not found at turn {}", e.quote, e.turn));
                }
            }
            if trace.mode == Mode::Psycot {
                match &r.checks {
                    None => out.push(format!("{at}: no checks recorded")),
                    Some(c) => {
                        if c.temporal.outcome == CheckOutcome::Failed || c.exclusion.outcome == CheckOutcome::Failed {
                            out.push(format!("{at}: Yes despite a failed check"));
                        }
                    }
                }
            }
        }
    }
    out
}

const WORDS: [&str; 12] = [
    "worry", "sleep", "\"quoted\"", "naïve", "tab\there", "line\nbreak", "émigré", "{braces}", "50%", "a|b", "[x]", "ok",
];

fn text(rng: &mut impl Rng) -> String {
    let n = rng.random_range(0..6);
    (0..n).map(|_| *WORDS.choose(rng).expect("non-empty")).collect::<Vec<_>>().join(" ")
}

fn outcome(rng: &mut impl Rng) -> CheckOutcome {
    *[CheckOutcome::Passed, CheckOutcome::Failed, CheckOutcome::NotApplicable]
        .choose(rng)
        .expect("non-empty")
}

fn evidence(rng: &mut impl Rng) -> Vec<EvidenceRef> {
    (0..rng.random_range(0..3))
        .map(|_| {
            let start = rng.random_range(0..40);
            EvidenceRef {
                turn: rng.random_range(0..80),
                start,
                end: start + rng.random_range(0..40),
                quote: text(rng),
            }
        })
        .collect()
}

fn checks(rng: &mut impl Rng) -> AnchorChecks {
    AnchorChecks {
        existence: ExistenceCheck {
            confirmed: rng.random(),
            rationale: text(rng),
        },
        temporal: TemporalCheck {
            outcome: outcome(rng),
            frequency: (0..rng.random_range(0..3)).map(|_| text(rng)).collect(),
            span: (0..rng.random_range(0..2)).map(|_| text(rng)).collect(),
            rate_per_week: rng.random_bool(0.5).then(|| rng.random_range(0.0..7.0)),
            span_days: rng.random_bool(0.5).then(|| rng.random_range(0.0..1000.0)),
            note: text(rng),
        },
        exclusion: ExclusionCheck {
            outcome: outcome(rng),
            rationale: text(rng),
        },
    }
}

/// A structurally plausible trace with arbitrary content.
pub fn random_trace(rng: &mut impl Rng) -> PsyCoTTrace {
    let mode = *[Mode::Vanilla, Mode::Cot, Mode::Psycot].choose(rng).expect("non-empty");
    let picked: Vec<ModuleTag> = ModuleTag::ALL.into_iter().filter(|_| rng.random_bool(0.7)).collect();
    let modules = picked
        .into_iter()
        .map(|module| {
            let rule = rule_for(module);
            let criteria: Vec<SymptomRecord> = (1..=rule.arity)
                .map(|criterion| SymptomRecord {
                    module,
                    criterion,
                    label: text(rng),
                    node: rng.random_bool(0.8).then(|| NodeId::new(format!("n{criterion}"))),
                    status: *SymptomStatus::ALL.choose(rng).expect("non-empty"),
                    checks: (mode == Mode::Psycot && rng.random_bool(0.8)).then(|| checks(rng)),
                    evidence: evidence(rng),
                    rationale: text(rng),
                })
                .collect();
            let (decision, status_vector) = synthesize(&criteria, &rule);
            let bindings = decision
                .clauses
                .iter()
                .filter(|c| c.satisfied)
                .map(|c| ClauseBinding {
                    clause: c.clause.describe(),
                    criteria: c.counted.clone(),
                    evidence: evidence(rng),
                    notes: (0..rng.random_range(0..3)).map(|_| text(rng)).collect(),
                    uncertain: Vec::new(),
                })
                .collect();
            ModuleTrace {
                module,
                heading: format!("{} ({})", text(rng), module),
                decision,
                status_vector,
                criteria,
                bindings,
                supplementary: (0..rng.random_range(0..2))
                    .map(|_| CriterionBinding {
                        criterion: rng.random_range(1..=rule.arity),
                        evidence: evidence(rng),
                    })
                    .collect(),
                deviations: (0..rng.random_range(0..2))
                    .map(|_| Deviation {
                        kind: if rng.random() {
                            DeviationKind::ForcedChoiceDefault
                        } else {
                            DeviationKind::LateIdeationDisclosure
                        },
                        module,
                        node: NodeId::new("n1"),
                        turn: rng.random_range(0..80),
                        detail: text(rng),
                    })
                    .collect(),
            }
        })
        .collect();
    PsyCoTTrace {
        schema_version: TRACE_SCHEMA_VERSION,
        mode,
        modules,
    }
}
