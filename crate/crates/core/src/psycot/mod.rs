//! Diagnosis in three phases: symptom anchoring, diagnostic synthesis and
//! evidence binding, producing an auditable trace.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{BackendError, LanguageBackend};
use crate::catalog::Catalog;
use crate::rules::{evaluate_rule, rule_for, DiagnosisDecision, DiagnosisRule, SymptomStatus};
use crate::session::SessionState;
use crate::transcript::Turn;
use crate::tree::{InterviewTree, ModuleTag, NodeId};

pub mod anchor;
pub mod report;

pub use anchor::{anchor_symptom, AnchorChecks, AnchorInput, ExclusionCheck, ExistenceCheck, TemporalCheck};
pub use report::{parse_report, render_report, DiagnosisReport};

pub const TRACE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// One status call per criterion.
    Vanilla,
    /// One status call per criterion with free-form reasoning.
    Cot,
    /// Explicit existence, timing and exclusion checks.
    #[default]
    Psycot,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "vanilla" => Ok(Mode::Vanilla),
            "cot" => Ok(Mode::Cot),
            "psycot" => Ok(Mode::Psycot),
            other => Err(format!("unknown mode {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckOutcome {
    Passed,
    Failed,
    NotApplicable,
}

/// A verbatim quote from one transcript turn.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EvidenceRef {
    pub turn: usize,
    pub start: usize,
    pub end: usize,
    pub quote: String,
}

impl EvidenceRef {
    pub fn verify(&self, transcript: &[Turn]) -> bool {
        transcript
            .get(self.turn)
            .and_then(|t| t.text.get(self.start..self.end))
            .is_some_and(|s| s == self.quote)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymptomRecord {
    pub module: ModuleTag,
    pub criterion: usize,
    pub label: String,
    pub node: Option<NodeId>,
    pub status: SymptomStatus,
    /// Present only in psycot mode.
    pub checks: Option<AnchorChecks>,
    pub evidence: Vec<EvidenceRef>,
    pub rationale: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviationKind {
    /// A forced choice went unanswered and NotMet was recorded.
    ForcedChoiceDefault,
    /// Suicidal ideation mentioned after the suicide gate had been passed.
    LateIdeationDisclosure,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Deviation {
    pub kind: DeviationKind,
    pub module: ModuleTag,
    pub node: NodeId,
    pub turn: usize,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClauseBinding {
    pub clause: String,
    pub criteria: Vec<usize>,
    pub evidence: Vec<EvidenceRef>,
    /// How timing and exclusion rules applied to the counted criteria.
    pub notes: Vec<String>,
    /// Criteria in the clause left Uncertain.
    pub uncertain: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriterionBinding {
    pub criterion: usize,
    pub evidence: Vec<EvidenceRef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuleTrace {
    pub module: ModuleTag,
    pub heading: String,
    pub decision: DiagnosisDecision,
    pub status_vector: Vec<SymptomStatus>,
    pub criteria: Vec<SymptomRecord>,
    /// One entry per satisfied clause of a positive decision.
    pub bindings: Vec<ClauseBinding>,
    /// Yes criteria not covered by a clause binding.
    pub supplementary: Vec<CriterionBinding>,
    pub deviations: Vec<Deviation>,
}

impl ModuleTrace {
    pub fn positive(&self) -> bool {
        self.decision.positive
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsyCoTTrace {
    pub schema_version: u32,
    pub mode: Mode,
    pub modules: Vec<ModuleTrace>,
}

impl PsyCoTTrace {
    pub fn module(&self, tag: ModuleTag) -> Option<&ModuleTrace> {
        self.modules.iter().find(|m| m.module == tag)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PsyCoTError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("evidence for {module} criterion {criterion} at turn {turn} is not in the transcript")]
    DanglingEvidence {
        module: ModuleTag,
        criterion: usize,
        turn: usize,
    },
    #[error("catalog has no entry for {0}")]
    MissingDisorder(ModuleTag),
}

/// Status vector from records (missing indices are Uncertain) and the rule's decision.
pub fn synthesize(records: &[SymptomRecord], rule: &DiagnosisRule) -> (DiagnosisDecision, Vec<SymptomStatus>) {
    let mut vector = vec![SymptomStatus::Uncertain; rule.arity];
    for r in records {
        if (1..=rule.arity).contains(&r.criterion) {
            vector[r.criterion - 1] = r.status;
        }
    }
    let decision = evaluate_rule(rule, &vector).expect("vector built at rule arity");
    (decision, vector)
}

fn check_notes(record: &SymptomRecord) -> Vec<String> {
    let Some(checks) = &record.checks else {
        return Vec::new();
    };
    let mut notes = Vec::new();
    if checks.temporal.outcome != CheckOutcome::NotApplicable {
        notes.push(format!(
            "criterion {} timing {:?}: {}",
            record.criterion, checks.temporal.outcome, checks.temporal.note
        ));
    }
    if checks.exclusion.outcome != CheckOutcome::NotApplicable {
        notes.push(format!(
            "criterion {} exclusion {:?}: {}",
            record.criterion, checks.exclusion.outcome, checks.exclusion.rationale
        ));
    }
    notes
}

/// Verifies every quote against the transcript and links satisfied clauses to
/// the evidence of the criteria they counted.
pub fn bind_evidence(trace: &mut ModuleTrace, transcript: &[Turn]) -> Result<(), PsyCoTError> {
    for record in &trace.criteria {
        if let Some(bad) = record.evidence.iter().find(|e| !e.verify(transcript)) {
            return Err(PsyCoTError::DanglingEvidence {
                module: record.module,
                criterion: record.criterion,
                turn: bad.turn,
            });
        }
    }
    let record = |i: usize| trace.criteria.iter().find(|r| r.criterion == i);

    let mut bindings = Vec::new();
    if trace.decision.positive {
        for outcome in trace.decision.clauses.iter().filter(|c| c.satisfied) {
            let mut evidence = Vec::new();
            let mut notes = Vec::new();
            for &i in &outcome.counted {
                if let Some(r) = record(i) {
                    evidence.extend(r.evidence.iter().cloned());
                    notes.extend(check_notes(r));
                }
            }
            let uncertain = outcome
                .clause
                .indices()
                .iter()
                .copied()
                .filter(|&i| trace.status_vector[i - 1] == SymptomStatus::Uncertain)
                .collect();
            bindings.push(ClauseBinding {
                clause: outcome.clause.describe(),
                criteria: outcome.counted.clone(),
                evidence,
                notes,
                uncertain,
            });
        }
    }
    let bound: Vec<usize> = bindings.iter().flat_map(|b| b.criteria.iter().copied()).collect();
    let supplementary = trace
        .criteria
        .iter()
        .filter(|r| r.status == SymptomStatus::Yes && !bound.contains(&r.criterion))
        .map(|r| CriterionBinding {
            criterion: r.criterion,
            evidence: r.evidence.clone(),
        })
        .collect();
    trace.bindings = bindings;
    trace.supplementary = supplementary;
    Ok(())
}

/// Anchors, synthesizes and binds every module the session visited.
pub fn diagnose(
    session: &SessionState,
    tree: &InterviewTree,
    catalog: &Catalog,
    backend: &dyn LanguageBackend,
    mode: Mode,
) -> Result<PsyCoTTrace, PsyCoTError> {
    let mut modules = Vec::new();
    for module in tree.modules() {
        let visited = session
            .visited
            .iter()
            .any(|id| tree.node(id).is_some_and(|n| n.module == module));
        if !visited {
            continue;
        }
        let spec = catalog
            .disorder(module)
            .ok_or(PsyCoTError::MissingDisorder(module))?;
        let rule = rule_for(module);
        let records: Vec<SymptomRecord> = spec
            .criteria
            .par_iter()
            .map(|criterion| {
                let record = session.record(module, criterion.index);
                let canonical = record
                    .and_then(|r| tree.node(&r.node))
                    .map(|n| n.canonical.as_str());
                let input = AnchorInput {
                    module,
                    spec: criterion,
                    record,
                    transcript: &session.transcript,
                    canonical,
                    lexicon: &catalog.temporal_lexicon,
                };
                anchor_symptom(&input, backend, mode)
            })
            .collect::<Result<_, _>>()?;
        let (decision, status_vector) = synthesize(&records, &rule);
        let mut trace = ModuleTrace {
            module,
            heading: spec.heading(),
            decision,
            status_vector,
            criteria: records,
            bindings: Vec::new(),
            supplementary: Vec::new(),
            deviations: session
                .deviations
                .iter()
                .filter(|d| d.module == module)
                .cloned()
                .collect(),
        };
        bind_evidence(&mut trace, &session.transcript)?;
        modules.push(trace);
    }
    Ok(PsyCoTTrace {
        schema_version: TRACE_SCHEMA_VERSION,
        mode,
        modules,
    })
}
