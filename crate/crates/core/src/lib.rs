//! Structured psychiatric screening interviews driven by a language model:
//! a validated interview tree, response judgment with a forced-choice
//! fallback, adaptive question strategies, and a diagnosis stage that anchors
//! each criterion to verbatim transcript evidence before applying the
//! disorder's rule.

pub mod backend;
pub mod catalog;
pub mod judgment;
pub mod metrics;
pub mod persona;
pub mod psycot;
pub mod rules;
pub mod session;
pub mod strategy;
#[cfg(feature = "test-oracle")]
pub mod testing;
pub mod text;
pub mod transcript;
pub mod tree;

pub use backend::{BackendError, BackendRequest, BackendResponse, LanguageBackend, LiveBackend, LiveConfig, MockBackend, MockTables};
pub use catalog::Catalog;
pub use judgment::{ForcedChoiceQuestion, JudgmentOutcome};
pub use metrics::{cohort_metrics, CohortMetrics, Label, LabeledPair};
pub use persona::{run_batch, run_persona, PersonaProfile};
pub use psycot::{diagnose, render_report, DiagnosisReport, Mode, PsyCoTTrace};
pub use rules::{evaluate_rule, rule_for, DiagnosisRule, SymptomStatus};
pub use session::{Engine, EngineAction, EngineConfig, SessionError, SessionState};
pub use strategy::Strategy;
pub use tree::{parse_tree, validate_tree, InterviewTree, ModuleTag, NodeId, ValidationReport, Verdict};
