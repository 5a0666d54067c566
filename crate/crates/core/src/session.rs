//! Session engine: owns interview state and runs judge, strategy and question
//! for each participant turn.

use std::sync::Arc;

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{BackendError, LanguageBackend, Speaker};
use crate::catalog::Catalog;
use crate::judgment::{
    build_forced_choice, should_force_choice, whole_reply, EvidenceSpan, ForcedChoiceQuestion, Judge,
    JudgmentError, JudgmentOutcome, Route, TurnLedger, DEFAULT_THRESHOLD,
};
use crate::psycot::{self, render_report, Deviation, DeviationKind, DiagnosisReport, Mode, PsyCoTError, PsyCoTTrace};
use crate::strategy::{detect_confusion, detect_distress, render_question, select_strategy, CueReport, DistressLexicon, Strategy};
use crate::text::{find_all, tokenize};
use crate::transcript::{context_window, Turn};
use crate::tree::{next_node, validate_tree, InterviewNode, InterviewTree, ModuleTag, NodeId, Target, Verdict, ViolationKind};

pub const SNAPSHOT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Clock {
    /// Turn `n` is stamped `start + n` seconds; makes transcripts reproducible.
    Logical { start: DateTime<Utc> },
    Wall,
}

impl Default for Clock {
    fn default() -> Self {
        Clock::Logical {
            start: DateTime::UNIX_EPOCH,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    /// Ambiguous replies on one node before a forced choice.
    pub threshold: u32,
    /// Extra presentations of an unanswered forced choice.
    pub forced_choice_retries: u32,
    /// Turns of transcript passed to the backend.
    pub history_window: usize,
    pub clock: Clock,
    /// Phrases treated as a suicidal-ideation disclosure outside the suicide module.
    pub ideation_cues: Vec<String>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            forced_choice_retries: 2,
            history_window: 6,
            clock: Clock::default(),
            ideation_cues: [
                "kill myself",
                "end my life",
                "suicidal",
                "want to die",
                "take my own life",
                "better off dead",
            ]
            .map(String::from)
            .to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EngineAction {
    AskQuestion {
        node: NodeId,
        utterance: String,
        strategy: Strategy,
    },
    PresentForcedChoice {
        question: ForcedChoiceQuestion,
    },
    /// The previous module is finished; carries the first question of the next one.
    ModuleComplete {
        module: ModuleTag,
        node: NodeId,
        utterance: String,
        strategy: Strategy,
    },
    DiagnosisReady,
}

impl EngineAction {
    /// Node the participant is now being asked about, if any.
    pub fn node(&self) -> Option<&NodeId> {
        match self {
            EngineAction::AskQuestion { node, .. } | EngineAction::ModuleComplete { node, .. } => Some(node),
            EngineAction::PresentForcedChoice { question } => Some(&question.node),
            EngineAction::DiagnosisReady => None,
        }
    }

    pub fn utterance(&self) -> Option<&str> {
        match self {
            EngineAction::AskQuestion { utterance, .. } | EngineAction::ModuleComplete { utterance, .. } => {
                Some(utterance)
            }
            EngineAction::PresentForcedChoice { question } => Some(&question.text),
            EngineAction::DiagnosisReady => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Active,
    Completed,
    Aborted,
}

/// Conclusive judgment for one criterion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub module: ModuleTag,
    pub criterion: usize,
    pub node: NodeId,
    pub verdict: Verdict,
    pub evidence: EvidenceSpan,
    pub rationale: String,
    pub route: Route,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeRef {
    pub name: String,
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionState {
    pub schema_version: u32,
    pub session_id: String,
    pub tree_ref: TreeRef,
    pub config: EngineConfig,
    pub cursor: Target,
    pub ledger: TurnLedger,
    pub pending_forced_choice: Option<ForcedChoiceQuestion>,
    pub transcript: Vec<Turn>,
    /// Ordered by (module, criterion); one entry per criterion.
    pub symptom_records: Vec<SessionRecord>,
    /// Nodes in the order the cursor entered them.
    pub visited: Vec<NodeId>,
    pub status: SessionStatus,
    pub deviations: Vec<Deviation>,
    pub last_action: Option<EngineAction>,
}

impl SessionState {
    pub fn record(&self, module: ModuleTag, criterion: usize) -> Option<&SessionRecord> {
        self.symptom_records
            .iter()
            .find(|r| r.module == module && r.criterion == criterion)
    }

    fn upsert(&mut self, record: SessionRecord) {
        let key = (record.module, record.criterion);
        match self
            .symptom_records
            .binary_search_by(|r| (r.module, r.criterion).cmp(&key))
        {
            Ok(i) => self.symptom_records[i] = record,
            Err(i) => self.symptom_records.insert(i, record),
        }
    }

    pub fn cursor_node(&self) -> Option<&NodeId> {
        self.cursor.node()
    }

    pub fn is_finished(&self) -> bool {
        self.cursor == Target::Terminal
    }

    pub fn snapshot(&self) -> String {
        serde_json::to_string(self).expect("session serializes")
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SessionError {
    #[error("tree is invalid: {0:?}")]
    InvalidTree(Vec<ViolationKind>),
    #[error("session is not active")]
    SessionNotActive,
    #[error("session has not reached the end of the interview")]
    SessionIncomplete,
    #[error("empty message")]
    EmptyMessage,
    #[error("session belongs to tree {0}, not the engine's tree")]
    TreeMismatch(String),
    #[error("snapshot rejected: {0}")]
    SchemaViolation(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Judgment(JudgmentError),
    #[error(transparent)]
    Diagnosis(#[from] PsyCoTError),
}

impl From<JudgmentError> for SessionError {
    fn from(e: JudgmentError) -> Self {
        match e {
            JudgmentError::Backend(b) => SessionError::Backend(b),
            other => SessionError::Judgment(other),
        }
    }
}

pub fn new_session_id() -> String {
    uuid::Uuid::new_v4().to_string()
}

/// Immutable per-tree engine; shareable across sessions and threads.
#[derive(Debug, Clone)]
pub struct Engine {
    tree: Arc<InterviewTree>,
    tree_ref: TreeRef,
    catalog: Arc<Catalog>,
    lexicon: Arc<DistressLexicon>,
}

impl Engine {
    pub fn new(
        name: impl Into<String>,
        tree: InterviewTree,
        catalog: Catalog,
        lexicon: DistressLexicon,
    ) -> Result<Self, SessionError> {
        let report = validate_tree(&tree);
        if !report.is_valid() {
            return Err(SessionError::InvalidTree(report.kinds().into_iter().collect()));
        }
        let tree_ref = TreeRef {
            name: name.into(),
            digest: tree.digest(),
        };
        Ok(Self {
            tree: Arc::new(tree),
            tree_ref,
            catalog: Arc::new(catalog),
            lexicon: Arc::new(lexicon),
        })
    }

    /// Bundled tree, catalog and lexicon.
    pub fn bundled() -> Self {
        Self::new(
            "mini",
            crate::tree::bundled_tree(),
            Catalog::bundled(),
            DistressLexicon::bundled(),
        )
        .expect("bundled tree is valid")
    }

    pub fn tree(&self) -> &InterviewTree {
        &self.tree
    }

    pub fn tree_ref(&self) -> &TreeRef {
        &self.tree_ref
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    fn node(&self, id: &NodeId) -> &InterviewNode {
        self.tree.node(id).expect("cursor always names a tree node")
    }

    fn stamp(state: &SessionState) -> DateTime<Utc> {
        match &state.config.clock {
            Clock::Logical { start } => *start + Duration::seconds(state.transcript.len() as i64),
            Clock::Wall => Utc::now(),
        }
    }

    fn say(state: &mut SessionState, node: &NodeId, text: String, strategy: Strategy) {
        let timestamp = Self::stamp(state);
        state.transcript.push(Turn {
            speaker: Speaker::Interviewer,
            text,
            timestamp,
            node: node.clone(),
            strategy: Some(strategy),
            verdict: None,
        });
    }

    pub fn start_session(
        &self,
        session_id: impl Into<String>,
        config: EngineConfig,
        backend: &dyn LanguageBackend,
    ) -> Result<(SessionState, EngineAction), SessionError> {
        let entry = self.tree.entry_node();
        let mut state = SessionState {
            schema_version: SNAPSHOT_SCHEMA_VERSION,
            session_id: session_id.into(),
            tree_ref: self.tree_ref.clone(),
            config,
            cursor: Target::Node(entry.id.clone()),
            ledger: TurnLedger::enter(entry.id.clone()),
            pending_forced_choice: None,
            transcript: Vec::new(),
            symptom_records: Vec::new(),
            visited: vec![entry.id.clone()],
            status: SessionStatus::Active,
            deviations: Vec::new(),
            last_action: None,
        };
        let utterance = render_question(entry, Strategy::Probe, &[], backend)?;
        Self::say(&mut state, &entry.id, utterance.clone(), Strategy::Probe);
        let action = EngineAction::AskQuestion {
            node: entry.id.clone(),
            utterance,
            strategy: Strategy::Probe,
        };
        state.last_action = Some(action.clone());
        Ok((state, action))
    }

    /// One participant turn. On error the input state is untouched.
    pub fn step(
        &self,
        state: &SessionState,
        message: &str,
        backend: &dyn LanguageBackend,
    ) -> Result<(SessionState, EngineAction), SessionError> {
        if state.tree_ref.digest != self.tree_ref.digest {
            return Err(SessionError::TreeMismatch(state.tree_ref.name.clone()));
        }
        if state.status != SessionStatus::Active {
            return Err(SessionError::SessionNotActive);
        }
        let Some(current_id) = state.cursor_node().cloned() else {
            return Err(SessionError::SessionNotActive);
        };
        if message.trim().is_empty() {
            return Err(SessionError::EmptyMessage);
        }
        let mut next = state.clone();
        let node = self.node(&current_id).clone();
        let turn = next.transcript.len();
        let timestamp = Self::stamp(&next);
        next.transcript.push(Turn {
            speaker: Speaker::Participant,
            text: message.to_string(),
            timestamp,
            node: current_id.clone(),
            strategy: None,
            verdict: None,
        });
        self.flag_late_ideation(&mut next, &node, message, turn);

        let outcome = match next.pending_forced_choice.clone() {
            Some(fc) => match fc.resolve(message) {
                Some(tag) => JudgmentOutcome {
                    tag,
                    evidence: Some(span_of(turn, message)),
                    rationale: format!(
                        "chose \"{}\"",
                        if tag == Verdict::Met { &fc.option_a } else { &fc.option_b }
                    ),
                    route: Route::ForcedChoice,
                },
                None if next.ledger.forced_choice_repeats < next.config.forced_choice_retries => {
                    next.ledger.unproductive_count += 1;
                    next.ledger.forced_choice_repeats += 1;
                    next.transcript[turn].verdict = Some(Verdict::Ambiguous);
                    Self::say(&mut next, &current_id, fc.text.clone(), Strategy::ForcedChoice);
                    return Ok(Self::finish(next, EngineAction::PresentForcedChoice { question: fc }));
                }
                None => {
                    next.deviations.push(Deviation {
                        kind: DeviationKind::ForcedChoiceDefault,
                        module: node.module,
                        node: current_id.clone(),
                        turn,
                        detail: "unresolved after forced choice".into(),
                    });
                    JudgmentOutcome {
                        tag: Verdict::NotMet,
                        evidence: Some(span_of(turn, message)),
                        rationale: "unresolved after forced choice".into(),
                        route: Route::Default,
                    }
                }
            },
            None => {
                let history = context_window(&next.transcript, next.config.history_window);
                Judge::new(&self.catalog).judge_response(&node, message, turn, &history, backend)?
            }
        };
        next.transcript[turn].verdict = Some(outcome.tag);

        if outcome.tag == Verdict::Ambiguous {
            next.ledger.unproductive_count += 1;
            let cues = self.cues(&next, &node);
            let due = should_force_choice(&next.ledger, next.config.threshold);
            let strategy = select_strategy(&cues, due);
            if strategy == Strategy::ForcedChoice {
                let fc = build_forced_choice(&node)?;
                next.ledger.forced_choice_issued = true;
                next.pending_forced_choice = Some(fc.clone());
                Self::say(&mut next, &current_id, fc.text.clone(), Strategy::ForcedChoice);
                return Ok(Self::finish(next, EngineAction::PresentForcedChoice { question: fc }));
            }
            let utterance = render_question(&node, strategy, &next.transcript, backend)?;
            Self::say(&mut next, &current_id, utterance.clone(), strategy);
            return Ok(Self::finish(
                next,
                EngineAction::AskQuestion {
                    node: current_id,
                    utterance,
                    strategy,
                },
            ));
        }

        if let Some(criterion) = node.criterion {
            next.upsert(SessionRecord {
                module: node.module,
                criterion,
                node: current_id.clone(),
                verdict: outcome.tag,
                evidence: outcome.evidence.clone().expect("conclusive outcomes carry evidence"),
                rationale: outcome.rationale.clone(),
                route: outcome.route,
            });
        }
        let target = next_node(&self.tree, &current_id, outcome.tag).map_err(|e| {
            SessionError::SchemaViolation(format!("tree transition failed: {e}"))
        })?;
        next.pending_forced_choice = None;
        let target_node = match &target {
            Target::Node(id) => Some(self.node(id)).filter(|n| !n.is_terminal()),
            Target::Terminal => None,
        };
        let Some(target_node) = target_node else {
            next.cursor = Target::Terminal;
            next.status = SessionStatus::Completed;
            return Ok(Self::finish(next, EngineAction::DiagnosisReady));
        };
        next.cursor = Target::Node(target_node.id.clone());
        next.ledger = TurnLedger::enter(target_node.id.clone());
        next.visited.push(target_node.id.clone());

        let lexical_distress = !detect_distress(&next.transcript, &self.lexicon, &node.hint)
            .distress_hits
            .is_empty();
        let strategy = if lexical_distress { Strategy::Empathize } else { Strategy::Probe };
        let utterance = render_question(target_node, strategy, &next.transcript, backend)?;
        Self::say(&mut next, &target_node.id, utterance.clone(), strategy);
        let action = if target_node.module != node.module {
            EngineAction::ModuleComplete {
                module: node.module,
                node: target_node.id.clone(),
                utterance,
                strategy,
            }
        } else {
            EngineAction::AskQuestion {
                node: target_node.id.clone(),
                utterance,
                strategy,
            }
        };
        Ok(Self::finish(next, action))
    }

    fn finish(mut state: SessionState, action: EngineAction) -> (SessionState, EngineAction) {
        state.last_action = Some(action.clone());
        (state, action)
    }

    fn cues(&self, state: &SessionState, node: &InterviewNode) -> CueReport {
        CueReport::merge(
            detect_distress(&state.transcript, &self.lexicon, &node.hint),
            detect_confusion(&state.transcript, node, &self.catalog.negation_cues),
        )
    }

    fn flag_late_ideation(&self, state: &mut SessionState, node: &InterviewNode, message: &str, turn: usize) {
        let Some(gate) = &self.tree.suicide_gate else {
            return;
        };
        if node.module == ModuleTag::Suicide || !state.visited.contains(gate) {
            return;
        }
        let tokens = tokenize(message);
        if let Some(hit) = find_all(&tokens, &state.config.ideation_cues).first() {
            state.deviations.push(Deviation {
                kind: DeviationKind::LateIdeationDisclosure,
                module: node.module,
                node: node.id.clone(),
                turn,
                detail: format!("mentioned \"{}\" after the suicide gate", &message[hit.span.clone()]),
            });
        }
    }

    /// Runs the diagnosis over a finished session.
    pub fn diagnose(
        &self,
        state: &SessionState,
        backend: &dyn LanguageBackend,
        mode: Mode,
    ) -> Result<PsyCoTTrace, SessionError> {
        if !state.is_finished() {
            return Err(SessionError::SessionIncomplete);
        }
        Ok(psycot::diagnose(state, &self.tree, &self.catalog, backend, mode)?)
    }

    pub fn finalize(
        &self,
        state: &SessionState,
        backend: &dyn LanguageBackend,
        mode: Mode,
    ) -> Result<(SessionState, PsyCoTTrace, DiagnosisReport), SessionError> {
        let trace = self.diagnose(state, backend, mode)?;
        let report = render_report(&trace, &self.catalog);
        let mut done = state.clone();
        done.status = SessionStatus::Completed;
        Ok((done, trace, report))
    }

    /// Operator cancel. Partial records are kept; aborted sessions never diagnose.
    pub fn abort(&self, state: &SessionState) -> Result<SessionState, SessionError> {
        if state.status != SessionStatus::Active {
            return Err(SessionError::SessionNotActive);
        }
        let mut next = state.clone();
        next.status = SessionStatus::Aborted;
        next.last_action = None;
        Ok(next)
    }

    pub fn restore(&self, document: &str) -> Result<SessionState, SessionError> {
        let state = restore(document)?;
        if state.tree_ref.digest != self.tree_ref.digest {
            return Err(SessionError::TreeMismatch(state.tree_ref.name));
        }
        if let Some(id) = state.cursor_node() {
            if self.tree.node(id).is_none() {
                return Err(SessionError::SchemaViolation(format!("cursor {id} not in tree")));
            }
        }
        Ok(state)
    }
}

fn span_of(turn: usize, message: &str) -> EvidenceSpan {
    let r = whole_reply(message);
    EvidenceSpan {
        turn,
        start: r.start,
        end: r.end,
    }
}

/// Parses a snapshot without tying it to an engine.
pub fn restore(document: &str) -> Result<SessionState, SessionError> {
    let state: SessionState =
        serde_json::from_str(document).map_err(|e| SessionError::SchemaViolation(e.to_string()))?;
    if state.schema_version != SNAPSHOT_SCHEMA_VERSION {
        return Err(SessionError::SchemaViolation(format!(
            "unsupported schema_version {}",
            state.schema_version
        )));
    }
    if state.status == SessionStatus::Completed && !state.is_finished() {
        return Err(SessionError::SchemaViolation("completed session off terminal".into()));
    }
    Ok(state)
}
