//! Scripted participants and batch evaluation.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{tag, BackendRequest, LanguageBackend, Purpose};
use crate::judgment::ForcedChoiceQuestion;
use crate::metrics::{Label, LabeledPair};
use crate::psycot::{DiagnosisReport, Mode, PsyCoTTrace};
use crate::session::{Engine, EngineAction, EngineConfig, SessionError, SessionState};
use crate::text::{free_negations, tokenize};
use crate::transcript::Turn;
use crate::tree::{ModuleTag, NodeId};

pub const DEFAULT_REPLY: &str = "No, that does not apply to me.";

/// Replies with no criterion content and no negation; judged Ambiguous.
pub const VAGUE_REPLIES: [&str; 3] = ["I guess, sort of, depends", "Hard to say really", "Maybe, it varies"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ForcedChoicePolicy {
    #[default]
    AlwaysAnswer,
    /// Dodge the first `n` presentations of each forced choice.
    StallNTimes { n: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Choice {
    A,
    B,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PersonaProfile {
    pub name: String,
    pub label_per_module: BTreeMap<ModuleTag, Label>,
    /// Node id to scripted reply.
    pub answers: BTreeMap<String, String>,
    /// Node id to the number of vague replies given before the scripted one.
    pub ambiguity: BTreeMap<String, u32>,
    pub forced_choice_policy: ForcedChoicePolicy,
    /// Explicit forced-choice picks; otherwise A when the scripted reply is affirmative.
    pub forced_choice: BTreeMap<String, Choice>,
    /// Reply for nodes without an entry; `None` means the stock denial.
    pub default_reply: Option<String>,
    /// Fail instead of using the default reply.
    pub strict: bool,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PersonaError {
    #[error("no reply configured for node {0}")]
    NoReplyConfigured(NodeId),
    #[error("action does not ask anything")]
    NothingAsked,
    #[error("persona file {path}: {message}")]
    File { path: String, message: String },
}

impl PersonaProfile {
    pub fn parse(document: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(document)
    }

    pub fn load(path: &Path) -> Result<Self, PersonaError> {
        let err = |message: String| PersonaError::File {
            path: path.display().to_string(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        let mut profile = Self::parse(&text).map_err(|e| err(e.to_string()))?;
        if profile.name.is_empty() {
            profile.name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
        }
        Ok(profile)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("persona serializes")
    }

    fn scripted(&self, node: &NodeId) -> Result<String, PersonaError> {
        match self.answers.get(node.as_str()) {
            Some(a) => Ok(a.clone()),
            None if self.strict => Err(PersonaError::NoReplyConfigured(node.clone())),
            None => Ok(self.default_reply.clone().unwrap_or_else(|| DEFAULT_REPLY.to_string())),
        }
    }

    fn affirms(&self, node: &NodeId, negations: &[String]) -> bool {
        match self.answers.get(node.as_str()) {
            Some(reply) => free_negations(&tokenize(reply), negations, &[]).is_empty(),
            None => false,
        }
    }
}

/// A persona with its per-node counters.
#[derive(Debug, Clone)]
pub struct PersonaRunner<'a> {
    profile: &'a PersonaProfile,
    negations: Vec<String>,
    asked: HashMap<NodeId, u32>,
    presented: HashMap<NodeId, u32>,
}

impl<'a> PersonaRunner<'a> {
    pub fn new(profile: &'a PersonaProfile, negations: &[String]) -> Self {
        Self {
            profile,
            negations: negations.to_vec(),
            asked: HashMap::new(),
            presented: HashMap::new(),
        }
    }

    pub fn respond(&mut self, action: &EngineAction) -> Result<String, PersonaError> {
        match action {
            EngineAction::AskQuestion { node, .. } | EngineAction::ModuleComplete { node, .. } => {
                let n = self.asked.entry(node.clone()).or_insert(0);
                let plan = self.profile.ambiguity.get(node.as_str()).copied().unwrap_or(0);
                let seen = *n;
                *n += 1;
                if seen < plan {
                    Ok(VAGUE_REPLIES[seen as usize % VAGUE_REPLIES.len()].to_string())
                } else {
                    self.profile.scripted(node)
                }
            }
            EngineAction::PresentForcedChoice { question } => Ok(self.choose(question)),
            EngineAction::DiagnosisReady => Err(PersonaError::NothingAsked),
        }
    }

    fn choose(&mut self, q: &ForcedChoiceQuestion) -> String {
        let n = self.presented.entry(q.node.clone()).or_insert(0);
        let seen = *n;
        *n += 1;
        if let ForcedChoicePolicy::StallNTimes { n } = self.profile.forced_choice_policy {
            if seen < n {
                return VAGUE_REPLIES[seen as usize % VAGUE_REPLIES.len()].to_string();
            }
        }
        let pick = self
            .profile
            .forced_choice
            .get(q.node.as_str())
            .copied()
            .unwrap_or(if self.profile.affirms(&q.node, &self.negations) {
                Choice::A
            } else {
                Choice::B
            });
        match pick {
            Choice::A => q.option_a.clone(),
            Choice::B => q.option_b.clone(),
        }
    }
}

/// Participant that asks the backend to play the part (not used by the test suites).
pub fn backend_reply(
    backend: &dyn LanguageBackend,
    persona_description: &str,
    action: &EngineAction,
) -> Result<String, SessionError> {
    let (Some(node), Some(question)) = (action.node(), action.utterance()) else {
        return Ok(String::new());
    };
    let prompt = format!("{persona_description}\nThe interviewer asks: {question}");
    let request = BackendRequest::new(Purpose::Persona, prompt).tag(tag::NODE, node.as_str());
    Ok(backend.complete(&request)?.text)
}

#[derive(Debug, Clone)]
pub struct PersonaRun {
    pub persona: String,
    pub state: SessionState,
    pub trace: PsyCoTTrace,
    pub report: DiagnosisReport,
    pub turns: usize,
}

impl PersonaRun {
    pub fn transcript(&self) -> &[Turn] {
        &self.state.transcript
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Persona(#[from] PersonaError),
    #[error("session did not finish within {0} participant turns")]
    TurnLimit(usize),
}

/// Upper bound on participant turns for a finishing session.
pub fn turn_budget(engine: &Engine, config: &EngineConfig) -> usize {
    engine.tree().len() * (config.threshold + config.forced_choice_retries + 3) as usize
}

pub fn run_persona(
    engine: &Engine,
    profile: &PersonaProfile,
    backend: &dyn LanguageBackend,
    config: &EngineConfig,
    mode: Mode,
) -> Result<PersonaRun, RunError> {
    let (mut state, mut action) = engine.start_session(profile.name.clone(), config.clone(), backend)?;
    let mut persona = PersonaRunner::new(profile, &engine.catalog().negation_cues);
    let budget = turn_budget(engine, config);
    let mut turns = 0;
    while action != EngineAction::DiagnosisReady {
        if turns >= budget {
            return Err(RunError::TurnLimit(budget));
        }
        let reply = persona.respond(&action)?;
        (state, action) = engine.step(&state, &reply, backend)?;
        turns += 1;
    }
    let (state, trace, report) = engine.finalize(&state, backend, mode)?;
    Ok(PersonaRun {
        persona: profile.name.clone(),
        state,
        trace,
        report,
        turns,
    })
}

#[derive(Debug, Default)]
pub struct BatchOutput {
    pub runs: Vec<PersonaRun>,
    pub failures: Vec<(String, String)>,
    /// Per module, one pair per persona labeled for it.
    pub pairs: BTreeMap<ModuleTag, Vec<LabeledPair>>,
}

impl BatchOutput {
    /// All modules' pairs together, ids prefixed with the module tag.
    pub fn pooled(&self) -> Vec<LabeledPair> {
        self.pairs
            .iter()
            .flat_map(|(m, ps)| {
                ps.iter().map(move |p| LabeledPair {
                    id: format!("{m}/{}", p.id),
                    ..p.clone()
                })
            })
            .collect()
    }
}

/// Runs every persona to completion; failures are recorded and the batch continues.
/// Output order follows input order.
pub fn run_batch(
    engine: &Engine,
    profiles: &[PersonaProfile],
    backend: &dyn LanguageBackend,
    config: &EngineConfig,
    mode: Mode,
    workers: usize,
) -> BatchOutput {
    let work = || {
        profiles
            .par_iter()
            .map(|p| run_persona(engine, p, backend, config, mode))
            .collect::<Vec<_>>()
    };
    let results = match rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build() {
        Ok(pool) => pool.install(work),
        Err(_) => work(),
    };
    let mut out = BatchOutput::default();
    for (profile, result) in profiles.iter().zip(results) {
        match result {
            Ok(run) => {
                for (module, label) in &profile.label_per_module {
                    let predicted = run
                        .trace
                        .module(*module)
                        .map_or(Label::Control, |m| Label::from_positive(m.positive()));
                    out.pairs.entry(*module).or_default().push(LabeledPair {
                        id: profile.name.clone(),
                        reference: *label,
                        predicted,
                    });
                }
                out.runs.push(run);
            }
            Err(e) => out.failures.push((profile.name.clone(), e.to_string())),
        }
    }
    out
}

/// Loads every `*.json` persona in a directory, sorted by file name.
pub fn load_dir(dir: &Path) -> Result<Vec<PersonaProfile>, PersonaError> {
    let err = |message: String| PersonaError::File {
        path: dir.display().to_string(),
        message,
    };
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| err(e.to_string()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths.iter().map(|p| PersonaProfile::load(p)).collect()
}

pub mod cohort;
