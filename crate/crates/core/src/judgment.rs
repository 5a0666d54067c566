//! Response judgment: keyword fast path, backend semantic judgment, ambiguity
//! bookkeeping and the forced-choice fallback.

use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{tag, BackendError, BackendRequest, ContextTurn, LanguageBackend, Purpose, Speaker};
use crate::catalog::Catalog;
use crate::text::{find_longest, free_negations, tokenize};
use crate::tree::{InterviewNode, NodeId, Verdict};

pub const DEFAULT_THRESHOLD: u32 = 5;

/// Byte range inside one transcript turn.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EvidenceSpan {
    pub turn: usize,
    pub start: usize,
    pub end: usize,
}

impl EvidenceSpan {
    pub fn range(&self) -> Range<usize> {
        self.start..self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// Catalog keyword found in the reply.
    Direct,
    /// Backend recognized an equivalent expression.
    Semantic,
    /// Participant picked a forced-choice option.
    ForcedChoice,
    /// Forced choice went unanswered; conservative default applied.
    Default,
    /// Nothing decisive.
    Unresolved,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgmentOutcome {
    pub tag: Verdict,
    pub evidence: Option<EvidenceSpan>,
    pub rationale: String,
    pub route: Route,
}

impl JudgmentOutcome {
    pub fn ambiguous(rationale: impl Into<String>) -> Self {
        Self {
            tag: Verdict::Ambiguous,
            evidence: None,
            rationale: rationale.into(),
            route: Route::Unresolved,
        }
    }

    /// Met/NotMet carry a span; Ambiguous never does.
    pub fn is_well_formed(&self) -> bool {
        self.tag.is_conclusive() == self.evidence.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnLedger {
    pub node: NodeId,
    pub unproductive_count: u32,
    pub forced_choice_issued: bool,
    /// Times the forced choice was repeated after a non-answer.
    #[serde(default)]
    pub forced_choice_repeats: u32,
}

impl TurnLedger {
    pub fn enter(node: NodeId) -> Self {
        Self {
            node,
            unproductive_count: 0,
            forced_choice_issued: false,
            forced_choice_repeats: 0,
        }
    }
}

pub fn should_force_choice(ledger: &TurnLedger, threshold: u32) -> bool {
    ledger.unproductive_count >= threshold && !ledger.forced_choice_issued
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForcedChoiceQuestion {
    pub node: NodeId,
    /// Maps to Met.
    pub option_a: String,
    /// Maps to NotMet.
    pub option_b: String,
    pub text: String,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum JudgmentError {
    #[error("node {0} has no canonical phrasing")]
    MissingCanonicalPhrasing(NodeId),
    #[error("terminal node {0} cannot be judged")]
    TerminalNode(NodeId),
    #[error("empty reply")]
    EmptyReply,
    #[error(transparent)]
    Backend(#[from] BackendError),
}

pub fn build_forced_choice(node: &InterviewNode) -> Result<ForcedChoiceQuestion, JudgmentError> {
    let canonical = node.canonical.trim();
    if canonical.is_empty() {
        return Err(JudgmentError::MissingCanonicalPhrasing(node.id.clone()));
    }
    let option_a = node.canonical.clone();
    let option_b = format!("not {canonical}");
    let text = format!("Would you describe this as {option_a} or {option_b}?");
    Ok(ForcedChoiceQuestion {
        node: node.id.clone(),
        option_a,
        option_b,
        text,
    })
}

fn normalize(s: &str) -> String {
    tokenize(s)
        .into_iter()
        .map(|t| t.norm)
        .collect::<Vec<_>>()
        .join(" ")
}

impl ForcedChoiceQuestion {
    /// Conclusive verdict if the reply is one of the options (or "a"/"b").
    pub fn resolve(&self, reply: &str) -> Option<Verdict> {
        let r = normalize(reply);
        if r == "a" || r == normalize(&self.option_a) {
            Some(Verdict::Met)
        } else if r == "b" || r == normalize(&self.option_b) {
            Some(Verdict::NotMet)
        } else {
            None
        }
    }
}

/// Span of the reply with surrounding whitespace removed.
pub fn whole_reply(reply: &str) -> Range<usize> {
    let start = reply.len() - reply.trim_start().len();
    let end = reply.trim_end().len();
    if start >= end {
        0..reply.len()
    } else {
        start..end
    }
}

pub struct Judge<'a> {
    catalog: &'a Catalog,
}

impl<'a> Judge<'a> {
    pub fn new(catalog: &'a Catalog) -> Self {
        Self { catalog }
    }

    /// Three thresholds in order: catalog keyword, backend equivalence, Ambiguous.
    ///
    /// `history` ends with the reply being judged; `turn` is that reply's
    /// transcript index.
    pub fn judge_response(
        &self,
        node: &InterviewNode,
        reply: &str,
        turn: usize,
        history: &[ContextTurn],
        backend: &dyn LanguageBackend,
    ) -> Result<JudgmentOutcome, JudgmentError> {
        if node.is_terminal() {
            return Err(JudgmentError::TerminalNode(node.id.clone()));
        }
        if reply.trim().is_empty() {
            return Err(JudgmentError::EmptyReply);
        }
        let spec = node
            .criterion
            .and_then(|c| self.catalog.criterion(node.module, c));

        if let Some(spec) = spec {
            let tokens = tokenize(reply);
            let hits = find_longest(&tokens, &spec.keywords);
            if let Some(hit) = hits.first() {
                if free_negations(&tokens, &self.catalog.negation_cues, &hits).is_empty() {
                    return Ok(JudgmentOutcome {
                        tag: Verdict::Met,
                        evidence: Some(EvidenceSpan {
                            turn,
                            start: hit.span.start,
                            end: hit.span.end,
                        }),
                        rationale: format!("matches \"{}\"", hit.phrase),
                        route: Route::Direct,
                    });
                }
            }
        }

        let finding = spec.map_or(node.canonical.as_str(), |s| s.finding.as_str());
        let prompt = format!(
            "Interview item {id}: {hint}\nCriterion: {finding}\nParticipant reply: \"{reply}\"\n\
             Does the reply establish the criterion (MET), rule it out (NOT_MET), or neither (AMBIGUOUS)?",
            id = node.id,
            hint = node.hint,
        );
        let mut context = history.to_vec();
        if context.last().map(|t| t.text.as_str()) != Some(reply) {
            context.push(ContextTurn {
                speaker: Speaker::Participant,
                text: reply.to_string(),
            });
        }
        let mut request = BackendRequest::new(Purpose::Judge, prompt)
            .with_context(context)
            .tag(tag::NODE, node.id.as_str())
            .tag(tag::HINT, node.hint.as_str());
        if let Some(c) = node.criterion {
            request = request.tag(tag::CRITERION, c.to_string());
        }
        let response = backend.complete(&request)?;
        let Ok(verdict) = response.verdict() else {
            return Ok(JudgmentOutcome::ambiguous("judge output did not follow the verdict grammar"));
        };
        let tag = verdict.judge();
        if !tag.is_conclusive() {
            return Ok(JudgmentOutcome::ambiguous(verdict.why.clone()));
        }
        let range = verdict
            .span
            .clone()
            .filter(|r| r.start < r.end && reply.get(r.clone()).is_some())
            .unwrap_or_else(|| whole_reply(reply));
        Ok(JudgmentOutcome {
            tag,
            evidence: Some(EvidenceSpan {
                turn,
                start: range.start,
                end: range.end,
            }),
            rationale: verdict.why.clone(),
            route: Route::Semantic,
        })
    }
}
