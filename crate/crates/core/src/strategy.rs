//! Question strategy: cue detection, strategy choice and utterance rendering.

use serde::{Deserialize, Serialize};

use crate::backend::{tag, BackendRequest, LanguageBackend, Purpose};
use crate::judgment::{build_forced_choice, JudgmentError};
use crate::text::{content_words, find_all, free_negations, tokenize};
use crate::transcript::{context_window, participant_turns, Turn};
use crate::tree::InterviewNode;

pub const BUNDLED_LEXICON: &str = include_str!("../data/distress_lexicon.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Probe,
    Explain,
    Empathize,
    ForcedChoice,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Probe => "probe",
            Strategy::Explain => "explain",
            Strategy::Empathize => "empathize",
            Strategy::ForcedChoice => "forced_choice",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistressLexicon {
    pub terms: Vec<String>,
}

impl DistressLexicon {
    /// One term per line; blank lines and `#` comments skipped.
    pub fn parse(text: &str) -> Self {
        let terms = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or_default().trim().to_lowercase())
            .filter(|l| !l.is_empty())
            .collect();
        Self { terms }
    }

    pub fn bundled() -> Self {
        Self::parse(BUNDLED_LEXICON)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistressHit {
    pub term: String,
    pub turn: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CueReport {
    pub distress: bool,
    pub distress_hits: Vec<DistressHit>,
    /// The latest reply shares no content word with the pending question's hint.
    pub topic_shift: bool,
    pub confusion: bool,
    pub confusion_reason: Option<String>,
}

impl CueReport {
    pub fn merge(distress: CueReport, confusion: CueReport) -> CueReport {
        CueReport {
            confusion: confusion.confusion,
            confusion_reason: confusion.confusion_reason,
            ..distress
        }
    }
}

const WINDOW: usize = 3;

/// Lexicon terms seen at least twice across the last three participant turns,
/// or a reply with no content-word overlap with `hint`.
pub fn detect_distress(history: &[Turn], lexicon: &DistressLexicon, hint: &str) -> CueReport {
    let recent: Vec<(usize, &Turn)> = participant_turns(history).collect();
    let recent = &recent[recent.len().saturating_sub(WINDOW)..];

    let mut hits = Vec::new();
    for term in &lexicon.terms {
        let mut found = Vec::new();
        for (idx, turn) in recent {
            let tokens = tokenize(&turn.text);
            for _ in find_all(&tokens, std::iter::once(term)) {
                found.push(DistressHit {
                    term: term.clone(),
                    turn: *idx,
                });
            }
        }
        if found.len() >= 2 {
            hits.extend(found);
        }
    }

    let topic_shift = recent.last().is_some_and(|(_, latest)| {
        let said = content_words(&latest.text);
        !said.is_empty() && said.is_disjoint(&content_words(hint))
    });
    CueReport {
        distress: !hits.is_empty() || topic_shift,
        distress_hits: hits,
        topic_shift,
        ..CueReport::default()
    }
}

const CLARIFICATION: &[&str] = &[
    "what do you mean",
    "what does that mean",
    "what does",
    "dont understand",
    "not sure what you mean",
    "can you explain",
    "could you explain",
    "what counts as",
    "meaning of",
];

const AFFIRMATIONS: &[&str] = &["yes", "yeah", "always", "every", "daily", "often", "definitely"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Polarity {
    Affirm,
    Deny,
    Neither,
}

fn polarity(text: &str, negations: &[String]) -> Polarity {
    let tokens = tokenize(text);
    let deny = !free_negations(&tokens, negations, &[]).is_empty();
    let affirm = tokens.iter().any(|t| AFFIRMATIONS.contains(&t.norm.as_str()));
    match (affirm, deny) {
        (true, false) => Polarity::Affirm,
        (false, true) => Polarity::Deny,
        _ => Polarity::Neither,
    }
}

/// Explicit requests for clarification, or a reply that flips polarity
/// against an earlier reply at the same node.
pub fn detect_confusion(history: &[Turn], node: &InterviewNode, negations: &[String]) -> CueReport {
    let at_node: Vec<&Turn> = participant_turns(history)
        .map(|(_, t)| t)
        .filter(|t| t.node == node.id)
        .collect();
    let Some(latest) = at_node.last() else {
        return CueReport::default();
    };
    let norm = tokenize(&latest.text)
        .into_iter()
        .map(|t| t.norm)
        .collect::<Vec<_>>()
        .join(" ");
    let padded = format!(" {norm} ");
    let reason = if CLARIFICATION.iter().any(|c| padded.contains(&format!(" {c} "))) {
        Some("participant asked for clarification".to_string())
    } else if latest.text.trim_end().ends_with('?') {
        Some("participant answered with a question".to_string())
    } else {
        let now = polarity(&latest.text, negations);
        let flipped = now != Polarity::Neither
            && at_node[..at_node.len() - 1].iter().any(|t| {
                let before = polarity(&t.text, negations);
                before != Polarity::Neither && before != now
            });
        flipped.then(|| "reply contradicts an earlier answer on this item".to_string())
    };
    CueReport {
        confusion: reason.is_some(),
        confusion_reason: reason,
        ..CueReport::default()
    }
}

/// ForcedChoice > Empathize > Explain > Probe.
pub fn select_strategy(cues: &CueReport, force_choice_due: bool) -> Strategy {
    if force_choice_due {
        Strategy::ForcedChoice
    } else if cues.distress {
        Strategy::Empathize
    } else if cues.confusion {
        Strategy::Explain
    } else {
        Strategy::Probe
    }
}

fn instruction(strategy: Strategy) -> &'static str {
    match strategy {
        Strategy::Probe => "Ask one direct question that establishes the item.",
        Strategy::Explain => {
            "The participant seems unsure what is meant. Explain the concept in plain words, then ask the item again."
        }
        Strategy::Empathize => {
            "The participant shows distress. Acknowledge it briefly and warmly, then ask the item again; end with a question."
        }
        Strategy::ForcedChoice => "",
    }
}

/// Interviewer utterance for `node`. Forced choice is rendered locally and
/// never reaches the backend.
pub fn render_question(
    node: &InterviewNode,
    strategy: Strategy,
    history: &[Turn],
    backend: &dyn LanguageBackend,
) -> Result<String, JudgmentError> {
    if node.is_terminal() {
        return Err(JudgmentError::TerminalNode(node.id.clone()));
    }
    if strategy == Strategy::ForcedChoice {
        return Ok(build_forced_choice(node)?.text);
    }
    let prompt = format!(
        "Interview item {id}. It must establish: {hint}\n{how}",
        id = node.id,
        hint = node.hint,
        how = instruction(strategy),
    );
    let request = BackendRequest::new(Purpose::Question, prompt)
        .with_context(context_window(history, 6))
        .tag(tag::NODE, node.id.as_str())
        .tag(tag::HINT, node.hint.as_str())
        .tag(tag::STRATEGY, strategy.as_str());
    let text = backend.complete(&request)?.text.trim().to_string();
    if text.is_empty() {
        return Ok(node.hint.clone());
    }
    Ok(text)
}
