use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::backend::{ContextTurn, Speaker};
use crate::strategy::Strategy;
use crate::tree::{NodeId, Verdict};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub speaker: Speaker,
    pub text: String,
    pub timestamp: DateTime<Utc>,
    /// Node the cursor was on when the turn was produced.
    pub node: NodeId,
    /// Interviewer turns: the strategy behind the utterance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<Strategy>,
    /// Participant turns: how the reply was judged.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
}

impl Turn {
    pub fn is_participant(&self) -> bool {
        self.speaker == Speaker::Participant
    }

    pub fn context(&self) -> ContextTurn {
        ContextTurn {
            speaker: self.speaker,
            text: self.text.clone(),
        }
    }
}

/// The last `n` turns as backend context.
pub fn context_window(transcript: &[Turn], n: usize) -> Vec<ContextTurn> {
    let from = transcript.len().saturating_sub(n);
    transcript[from..].iter().map(Turn::context).collect()
}

/// Indices of participant turns, most recent last.
pub fn participant_turns(transcript: &[Turn]) -> impl Iterator<Item = (usize, &Turn)> {
    transcript.iter().enumerate().filter(|(_, t)| t.is_participant())
}

/// Plain-text rendering, one line per turn, used by the CLI and examples.
pub fn render_transcript(transcript: &[Turn]) -> String {
    let mut out = String::new();
    for (i, t) in transcript.iter().enumerate() {
        let who = match t.speaker {
            Speaker::Interviewer => "interviewer",
            Speaker::Participant => "participant",
        };
        let tag = match (&t.strategy, &t.verdict) {
            (Some(s), _) => format!(" ({})", s.as_str()),
            (_, Some(v)) => format!(" ({v:?})"),
            _ => String::new(),
        };
        out.push_str(&format!("{i:>3} [{}] {who}{tag}: {}\n", t.node, t.text));
    }
    out
}
