//! The single-line verdict grammar judge and anchor completions must follow:
//!
//! ```text
//! VERDICT=<token>; SPAN=<start>-<end>; WHY=<text>
//! ```
//!
//! `SPAN` and `WHY` are optional; `SPAN=-` means no span. Offsets are byte
//! offsets into the reply being judged. Other lines (free reasoning) are ignored.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::{BackendError, Purpose};
use crate::rules::SymptomStatus;
use crate::tree::Verdict;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictToken {
    Judge(Verdict),
    Anchor(SymptomStatus),
}

impl VerdictToken {
    pub fn as_str(self) -> &'static str {
        match self {
            VerdictToken::Judge(Verdict::Met) => "MET",
            VerdictToken::Judge(Verdict::NotMet) => "NOT_MET",
            VerdictToken::Judge(Verdict::Ambiguous) => "AMBIGUOUS",
            VerdictToken::Anchor(SymptomStatus::Yes) => "YES",
            VerdictToken::Anchor(SymptomStatus::No) => "NO",
            VerdictToken::Anchor(SymptomStatus::Uncertain) => "UNCERTAIN",
        }
    }

    fn parse(purpose: Purpose, token: &str) -> Option<Self> {
        let t = token.trim().to_ascii_uppercase();
        match purpose {
            Purpose::Judge => match t.as_str() {
                "MET" => Some(VerdictToken::Judge(Verdict::Met)),
                "NOT_MET" => Some(VerdictToken::Judge(Verdict::NotMet)),
                "AMBIGUOUS" => Some(VerdictToken::Judge(Verdict::Ambiguous)),
                _ => None,
            },
            Purpose::Anchor => match t.as_str() {
                "YES" => Some(VerdictToken::Anchor(SymptomStatus::Yes)),
                "NO" => Some(VerdictToken::Anchor(SymptomStatus::No)),
                "UNCERTAIN" => Some(VerdictToken::Anchor(SymptomStatus::Uncertain)),
                _ => None,
            },
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedVerdict {
    pub token: VerdictToken,
    pub span: Option<Range<usize>>,
    pub why: String,
}

impl ParsedVerdict {
    pub fn judge(&self) -> Verdict {
        match self.token {
            VerdictToken::Judge(v) => v,
            VerdictToken::Anchor(_) => Verdict::Ambiguous,
        }
    }

    pub fn anchor(&self) -> SymptomStatus {
        match self.token {
            VerdictToken::Anchor(s) => s,
            VerdictToken::Judge(_) => SymptomStatus::Uncertain,
        }
    }
}

pub fn format_verdict(token: VerdictToken, span: Option<Range<usize>>, why: &str) -> String {
    let span = match span {
        Some(r) => format!("{}-{}", r.start, r.end),
        None => "-".to_string(),
    };
    format!("VERDICT={}; SPAN={}; WHY={}", token.as_str(), span, why.replace('\n', " "))
}

/// Parses the first `VERDICT=` line of a completion.
pub fn parse_verdict(purpose: Purpose, text: &str) -> Result<ParsedVerdict, BackendError> {
    let malformed = || BackendError::MalformedResponse(text.to_string());
    let line = text
        .lines()
        .map(str::trim)
        .find(|l| l.starts_with("VERDICT="))
        .ok_or_else(malformed)?;

    let (head, why) = match line.find("WHY=") {
        Some(at) => (&line[..at], line[at + 4..].trim().to_string()),
        None => (line, String::new()),
    };
    let mut token = None;
    let mut span = None;
    for field in head.split(';').map(str::trim).filter(|f| !f.is_empty()) {
        let (key, value) = field.split_once('=').ok_or_else(malformed)?;
        match key.trim() {
            "VERDICT" => token = Some(VerdictToken::parse(purpose, value).ok_or_else(malformed)?),
            "SPAN" => span = parse_span(value.trim()).ok_or_else(malformed)?,
            _ => return Err(malformed()),
        }
    }
    Ok(ParsedVerdict {
        token: token.ok_or_else(malformed)?,
        span,
        why,
    })
}

// Outer None = unparseable; inner None = explicitly absent.
fn parse_span(value: &str) -> Option<Option<Range<usize>>> {
    if value == "-" || value.eq_ignore_ascii_case("none") {
        return Some(None);
    }
    let (a, b) = value.split_once('-')?;
    let (a, b) = (a.trim().parse().ok()?, b.trim().parse().ok()?);
    (a <= b).then_some(Some(a..b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_line() {
        let v = parse_verdict(Purpose::Judge, "VERDICT=MET; SPAN=3-9; WHY=said so; clearly").unwrap();
        assert_eq!(v.judge(), Verdict::Met);
        assert_eq!(v.span, Some(3..9));
        assert_eq!(v.why, "said so; clearly");
    }

    #[test]
    fn skips_reasoning_lines() {
        let text = "REASONING=first I looked\nVERDICT=UNCERTAIN; SPAN=-; WHY=thin";
        let v = parse_verdict(Purpose::Anchor, text).unwrap();
        assert_eq!(v.anchor(), SymptomStatus::Uncertain);
        assert_eq!(v.span, None);
    }

    #[test]
    fn rejects_foreign_tokens_and_garbage() {
        assert!(parse_verdict(Purpose::Judge, "VERDICT=YES").is_err());
        assert!(parse_verdict(Purpose::Judge, "I think they meet it").is_err());
        assert!(parse_verdict(Purpose::Judge, "VERDICT=MET; SPAN=9-3").is_err());
        assert!(parse_verdict(Purpose::Question, "VERDICT=MET").is_err());
    }

    #[test]
    fn format_then_parse() {
        let token = VerdictToken::Anchor(SymptomStatus::No);
        let line = format_verdict(token, Some(0..4), "denied");
        let v = parse_verdict(Purpose::Anchor, &line).unwrap();
        assert_eq!((v.token, v.span, v.why.as_str()), (token, Some(0..4), "denied"));
    }
}
