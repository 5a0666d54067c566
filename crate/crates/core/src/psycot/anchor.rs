//! Symptom anchoring: turn one criterion's session evidence into a checked record.

use serde::{Deserialize, Serialize};

use super::{CheckOutcome, EvidenceRef, Mode, SymptomRecord};
use crate::backend::{tag, BackendError, BackendRequest, ContextTurn, LanguageBackend, Purpose, Speaker};
use crate::catalog::{CriterionSpec, TemporalLexicon, TemporalRequirement};
use crate::judgment::whole_reply;
use crate::rules::SymptomStatus;
use crate::session::SessionRecord;
use crate::text::phrase_tokens;
use crate::transcript::Turn;
use crate::tree::{ModuleTag, Verdict};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExistenceCheck {
    pub confirmed: bool,
    pub rationale: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalCheck {
    pub outcome: CheckOutcome,
    /// Frequency phrases quoted from the evidence.
    pub frequency: Vec<String>,
    /// Duration phrases quoted from the evidence.
    pub span: Vec<String>,
    pub rate_per_week: Option<f64>,
    pub span_days: Option<f64>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExclusionCheck {
    pub outcome: CheckOutcome,
    pub rationale: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorChecks {
    pub existence: ExistenceCheck,
    pub temporal: TemporalCheck,
    pub exclusion: ExclusionCheck,
}

/// Phrases a temporal extraction call reports, carried in the verdict's WHY field
/// as `frequency=[a|b] span=[c]`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TemporalExtraction {
    pub frequency: Vec<String>,
    pub span: Vec<String>,
}

impl TemporalExtraction {
    pub fn to_why(&self) -> String {
        format!(
            "frequency=[{}] span=[{}]",
            self.frequency.join("|"),
            self.span.join("|")
        )
    }

    pub fn from_why(why: &str) -> Self {
        let field = |key: &str| -> Vec<String> {
            let Some(at) = why.find(&format!("{key}=[")) else {
                return Vec::new();
            };
            let rest = &why[at + key.len() + 2..];
            let inner = rest.split(']').next().unwrap_or_default();
            inner
                .split('|')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect()
        };
        Self {
            frequency: field("frequency"),
            span: field("span"),
        }
    }
}

fn lookup<'a, V>(table: impl IntoIterator<Item = (&'a String, V)>, phrase: &str) -> Option<V> {
    let want = phrase_tokens(phrase);
    table
        .into_iter()
        .find(|(k, _)| phrase_tokens(k) == want)
        .map(|(_, v)| v)
}

/// Cumulative frequency analysis: mean stated rate times stated duration,
/// against the criterion's minimum rate over its minimum duration.
pub fn evaluate_temporal(
    requirement: &TemporalRequirement,
    extraction: &TemporalExtraction,
    lexicon: &TemporalLexicon,
) -> TemporalCheck {
    let rates: Vec<f64> = extraction
        .frequency
        .iter()
        .filter_map(|p| lookup(&lexicon.frequency, p))
        .map(|(lo, hi)| (lo + hi) / 2.0)
        .collect();
    let spans: Vec<f64> = extraction
        .span
        .iter()
        .filter_map(|p| lookup(&lexicon.span, p).copied())
        .collect();
    let rate = (!rates.is_empty()).then(|| rates.iter().sum::<f64>() / rates.len() as f64);
    let stated_span = spans.iter().copied().reduce(f64::max);

    let mut check = TemporalCheck {
        outcome: CheckOutcome::NotApplicable,
        frequency: extraction.frequency.clone(),
        span: extraction.span.clone(),
        rate_per_week: rate,
        span_days: stated_span,
        note: String::new(),
    };
    if rate.is_none() && stated_span.is_none() {
        check.note = "no frequency or duration stated".into();
        return check;
    }

    let mut notes = Vec::new();
    let span = match (stated_span, requirement.min_span_days) {
        (Some(s), _) => Some(s),
        (None, Some(min)) => {
            notes.push(format!("duration not stated; assumed the minimum {min} days"));
            Some(min)
        }
        (None, None) => None,
    };
    let mut passed = true;
    let mut tested = false;
    if let (Some(min), Some(s)) = (requirement.min_span_days, stated_span) {
        tested = true;
        if s < min {
            passed = false;
            notes.push(format!("stated duration {s} days is under {min} days"));
        } else {
            notes.push(format!("stated duration {s} days covers {min} days"));
        }
    }
    if let (Some(min_rate), Some(r)) = (requirement.min_rate_per_week, rate) {
        tested = true;
        match (span, requirement.min_span_days) {
            (Some(s), Some(min_span)) => {
                let have = r * s / 7.0;
                let need = min_rate * min_span / 7.0;
                if have < need {
                    passed = false;
                }
                notes.push(format!(
                    "cumulative {have:.1} episodes against {need:.1} required"
                ));
            }
            _ => {
                if r < min_rate {
                    passed = false;
                }
                notes.push(format!("rate {r:.2}/week against {min_rate:.2}/week required"));
            }
        }
    }
    if !tested {
        notes.push("stated timing does not bear on the requirement".into());
    }
    check.outcome = match (tested, passed) {
        (false, _) => CheckOutcome::NotApplicable,
        (true, true) => CheckOutcome::Passed,
        (true, false) => CheckOutcome::Failed,
    };
    check.note = notes.join("; ");
    check
}

pub struct AnchorInput<'a> {
    pub module: ModuleTag,
    pub spec: &'a CriterionSpec,
    /// The session's conclusive judgment for this criterion, if it was asked.
    pub record: Option<&'a SessionRecord>,
    pub transcript: &'a [Turn],
    pub canonical: Option<&'a str>,
    pub lexicon: &'a TemporalLexicon,
}

fn evidence_ref(transcript: &[Turn], turn: usize, range: std::ops::Range<usize>) -> Option<EvidenceRef> {
    let text = &transcript.get(turn)?.text;
    Some(EvidenceRef {
        turn,
        start: range.start,
        end: range.end,
        quote: text.get(range)?.to_string(),
    })
}

fn evidence_request(purpose_check: &str, prompt: String, text: &str) -> BackendRequest {
    BackendRequest::new(Purpose::Anchor, prompt)
        .with_context(vec![ContextTurn {
            speaker: Speaker::Participant,
            text: text.to_string(),
        }])
        .tag(tag::CHECK, purpose_check)
}

pub fn anchor_symptom(
    input: &AnchorInput<'_>,
    backend: &dyn LanguageBackend,
    mode: Mode,
) -> Result<SymptomRecord, BackendError> {
    let spec = input.spec;
    let mut record = SymptomRecord {
        module: input.module,
        criterion: spec.index,
        label: spec.label.clone(),
        node: None,
        status: SymptomStatus::Uncertain,
        checks: None,
        evidence: Vec::new(),
        rationale: "criterion was not covered in the interview".into(),
    };
    let Some(session) = input.record else {
        return Ok(record);
    };
    record.node = Some(session.node.clone());
    let Some(turn) = input.transcript.get(session.evidence.turn) else {
        record.rationale = "decisive turn missing from transcript".into();
        return Ok(record);
    };
    let text = turn.text.as_str();

    match mode {
        Mode::Vanilla | Mode::Cot => {
            let prompt = format!(
                "Criterion: {} ({}). Based on the participant's words, is it present? \
                 Answer YES, NO or UNCERTAIN.",
                spec.label, spec.finding
            );
            let mut req = evidence_request("status", prompt, text)
                .tag(tag::NODE, session.node.as_str())
                .tag(tag::KEYWORDS, spec.keywords.join("|"))
                .tag(tag::MODE, if mode == Mode::Cot { "cot" } else { "vanilla" });
            if let Some(c) = input.canonical {
                req = req.tag(tag::CANONICAL, c);
            }
            let response = backend.complete(&req)?;
            let (status, span, why) = match response.verdict() {
                Ok(v) => (v.anchor(), v.span.clone(), v.why.clone()),
                Err(_) => (SymptomStatus::Uncertain, None, "unparseable verdict".to_string()),
            };
            let range = span
                .filter(|r| r.start < r.end && text.get(r.clone()).is_some())
                .unwrap_or_else(|| whole_reply(text));
            record.status = status;
            record.rationale = why;
            record.evidence = evidence_ref(input.transcript, session.evidence.turn, range)
                .into_iter()
                .collect();
        }
        Mode::Psycot => {
            record.evidence = evidence_ref(input.transcript, session.evidence.turn, session.evidence.range())
                .into_iter()
                .collect();
            let existence = ExistenceCheck {
                confirmed: session.verdict == Verdict::Met,
                rationale: session.rationale.clone(),
            };
            if !existence.confirmed {
                record.status = SymptomStatus::No;
                record.rationale = "symptom denied in the interview".into();
                record.checks = Some(AnchorChecks {
                    existence,
                    temporal: not_applicable_temporal("symptom absent"),
                    exclusion: ExclusionCheck {
                        outcome: CheckOutcome::NotApplicable,
                        rationale: "symptom absent".into(),
                    },
                });
                return Ok(record);
            }
            let temporal = match &spec.temporal {
                None => not_applicable_temporal("criterion has no timing requirement"),
                Some(req) => {
                    let prompt = format!(
                        "Quote every phrase in the reply that states how often ({}) or for how long it has happened. \
                         Reply as VERDICT=<YES|NO>; SPAN=<start>-<end>; WHY=frequency=[..|..] span=[..|..]",
                        spec.finding
                    );
                    let response = backend.complete(&evidence_request("temporal", prompt, text))?;
                    let extraction = response
                        .verdict()
                        .map(|v| TemporalExtraction::from_why(&v.why))
                        .unwrap_or_default();
                    let extraction = TemporalExtraction {
                        frequency: extraction.frequency.into_iter().filter(|q| text.contains(q.as_str())).collect(),
                        span: extraction.span.into_iter().filter(|q| text.contains(q.as_str())).collect(),
                    };
                    evaluate_temporal(req, &extraction, input.lexicon)
                }
            };
            let exclusion = if spec.exclusions.is_empty() {
                ExclusionCheck {
                    outcome: CheckOutcome::NotApplicable,
                    rationale: "criterion has no exclusionary conditions".into(),
                }
            } else {
                let prompt = format!(
                    "Does the reply attribute the symptom to any of: {}? Answer YES or NO.",
                    spec.exclusions.join("; ")
                );
                let response = backend.complete(&evidence_request("exclusion", prompt, text))?;
                match response.verdict().map(|v| (v.anchor(), v.why.clone())) {
                    Ok((SymptomStatus::Yes, why)) => ExclusionCheck {
                        outcome: CheckOutcome::Failed,
                        rationale: why,
                    },
                    Ok((SymptomStatus::No, why)) => ExclusionCheck {
                        outcome: CheckOutcome::Passed,
                        rationale: why,
                    },
                    Ok((SymptomStatus::Uncertain, why)) => ExclusionCheck {
                        outcome: CheckOutcome::NotApplicable,
                        rationale: why,
                    },
                    Err(_) => ExclusionCheck {
                        outcome: CheckOutcome::NotApplicable,
                        rationale: "unparseable verdict".into(),
                    },
                }
            };
            let sound = temporal.outcome != CheckOutcome::Failed
                && exclusion.outcome != CheckOutcome::Failed
                && !record.evidence.is_empty();
            record.status = if sound { SymptomStatus::Yes } else { SymptomStatus::No };
            record.rationale = if sound {
                format!("{} confirmed", spec.finding)
            } else if temporal.outcome == CheckOutcome::Failed {
                format!("timing requirement not met: {}", temporal.note)
            } else if exclusion.outcome == CheckOutcome::Failed {
                format!("explained by an excluded cause: {}", exclusion.rationale)
            } else {
                "no verifiable evidence".into()
            };
            record.checks = Some(AnchorChecks {
                existence,
                temporal,
                exclusion,
            });
        }
    }
    Ok(record)
}

fn not_applicable_temporal(note: &str) -> TemporalCheck {
    TemporalCheck {
        outcome: CheckOutcome::NotApplicable,
        frequency: Vec::new(),
        span: Vec::new(),
        rate_per_week: None,
        span_days: None,
        note: note.to_string(),
    }
}
