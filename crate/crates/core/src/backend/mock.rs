//! Deterministic table-driven backend. Output is a pure function of the request:
//! no clock, no randomness, no I/O.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::verdict::{format_verdict, VerdictToken};
use super::{tag, BackendError, BackendRequest, BackendResponse, LanguageBackend, Purpose};
use crate::psycot::anchor::TemporalExtraction;
use crate::rules::SymptomStatus;
use crate::text::{find_longest, free_negations, tokenize, PhraseMatch, Token};
use crate::tree::Verdict;

pub const BUNDLED_TABLES: &str = include_str!("../../data/mock_tables.json");
pub const DEFAULT_PERSONA_REPLY: &str = "No, that does not apply to me.";

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockTables {
    #[serde(default)]
    pub negations: Vec<String>,
    /// Node id to phrases that confirm the node's criterion.
    #[serde(default)]
    pub judge: BTreeMap<String, Vec<String>>,
    /// Node id to phrases that deny it.
    #[serde(default)]
    pub judge_negative: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub frequency_phrases: Vec<String>,
    #[serde(default)]
    pub span_phrases: Vec<String>,
    #[serde(default)]
    pub exclusion_phrases: Vec<String>,
    /// Node id to a scripted participant reply.
    #[serde(default)]
    pub persona: BTreeMap<String, String>,
}

impl MockTables {
    pub fn parse(document: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(document)
    }

    pub fn bundled() -> Self {
        Self::parse(BUNDLED_TABLES).expect("bundled mock tables parse")
    }

    /// Moves a node's confirming phrases to its denying list, as if the
    /// table had been labeled backwards for that criterion.
    pub fn mislabel(&mut self, node: &str) {
        if let Some(phrases) = self.judge.remove(node) {
            self.judge_negative
                .entry(node.to_string())
                .or_default()
                .extend(phrases);
        }
    }
}

#[derive(Debug, Clone)]
pub struct MockBackend {
    tables: MockTables,
}

pub fn configure_mock(tables: MockTables) -> MockBackend {
    MockBackend { tables }
}

impl MockBackend {
    pub fn bundled() -> Self {
        configure_mock(MockTables::bundled())
    }

    pub fn tables(&self) -> &MockTables {
        &self.tables
    }

    fn phrases(map: &BTreeMap<String, Vec<String>>, node: &str) -> Vec<String> {
        map.get(node).cloned().unwrap_or_default()
    }

    /// Confirm / deny / undecided over one utterance, with the deciding span.
    fn classify(
        &self,
        text: &str,
        confirm: &[String],
        deny: &[String],
    ) -> (Verdict, Option<std::ops::Range<usize>>, String) {
        let tokens = tokenize(text);
        let hits = find_longest(&tokens, confirm);
        let denials = find_longest(&tokens, deny);
        let free = free_negations(&tokens, &self.tables.negations, &hits);
        if let (Some(hit), true) = (hits.first(), free.is_empty()) {
            return (
                Verdict::Met,
                Some(hit.span.clone()),
                format!("reply says \"{}\"", hit.phrase),
            );
        }
        if let Some(d) = denials.first() {
            return (
                Verdict::NotMet,
                Some(d.span.clone()),
                format!("reply says \"{}\"", d.phrase),
            );
        }
        if !free.is_empty() {
            return (
                Verdict::NotMet,
                Some(whole(&tokens)),
                format!("reply negates with \"{}\"", free[0].norm),
            );
        }
        (Verdict::Ambiguous, None, "no criterion content".into())
    }

    fn judge(&self, req: &BackendRequest) -> String {
        let node = req.get_tag(tag::NODE).unwrap_or_default();
        let (verdict, span, why) = self.classify(
            req.last_text(),
            &Self::phrases(&self.tables.judge, node),
            &Self::phrases(&self.tables.judge_negative, node),
        );
        let span = if verdict.is_conclusive() { span } else { None };
        format_verdict(VerdictToken::Judge(verdict), span, &why)
    }

    fn question(&self, req: &BackendRequest) -> String {
        let node = req.get_tag(tag::NODE).unwrap_or_default();
        let hint = req.get_tag(tag::HINT).unwrap_or_default();
        match req.get_tag(tag::STRATEGY).unwrap_or("probe") {
            "explain" => format!("EXPLAIN[{node}]: {hint}"),
            "empathize" => {
                let mut text = format!("EMPATHIZE[{node}]: I appreciate you sharing this. {hint}");
                if !text.trim_end().ends_with('?') {
                    text.push_str(" Could you tell me more?");
                }
                text
            }
            _ => format!("PROBE[{node}]: {hint}"),
        }
    }

    fn anchor(&self, req: &BackendRequest) -> String {
        let text = req.last_text();
        match req.get_tag(tag::CHECK).unwrap_or("status") {
            "temporal" => {
                let tokens = tokenize(text);
                let freq = find_longest(&tokens, &self.tables.frequency_phrases);
                let span = find_longest(&tokens, &self.tables.span_phrases);
                let extraction = TemporalExtraction {
                    frequency: quotes(text, &freq),
                    span: quotes(text, &span),
                };
                let all: Vec<&PhraseMatch> = freq.iter().chain(span.iter()).collect();
                let token = if all.is_empty() {
                    SymptomStatus::No
                } else {
                    SymptomStatus::Yes
                };
                let covered = all.iter().map(|m| m.span.start).min().zip(all.iter().map(|m| m.span.end).max());
                format_verdict(
                    VerdictToken::Anchor(token),
                    covered.map(|(a, b)| a..b),
                    &extraction.to_why(),
                )
            }
            "exclusion" => {
                let tokens = tokenize(text);
                let hits = find_longest(&tokens, &self.tables.exclusion_phrases);
                match hits.first() {
                    Some(hit) => format_verdict(
                        VerdictToken::Anchor(SymptomStatus::Yes),
                        Some(hit.span.clone()),
                        &format!("reply attributes it to \"{}\"", &text[hit.span.clone()]),
                    ),
                    None => format_verdict(
                        VerdictToken::Anchor(SymptomStatus::No),
                        None,
                        "no exclusionary cause mentioned",
                    ),
                }
            }
            _ => {
                let node = req.get_tag(tag::NODE).unwrap_or_default();
                let mut confirm = Self::phrases(&self.tables.judge, node);
                confirm.extend(split_list(req.get_tag(tag::KEYWORDS)));
                let mut deny = Self::phrases(&self.tables.judge_negative, node);
                let canonical = req.get_tag(tag::CANONICAL).unwrap_or_default();
                if !canonical.is_empty() {
                    confirm.push(canonical.to_string());
                    deny.push(format!("not {canonical}"));
                }
                let (verdict, span, why) = self.classify(text, &confirm, &deny);
                let status = match verdict {
                    Verdict::Met => SymptomStatus::Yes,
                    Verdict::NotMet => SymptomStatus::No,
                    Verdict::Ambiguous => SymptomStatus::Uncertain,
                };
                let line = format_verdict(VerdictToken::Anchor(status), span, &why);
                if req.get_tag(tag::MODE) == Some("cot") {
                    format!("REASONING=compared the reply against the criterion wording; {why}\n{line}")
                } else {
                    line
                }
            }
        }
    }

    fn persona(&self, req: &BackendRequest) -> String {
        let node = req.get_tag(tag::NODE).unwrap_or_default();
        self.tables
            .persona
            .get(node)
            .cloned()
            .unwrap_or_else(|| DEFAULT_PERSONA_REPLY.to_string())
    }
}

fn whole(tokens: &[Token]) -> std::ops::Range<usize> {
    match (tokens.first(), tokens.last()) {
        (Some(a), Some(b)) => a.span.start..b.span.end,
        _ => 0..0,
    }
}

fn quotes(text: &str, matches: &[PhraseMatch]) -> Vec<String> {
    matches.iter().map(|m| text[m.span.clone()].to_string()).collect()
}

fn split_list(value: Option<&str>) -> Vec<String> {
    value
        .unwrap_or_default()
        .split('|')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

impl LanguageBackend for MockBackend {
    fn complete(&self, req: &BackendRequest) -> Result<BackendResponse, BackendError> {
        let text = match req.purpose {
            Purpose::Judge => self.judge(req),
            Purpose::Question => self.question(req),
            Purpose::Anchor => self.anchor(req),
            Purpose::Persona => self.persona(req),
        };
        Ok(BackendResponse::from_text(req.purpose, text))
    }

    fn name(&self) -> &str {
        "mock"
    }
}
