//! Report rendering: JSON machine form (the trace itself) and a bracketed
//! criterion-section text form.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{CheckOutcome, ModuleTrace, PsyCoTTrace, SymptomRecord};
use crate::catalog::Catalog;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagnosisReport {
    pub machine: String,
    pub human: String,
}

pub fn render_report(trace: &PsyCoTTrace, catalog: &Catalog) -> DiagnosisReport {
    DiagnosisReport {
        machine: serde_json::to_string_pretty(trace).expect("trace serializes"),
        human: render_text(trace, catalog),
    }
}

pub fn parse_report(machine: &str) -> Result<PsyCoTTrace, serde_json::Error> {
    serde_json::from_str(machine)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum SectionKey {
    Letter(String),
    Index(usize),
}

impl SectionKey {
    fn label(&self) -> String {
        match self {
            SectionKey::Letter(l) => l.clone(),
            SectionKey::Index(i) => i.to_string(),
        }
    }
}

fn check_line(record: &SymptomRecord) -> Vec<String> {
    let Some(checks) = &record.checks else {
        return Vec::new();
    };
    let word = |o: CheckOutcome| match o {
        CheckOutcome::Passed => "passed",
        CheckOutcome::Failed => "failed",
        CheckOutcome::NotApplicable => "n/a",
    };
    let mut out = Vec::new();
    let t = &checks.temporal;
    if t.outcome != CheckOutcome::NotApplicable || !t.frequency.is_empty() || !t.span.is_empty() {
        let stated: Vec<String> = t
            .frequency
            .iter()
            .chain(t.span.iter())
            .map(|p| format!("\"{p}\""))
            .collect();
        out.push(format!(
            "timing {} ({}): {}",
            word(t.outcome),
            stated.join(", "),
            t.note
        ));
    }
    if checks.exclusion.outcome != CheckOutcome::NotApplicable {
        out.push(format!(
            "exclusion {}: {}",
            word(checks.exclusion.outcome),
            checks.exclusion.rationale
        ));
    }
    out
}

fn render_module(out: &mut String, module: &ModuleTrace, catalog: &Catalog) {
    let verdict = if module.positive() { "criteria met" } else { "criteria not met" };
    let _ = writeln!(out, "{}: {verdict}", module.heading);

    let spec = catalog.disorder(module.module);
    let mut sections: BTreeMap<SectionKey, Vec<&SymptomRecord>> = BTreeMap::new();
    for record in &module.criteria {
        let letter = spec
            .and_then(|s| s.criterion(record.criterion))
            .and_then(|c| c.letter.clone());
        let key = letter.map_or(SectionKey::Index(record.criterion), SectionKey::Letter);
        sections.entry(key).or_default().push(record);
    }
    for (key, records) in &sections {
        let _ = writeln!(out, "[Criterion {}]", key.label());
        for r in records {
            let _ = writeln!(out, "  {}. {}: {}", r.criterion, r.label, r.status);
            for e in &r.evidence {
                let _ = writeln!(out, "     \"{}\" (turn {})", e.quote, e.turn);
            }
            let finding = spec
                .and_then(|s| s.criterion(r.criterion))
                .map_or(r.rationale.as_str(), |c| c.finding.as_str());
            if !r.evidence.is_empty() {
                let _ = writeln!(out, "     => {finding}: {}", r.rationale);
            }
            for line in check_line(r) {
                let _ = writeln!(out, "     {line}");
            }
        }
    }
    let _ = writeln!(out, "Rule:");
    for c in &module.decision.clauses {
        let counted: Vec<String> = c.counted.iter().map(usize::to_string).collect();
        let _ = writeln!(
            out,
            "  {}: {} (counted {})",
            c.clause.describe(),
            if c.satisfied { "satisfied" } else { "not satisfied" },
            if counted.is_empty() { "none".to_string() } else { counted.join(",") }
        );
    }
    for d in &module.deviations {
        let _ = writeln!(out, "Deviation at {} (turn {}): {:?}, {}", d.node, d.turn, d.kind, d.detail);
    }
}

fn render_text(trace: &PsyCoTTrace, catalog: &Catalog) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Diagnosis report ({:?} mode)", trace.mode);
    for module in &trace.modules {
        out.push('\n');
        render_module(&mut out, module, catalog);
    }
    out
}
