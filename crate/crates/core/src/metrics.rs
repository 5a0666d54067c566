//! Case/control agreement metrics: confusion counts, per-group F1, macro-F1,
//! accuracy and Cohen's kappa.
//!
//! Conventions: an F1 whose denominator is zero is 0; kappa is 1 when chance
//! agreement is 1 (single-class cohort with perfect agreement).

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Case,
    Control,
}

impl Label {
    pub fn from_positive(positive: bool) -> Self {
        if positive {
            Label::Case
        } else {
            Label::Control
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Label::Case => Label::Control,
            Label::Control => Label::Case,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledPair {
    pub id: String,
    #[serde(rename = "ref")]
    pub reference: Label,
    #[serde(rename = "pred")]
    pub predicted: Label,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl Confusion {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CohortMetrics {
    pub confusion: Confusion,
    pub case_f1: f64,
    pub control_f1: f64,
    pub macro_f1: f64,
    pub accuracy: f64,
    pub kappa: f64,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("cohort is empty")]
    EmptyCohort,
    #[error("duplicate sample id {0}")]
    DuplicateId(String),
    #[error("cohort line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub fn confusion_counts(pairs: &[LabeledPair]) -> Result<Confusion, MetricsError> {
    if pairs.is_empty() {
        return Err(MetricsError::EmptyCohort);
    }
    let mut seen = HashSet::new();
    let mut c = Confusion::default();
    for p in pairs {
        if !seen.insert(p.id.as_str()) {
            return Err(MetricsError::DuplicateId(p.id.clone()));
        }
        match (p.reference, p.predicted) {
            (Label::Case, Label::Case) => c.tp += 1,
            (Label::Control, Label::Case) => c.fp += 1,
            (Label::Case, Label::Control) => c.fn_ += 1,
            (Label::Control, Label::Control) => c.tn += 1,
        }
    }
    Ok(c)
}

pub fn cohen_kappa(c: &Confusion) -> Result<f64, MetricsError> {
    let n = c.total() as f64;
    if n == 0.0 {
        return Err(MetricsError::EmptyCohort);
    }
    let p_o = (c.tp + c.tn) as f64 / n;
    let ref_case = (c.tp + c.fn_) as f64 / n;
    let pred_case = (c.tp + c.fp) as f64 / n;
    let p_e = ref_case * pred_case + (1.0 - ref_case) * (1.0 - pred_case);
    if p_e == 1.0 {
        return Ok(1.0);
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

fn f1(hit: u64, fp: u64, fn_: u64) -> f64 {
    let denom = 2 * hit + fp + fn_;
    if denom == 0 {
        0.0
    } else {
        (2 * hit) as f64 / denom as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct F1Suite {
    pub case_f1: f64,
    pub control_f1: f64,
    pub macro_f1: f64,
    pub accuracy: f64,
}

pub fn f1_suite(c: &Confusion) -> Result<F1Suite, MetricsError> {
    if c.total() == 0 {
        return Err(MetricsError::EmptyCohort);
    }
    let case_f1 = f1(c.tp, c.fp, c.fn_);
    let control_f1 = f1(c.tn, c.fp, c.fn_);
    Ok(F1Suite {
        case_f1,
        control_f1,
        macro_f1: (case_f1 + control_f1) / 2.0,
        accuracy: (c.tp + c.tn) as f64 / c.total() as f64,
    })
}

pub fn from_confusion(c: Confusion) -> Result<CohortMetrics, MetricsError> {
    let f = f1_suite(&c)?;
    Ok(CohortMetrics {
        confusion: c,
        case_f1: f.case_f1,
        control_f1: f.control_f1,
        macro_f1: f.macro_f1,
        accuracy: f.accuracy,
        kappa: cohen_kappa(&c)?,
    })
}

pub fn cohort_metrics(pairs: &[LabeledPair]) -> Result<CohortMetrics, MetricsError> {
    from_confusion(confusion_counts(pairs)?)
}

impl CohortMetrics {
    /// Fixed-order table, three decimals.
    pub fn table(&self) -> String {
        let c = &self.confusion;
        let mut out = String::new();
        let _ = writeln!(out, "tp {}", c.tp);
        let _ = writeln!(out, "fp {}", c.fp);
        let _ = writeln!(out, "fn {}", c.fn_);
        let _ = writeln!(out, "tn {}", c.tn);
        let _ = writeln!(out, "case_f1 {:.3}", self.case_f1);
        let _ = writeln!(out, "control_f1 {:.3}", self.control_f1);
        let _ = writeln!(out, "macro_f1 {:.3}", self.macro_f1);
        let _ = writeln!(out, "accuracy {:.3}", self.accuracy);
        let _ = writeln!(out, "kappa {:.3}", self.kappa);
        out
    }
}

/// One JSON object per line; blank lines ignored.
pub fn parse_cohort(text: &str) -> Result<Vec<LabeledPair>, MetricsError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| MetricsError::Parse {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn write_cohort(pairs: &[LabeledPair]) -> String {
    let mut out = String::new();
    for p in pairs {
        out.push_str(&serde_json::to_string(p).expect("pair serializes"));
        out.push('\n');
    }
    out
}
