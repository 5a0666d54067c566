//! Disorder decision rules as data, and their evaluation over per-criterion statuses.
//!
//! A rule is a conjunction of clauses over 1-based criterion indices. `Uncertain`
//! never counts as `Yes`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tree::ModuleTag;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymptomStatus {
    Yes,
    No,
    Uncertain,
}

impl SymptomStatus {
    pub const ALL: [SymptomStatus; 3] = [SymptomStatus::Yes, SymptomStatus::No, SymptomStatus::Uncertain];

    pub fn is_yes(self) -> bool {
        self == SymptomStatus::Yes
    }
}

impl fmt::Display for SymptomStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SymptomStatus::Yes => "Yes",
            SymptomStatus::No => "No",
            SymptomStatus::Uncertain => "Uncertain",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Clause {
    /// Every listed criterion is Yes.
    AllOf(Vec<usize>),
    /// At least `min` of the listed criteria are Yes.
    CountAtLeast { indices: Vec<usize>, min: usize },
    /// At least one listed criterion is Yes.
    AnyOf(Vec<usize>),
}

impl Clause {
    pub fn indices(&self) -> &[usize] {
        match self {
            Clause::AllOf(ix) | Clause::AnyOf(ix) => ix,
            Clause::CountAtLeast { indices, .. } => indices,
        }
    }

    pub fn describe(&self) -> String {
        let list = |ix: &[usize]| {
            ix.iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(",")
        };
        match self {
            Clause::AllOf(ix) => format!("all of {{{}}}", list(ix)),
            Clause::AnyOf(ix) => format!("any of {{{}}}", list(ix)),
            Clause::CountAtLeast { indices, min } => {
                format!("at least {min} of {{{}}}", list(indices))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagnosisRule {
    pub disorder: ModuleTag,
    pub arity: usize,
    /// Conjunction of clauses.
    pub clauses: Vec<Clause>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClauseOutcome {
    pub clause: Clause,
    pub satisfied: bool,
    /// Criteria inside the clause that were Yes.
    pub counted: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagnosisDecision {
    pub positive: bool,
    pub clauses: Vec<ClauseOutcome>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RuleError {
    #[error("unknown disorder {0:?}")]
    UnknownDisorder(String),
    #[error("expected {expected} statuses, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("arity {0} is too large to enumerate")]
    ArityTooLarge(usize),
    #[error("clause references criterion {index} outside 1..={arity}")]
    IndexOutOfRange { index: usize, arity: usize },
}

fn range(lo: usize, hi: usize) -> Vec<usize> {
    (lo..=hi).collect()
}

pub fn builtin_rule(disorder: &str) -> Result<DiagnosisRule, RuleError> {
    let tag: ModuleTag = disorder
        .parse()
        .map_err(|_| RuleError::UnknownDisorder(disorder.to_string()))?;
    Ok(rule_for(tag))
}

pub fn rule_for(tag: ModuleTag) -> DiagnosisRule {
    match tag {
        ModuleTag::Depression => DiagnosisRule {
            disorder: tag,
            arity: 10,
            clauses: vec![
                Clause::CountAtLeast {
                    indices: range(1, 9),
                    min: 5,
                },
                Clause::AnyOf(vec![1, 2]),
                Clause::AllOf(vec![10]),
            ],
        },
        // criterion 11 is reported but not part of the decision
        ModuleTag::GeneralizedAnxiety => DiagnosisRule {
            disorder: tag,
            arity: 11,
            clauses: vec![
                Clause::AllOf(range(1, 4)),
                Clause::CountAtLeast {
                    indices: range(5, 10),
                    min: 3,
                },
            ],
        },
        ModuleTag::SocialAnxiety => DiagnosisRule {
            disorder: tag,
            arity: 5,
            clauses: vec![Clause::AllOf(range(1, 4)), Clause::AllOf(vec![5])],
        },
        ModuleTag::Suicide => DiagnosisRule {
            disorder: tag,
            arity: 3,
            clauses: vec![Clause::AnyOf(range(1, 3))],
        },
    }
}

impl DiagnosisRule {
    pub fn check(&self) -> Result<(), RuleError> {
        for clause in &self.clauses {
            for &index in clause.indices() {
                if index == 0 || index > self.arity {
                    return Err(RuleError::IndexOutOfRange {
                        index,
                        arity: self.arity,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("rule serializes")
    }
}

pub fn evaluate_rule(
    rule: &DiagnosisRule,
    statuses: &[SymptomStatus],
) -> Result<DiagnosisDecision, RuleError> {
    if statuses.len() != rule.arity {
        return Err(RuleError::ArityMismatch {
            expected: rule.arity,
            got: statuses.len(),
        });
    }
    rule.check()?;
    let yes = |i: usize| statuses[i - 1].is_yes();
    let clauses: Vec<ClauseOutcome> = rule
        .clauses
        .iter()
        .map(|clause| {
            let counted: Vec<usize> = clause.indices().iter().copied().filter(|&i| yes(i)).collect();
            let satisfied = match clause {
                Clause::AllOf(ix) => counted.len() == ix.len(),
                Clause::AnyOf(_) => !counted.is_empty(),
                Clause::CountAtLeast { min, .. } => counted.len() >= *min,
            };
            ClauseOutcome {
                clause: clause.clone(),
                satisfied,
                counted,
            }
        })
        .collect();
    Ok(DiagnosisDecision {
        positive: clauses.iter().all(|c| c.satisfied),
        clauses,
    })
}

/// Every status vector of a given length, in base-3 counting order.
pub fn all_status_vectors(arity: usize) -> impl Iterator<Item = Vec<SymptomStatus>> {
    let total = 3usize.pow(arity as u32);
    (0..total).map(move |mut n| {
        let mut v = Vec::with_capacity(arity);
        for _ in 0..arity {
            v.push(SymptomStatus::ALL[n % 3]);
            n /= 3;
        }
        v
    })
}

/// Brute-force restatement of each disorder's rule in plain code, independent
/// of the clause structure, for exhaustive cross-checking.
#[cfg(any(test, feature = "test-oracle"))]
pub mod oracle {
    use std::collections::HashMap;

    use super::*;

    pub const MAX_ARITY: usize = 12;

    fn restated(disorder: ModuleTag, s: &[SymptomStatus]) -> bool {
        let y = |i: usize| s[i - 1] == SymptomStatus::Yes;
        match disorder {
            ModuleTag::Depression => {
                let mut symptoms = 0;
                for i in 1..=9 {
                    if y(i) {
                        symptoms += 1;
                    }
                }
                symptoms >= 5 && (y(1) || y(2)) && y(10)
            }
            ModuleTag::GeneralizedAnxiety => {
                let mut additional = 0;
                for i in 5..=10 {
                    if y(i) {
                        additional += 1;
                    }
                }
                y(1) && y(2) && y(3) && y(4) && additional >= 3
            }
            ModuleTag::SocialAnxiety => y(1) && y(2) && y(3) && y(4) && y(5),
            ModuleTag::Suicide => y(1) || y(2) || y(3),
        }
    }

    pub fn enumerate_oracle(
        rule: &DiagnosisRule,
    ) -> Result<HashMap<Vec<SymptomStatus>, bool>, RuleError> {
        if rule.arity > MAX_ARITY {
            return Err(RuleError::ArityTooLarge(rule.arity));
        }
        let expected = rule_for(rule.disorder).arity;
        if rule.arity != expected {
            return Err(RuleError::ArityMismatch {
                expected,
                got: rule.arity,
            });
        }
        Ok(all_status_vectors(rule.arity)
            .map(|v| {
                let p = restated(rule.disorder, &v);
                (v, p)
            })
            .collect())
    }
}
