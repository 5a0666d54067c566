//! Per-disorder criterion catalog: labels, clinical phrasing, direct-match
//! keywords, temporal requirements and exclusion conditions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tree::ModuleTag;

pub const BUNDLED_CATALOG: &str = include_str!("../data/disorders.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemporalRequirement {
    /// Minimum stated duration. Absent means any duration qualifies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_span_days: Option<f64>,
    /// Minimum episodes per week over that duration.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_rate_per_week: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriterionSpec {
    pub index: usize,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub letter: Option<String>,
    pub finding: String,
    #[serde(default)]
    pub keywords: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temporal: Option<TemporalRequirement>,
    #[serde(default)]
    pub exclusions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisorderSpec {
    pub tag: ModuleTag,
    pub name: String,
    pub code: String,
    pub criteria: Vec<CriterionSpec>,
}

impl DisorderSpec {
    /// "Generalized Anxiety (F41.1)"
    pub fn heading(&self) -> String {
        format!("{} ({})", self.name, self.code)
    }

    pub fn criterion(&self, index: usize) -> Option<&CriterionSpec> {
        self.criteria.iter().find(|c| c.index == index)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemporalLexicon {
    /// Phrase to (low, high) episodes per week.
    pub frequency: BTreeMap<String, (f64, f64)>,
    /// Phrase to days.
    pub span: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Catalog {
    pub negation_cues: Vec<String>,
    pub temporal_lexicon: TemporalLexicon,
    pub disorders: Vec<DisorderSpec>,
}

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("malformed catalog: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("criterion indices of {0} must run 1..=n without gaps")]
    BadIndices(ModuleTag),
}

impl Catalog {
    pub fn parse(document: &str) -> Result<Self, CatalogError> {
        let catalog: Catalog = serde_json::from_str(document)?;
        for d in &catalog.disorders {
            let ok = d.criteria.iter().enumerate().all(|(i, c)| c.index == i + 1);
            if !ok {
                return Err(CatalogError::BadIndices(d.tag));
            }
        }
        Ok(catalog)
    }

    pub fn bundled() -> Self {
        Self::parse(BUNDLED_CATALOG).expect("bundled catalog parses")
    }

    pub fn disorder(&self, tag: ModuleTag) -> Option<&DisorderSpec> {
        self.disorders.iter().find(|d| d.tag == tag)
    }

    pub fn criterion(&self, tag: ModuleTag, index: usize) -> Option<&CriterionSpec> {
        self.disorder(tag).and_then(|d| d.criterion(index))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_catalog_covers_all_modules() {
        let c = Catalog::bundled();
        let arity: Vec<usize> = ModuleTag::ALL
            .iter()
            .map(|t| c.disorder(*t).unwrap().criteria.len())
            .collect();
        assert_eq!(arity, [10, 3, 11, 5]);
        assert_eq!(
            c.disorder(ModuleTag::GeneralizedAnxiety).unwrap().heading(),
            "Generalized Anxiety (F41.1)"
        );
    }

    #[test]
    fn gaps_in_indices_are_rejected() {
        let doc = BUNDLED_CATALOG.replacen("\"index\": 2,", "\"index\": 7,", 1);
        assert!(matches!(
            Catalog::parse(&doc),
            Err(CatalogError::BadIndices(_))
        ));
    }
}
