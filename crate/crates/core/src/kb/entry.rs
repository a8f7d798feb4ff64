use serde::{Deserialize, Serialize};

use super::ingest::Source;
use super::vocab::normalize_label;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    ExactQuote,
    StructuredSynthesis,
}

impl std::str::FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact_quote" => Ok(Strategy::ExactQuote),
            "structured_synthesis" => Ok(Strategy::StructuredSynthesis),
            other => Err(format!("unknown strategy `{other}`")),
        }
    }
}

/// One diagnostic cluster of one article, the unit of retrieval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriteriaEntry {
    pub entry_id: u64,
    pub label: String,
    pub source: Source,
    pub strategy: Strategy,
    pub cleaner_tag: String,
    pub concept_label: String,
    pub criteria: Vec<String>,
    pub combined_text: String,
}

pub fn combined_text(concept_label: &str, criteria: &[String]) -> String {
    let mut s = concept_label.to_string();
    for c in criteria {
        s.push('\n');
        s.push_str(c);
    }
    s
}

impl CriteriaEntry {
    pub fn new(
        entry_id: u64,
        label: &str,
        source: Source,
        strategy: Strategy,
        cleaner_tag: &str,
        concept_label: &str,
        criteria: Vec<String>,
    ) -> Self {
        Self {
            entry_id,
            label: normalize_label(label),
            source,
            strategy,
            cleaner_tag: cleaner_tag.to_string(),
            concept_label: concept_label.to_string(),
            combined_text: combined_text(concept_label, &criteria),
            criteria,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.criteria.is_empty() {
            return Err(format!("entry {} has no criteria", self.entry_id));
        }
        if self.combined_text != combined_text(&self.concept_label, &self.criteria) {
            return Err(format!("entry {} combined_text does not match its criteria", self.entry_id));
        }
        Ok(())
    }
}
