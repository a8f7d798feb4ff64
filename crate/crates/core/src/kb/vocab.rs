//! Label vocabularies per task and the censoring synonym table.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

const BUILTIN_LABELS: &str = include_str!("../../assets/labels.json");
const BUILTIN_SYNONYMS: &str = include_str!("../../assets/synonyms.json");

/// Case- and whitespace-insensitive form used for every label comparison.
pub fn normalize_label(label: &str) -> String {
    label.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Task {
    pub name: String,
    pub labels: Vec<String>,
    /// Diagnosis codes per label, where the task has them.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub codes: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelVocabulary {
    pub tasks: Vec<Task>,
}

impl LabelVocabulary {
    pub fn builtin() -> Self {
        Self::from_json(BUILTIN_LABELS).expect("builtin label vocabulary is valid")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn task(&self, name: &str) -> Option<&Task> {
        self.tasks.iter().find(|t| t.name == name)
    }

    pub fn contains(&self, label: &str) -> bool {
        let l = normalize_label(label);
        self.tasks.iter().any(|t| t.labels.iter().any(|x| normalize_label(x) == l))
    }

    /// Every distinct label across tasks, normalized and sorted.
    pub fn all_labels(&self) -> Vec<String> {
        let mut v: Vec<String> = self.tasks.iter().flat_map(|t| t.labels.iter().map(|l| normalize_label(l))).collect();
        v.sort();
        v.dedup();
        v
    }
}

/// Alternative spellings and abbreviations per label.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SynonymTable(pub BTreeMap<String, Vec<String>>);

impl SynonymTable {
    pub fn builtin() -> Self {
        Self::from_json(BUILTIN_SYNONYMS).expect("builtin synonym table is valid")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let raw: BTreeMap<String, Vec<String>> = serde_json::from_str(text)?;
        Ok(Self(raw.into_iter().map(|(k, v)| (normalize_label(&k), v)).collect()))
    }

    pub fn synonyms_for(&self, label: &str) -> &[String] {
        self.0.get(&normalize_label(label)).map(Vec::as_slice).unwrap_or(&[])
    }
}
