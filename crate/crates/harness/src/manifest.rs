//! JSONL dataset manifests.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub const DEFAULT_TASK: &str = "default";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestRow {
    pub trace_id: String,
    /// Relative paths resolve against the manifest's directory.
    pub record_path: PathBuf,
    #[serde(default)]
    pub gt_labels: Vec<String>,
    /// Final answer of the model; several labels are separated by `;`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted_label: Option<String>,
    #[serde(default)]
    pub reasoning_trace: String,
    #[serde(default)]
    pub model_tag: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delineation_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub patient_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<String>,
}

impl ManifestRow {
    pub fn predicted_labels(&self) -> Option<Vec<String>> {
        let p = self.predicted_label.as_deref()?;
        Some(p.split(';').map(str::trim).filter(|s| !s.is_empty()).map(str::to_string).collect())
    }

    pub fn task(&self) -> &str {
        self.task.as_deref().unwrap_or(DEFAULT_TASK)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ManifestError {
    #[error("cannot read manifest {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("manifest line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("trace_id `{0}` appears more than once")]
    DuplicateId(String),
    #[error("manifest has no rows")]
    Empty,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub base_dir: PathBuf,
    pub rows: Vec<ManifestRow>,
}

impl Manifest {
    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self, ManifestError> {
        let mut rows = Vec::new();
        let mut seen = BTreeSet::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let row: ManifestRow =
                serde_json::from_str(line).map_err(|e| ManifestError::Parse { line: i + 1, msg: e.to_string() })?;
            if row.trace_id.trim().is_empty() {
                return Err(ManifestError::Parse { line: i + 1, msg: "empty trace_id".into() });
            }
            if !seen.insert(row.trace_id.clone()) {
                return Err(ManifestError::DuplicateId(row.trace_id));
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(ManifestError::Empty);
        }
        Ok(Self { base_dir: base_dir.into(), rows })
    }

    pub fn load(path: &Path) -> Result<Self, ManifestError> {
        let text = std::fs::read_to_string(path).map_err(|source| ManifestError::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn to_jsonl(rows: &[ManifestRow]) -> String {
        rows.iter().map(|r| serde_json::to_string(r).expect("rows serialize") + "\n").collect()
    }
}
