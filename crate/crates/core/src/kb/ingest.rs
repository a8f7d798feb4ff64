//! Markdown article ingestion.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::vocab::{normalize_label, LabelVocabulary};
use super::KbError;

/// Most articles kept per (label, source).
pub const MAX_ARTICLES_PER_SOURCE: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Litfl,
    Wikipedia,
    Ecgpedia,
    Wikiem,
    Other,
}

impl Source {
    pub fn from_name(name: &str) -> Self {
        match name.to_ascii_lowercase().as_str() {
            "litfl" => Source::Litfl,
            "wikipedia" => Source::Wikipedia,
            "ecgpedia" => Source::Ecgpedia,
            "wikiem" => Source::Wikiem,
            _ => Source::Other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawArticle {
    pub label: String,
    pub source: Source,
    /// Path relative to the corpus directory.
    pub file: String,
    pub title: String,
    pub text: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub articles: Vec<RawArticle>,
    pub warnings: Vec<String>,
}

/// Source of a file: its first directory under the corpus root, when that
/// names a known source.
fn source_of(rel: &Path) -> Source {
    let mut comps = rel.components();
    match (comps.next(), comps.next()) {
        (Some(first), Some(_)) => Source::from_name(&first.as_os_str().to_string_lossy()),
        _ => Source::Other,
    }
}

fn title_of(text: &str, rel: &Path) -> String {
    text.lines()
        .find_map(|l| l.trim().strip_prefix("# ").map(|t| t.trim().to_string()))
        .unwrap_or_else(|| rel.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default())
}

/// Read the Markdown files listed per label. Files are relative to `dir`.
pub fn ingest_corpus(
    dir: &Path,
    label_map: &BTreeMap<String, Vec<PathBuf>>,
    vocab: &LabelVocabulary,
) -> Result<IngestReport, KbError> {
    let mut report = IngestReport::default();
    for (label, files) in label_map {
        if !vocab.contains(label) {
            return Err(KbError::UnknownLabel(label.clone()));
        }
        let mut by_source: BTreeMap<Source, Vec<&PathBuf>> = BTreeMap::new();
        for f in files {
            by_source.entry(source_of(f)).or_default().push(f);
        }
        for (source, mut files) in by_source {
            files.sort();
            if files.len() > MAX_ARTICLES_PER_SOURCE {
                let msg = format!(
                    "{label}: {} files from {source:?}, keeping the first {MAX_ARTICLES_PER_SOURCE}",
                    files.len()
                );
                log::warn!("{msg}");
                report.warnings.push(msg);
                files.truncate(MAX_ARTICLES_PER_SOURCE);
            }
            for rel in files {
                let path = dir.join(rel);
                let text = fs::read_to_string(&path).map_err(|e| KbError::Io { path: path.clone(), source: e })?;
                if text.trim().is_empty() {
                    let msg = format!("{}: empty file skipped", rel.display());
                    log::warn!("{msg}");
                    report.warnings.push(msg);
                    continue;
                }
                report.articles.push(RawArticle {
                    label: normalize_label(label),
                    source,
                    file: rel.to_string_lossy().into_owned(),
                    title: title_of(&text, rel),
                    text,
                });
            }
        }
    }
    Ok(report)
}
