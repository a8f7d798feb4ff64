//! Turning articles into criteria entries.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::entry::{CriteriaEntry, Strategy};
use super::ingest::RawArticle;
use crate::findings::{canonicalize, Lexicon};
use crate::limits::NormalLimits;

/// Request body sent to a cleaning provider.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanRequest {
    pub article_text: String,
    pub label: String,
    pub strategy: Strategy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticCluster {
    pub concept_label: String,
    pub criteria: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CleanerResponse {
    pub diagnostic_clusters: Vec<DiagnosticCluster>,
}

impl CleanerResponse {
    pub fn validate(&self) -> Result<(), String> {
        for (i, c) in self.diagnostic_clusters.iter().enumerate() {
            if c.concept_label.trim().is_empty() {
                return Err(format!("cluster {i} has an empty concept_label"));
            }
            if c.criteria.is_empty() {
                return Err(format!("cluster {i} lists no criteria"));
            }
            if c.criteria.iter().any(|s| s.trim().is_empty()) {
                return Err(format!("cluster {i} has an empty criterion"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CleanError {
    #[error("cleaner provider failed: {0}")]
    Provider(String),
    #[error("cleaner response violates the schema: {0}")]
    Schema(String),
}

pub trait Cleaner: Send + Sync {
    /// Identity recorded on every entry this cleaner produces.
    fn tag(&self) -> String;
    fn clean(&self, req: &CleanRequest) -> Result<CleanerResponse, CleanError>;
}

static HEADING: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^(#{1,6})\s+(.*?)\s*#*\s*$").unwrap());
static CRITERIA_HEADING: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)criteri|diagnos|ecg features").unwrap());
static BULLET: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\s*(?:[-*+]|\d+[.)])\s+(.*\S)\s*$").unwrap());
static TITLE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?m)^#\s+(.+?)\s*$").unwrap());

/// Section harvester: bullets under headings about criteria, diagnosis or
/// ECG features.
#[derive(Debug, Clone)]
pub struct BuiltinCleaner {
    lexicon: Lexicon,
}

impl BuiltinCleaner {
    pub fn new(limits: &NormalLimits) -> Self {
        Self { lexicon: Lexicon::builtin(limits) }
    }

    fn harvest(text: &str) -> Vec<Vec<String>> {
        let mut sections = Vec::new();
        let mut active: Option<(usize, Vec<String>)> = None;
        for line in text.lines() {
            if let Some(h) = HEADING.captures(line) {
                let level = h[1].len();
                if active.as_ref().is_some_and(|(l, _)| level <= *l) {
                    sections.push(active.take().unwrap().1);
                }
                if active.is_none() && CRITERIA_HEADING.is_match(&h[2]) {
                    active = Some((level, Vec::new()));
                }
                continue;
            }
            if let (Some((_, items)), Some(b)) = (active.as_mut(), BULLET.captures(line)) {
                items.push(b[1].to_string());
            }
        }
        sections.extend(active.map(|(_, items)| items));
        sections.retain(|s| !s.is_empty());
        sections
    }

    fn synthesize(&self, bullet: &str) -> Vec<String> {
        let found = self.lexicon.extract(bullet).findings;
        if found.is_empty() {
            let plain: String = bullet.chars().filter(|c| !matches!(c, '*' | '_' | '`')).collect();
            return vec![plain.split_whitespace().collect::<Vec<_>>().join(" ")];
        }
        found.iter().map(|f| canonicalize(&f.claim)).collect()
    }
}

impl Cleaner for BuiltinCleaner {
    fn tag(&self) -> String {
        "builtin".into()
    }

    fn clean(&self, req: &CleanRequest) -> Result<CleanerResponse, CleanError> {
        let title = TITLE.captures(&req.article_text).map(|c| c[1].to_string());
        let concept_label = match title {
            Some(t) => format!("{}: {t}", req.label),
            None => req.label.clone(),
        };
        let clusters = Self::harvest(&req.article_text)
            .into_iter()
            .map(|bullets| {
                let mut criteria: Vec<String> = match req.strategy {
                    Strategy::ExactQuote => bullets,
                    Strategy::StructuredSynthesis => bullets.iter().flat_map(|b| self.synthesize(b)).collect(),
                };
                let mut seen = std::collections::BTreeSet::new();
                criteria.retain(|c| !c.is_empty() && seen.insert(c.clone()));
                DiagnosticCluster { concept_label: concept_label.clone(), criteria }
            })
            .filter(|c| !c.criteria.is_empty())
            .collect();
        Ok(CleanerResponse { diagnostic_clusters: clusters })
    }
}

/// Clean one article into entries numbered from `first_id`.
///
/// Exact-quote criteria that are not verbatim in the article are dropped.
pub fn clean_article(
    article: &RawArticle,
    strategy: Strategy,
    cleaner: &dyn Cleaner,
    first_id: u64,
) -> Result<Vec<CriteriaEntry>, CleanError> {
    let req = CleanRequest { article_text: article.text.clone(), label: article.label.clone(), strategy };
    let resp = cleaner.clean(&req)?;
    resp.validate().map_err(CleanError::Schema)?;
    let mut out = Vec::new();
    for cluster in resp.diagnostic_clusters {
        let criteria: Vec<String> = match strategy {
            Strategy::ExactQuote => cluster
                .criteria
                .into_iter()
                .filter(|c| {
                    let ok = article.text.contains(c.as_str());
                    if !ok {
                        log::warn!("{}: dropped non-verbatim quote `{c}`", article.file);
                    }
                    ok
                })
                .collect(),
            Strategy::StructuredSynthesis => cluster.criteria,
        };
        if criteria.is_empty() {
            continue;
        }
        out.push(CriteriaEntry::new(
            first_id + out.len() as u64,
            &article.label,
            article.source,
            strategy,
            &cleaner.tag(),
            &cluster.concept_label,
            criteria,
        ));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanFailure {
    pub file: String,
    pub cleaner_tag: String,
    pub strategy: Strategy,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CleanOutcome {
    pub entries: Vec<CriteriaEntry>,
    pub failures: Vec<CleanFailure>,
}

/// Run every (strategy, cleaner) pair over every article. Entry ids follow
/// article order, then strategy, then cleaner, then cluster.
pub fn clean_corpus(articles: &[RawArticle], strategies: &[Strategy], cleaners: &[&dyn Cleaner]) -> CleanOutcome {
    let mut out = CleanOutcome::default();
    for a in articles {
        for s in strategies {
            for c in cleaners {
                match clean_article(a, *s, *c, out.entries.len() as u64) {
                    Ok(entries) => out.entries.extend(entries),
                    Err(e) => {
                        log::warn!("{}: {} cleaner failed: {e}", a.file, c.tag());
                        out.failures.push(CleanFailure {
                            file: a.file.clone(),
                            cleaner_tag: c.tag(),
                            strategy: *s,
                            error: e.to_string(),
                        });
                    }
                }
            }
        }
    }
    out
}
