//! Retrieval-based scoring of a trace's diagnostic reasoning.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::findings::{censor_label, censor_regex};
use crate::kb::{normalize_label, Embedder, EmbedError, KnowledgeBase, SynonymTable};

pub const DEFAULT_KS: [usize; 3] = [1, 5, 10];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Retrieved {
    pub entry_id: u64,
    pub label: String,
    pub cosine: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum DeductionError {
    #[error("query has {got} dimensions, index has {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("k must be at least 1")]
    ZeroK,
    #[error("query vector carries no information")]
    InvalidQuery,
    #[error("k = {k} exceeds the {n} retrieved entries")]
    KTooLarge { k: usize, n: usize },
    #[error("no k values requested")]
    NoKs,
    #[error(transparent)]
    Embed(#[from] EmbedError),
}

/// Top-`k` entries by cosine, ties broken by ascending entry id.
pub fn retrieve_top_k(kb: &KnowledgeBase, query: &[f32], k: usize) -> Result<Vec<Retrieved>, DeductionError> {
    if k == 0 {
        return Err(DeductionError::ZeroK);
    }
    if query.len() != kb.dim() {
        return Err(DeductionError::Dimension { expected: kb.dim(), got: query.len() });
    }
    if query.iter().all(|x| *x == 0.0) || query.iter().any(|x| !x.is_finite()) {
        return Err(DeductionError::InvalidQuery);
    }
    let mut scored: Vec<Retrieved> = kb
        .rows()
        .map(|(e, row)| Retrieved { entry_id: e.entry_id, label: e.label.clone(), cosine: crate::kb::cosine(query, row) })
        .collect();
    scored.sort_by(|a, b| b.cosine.total_cmp(&a.cosine).then(a.entry_id.cmp(&b.entry_id)));
    scored.truncate(k);
    Ok(scored)
}

/// Share of the first `k` retrieved entries whose label is one of `gt_labels`.
pub fn precision_at_k(retrieved: &[Retrieved], gt_labels: &[String], k: usize) -> Result<f64, DeductionError> {
    if k == 0 {
        return Err(DeductionError::ZeroK);
    }
    if k > retrieved.len() {
        return Err(DeductionError::KTooLarge { k, n: retrieved.len() });
    }
    let gt: BTreeSet<String> = gt_labels.iter().map(|l| normalize_label(l)).collect();
    let hits = retrieved[..k].iter().filter(|r| gt.contains(&normalize_label(&r.label))).count();
    Ok(hits as f64 / k as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeductionResult {
    pub trace_id: String,
    pub gt_label: Vec<String>,
    pub retrieved: Vec<Retrieved>,
    /// Keyed by k. Empty when the result is undefined.
    pub precision_at: BTreeMap<usize, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub undefined: Option<String>,
}

impl DeductionResult {
    pub fn is_defined(&self) -> bool {
        self.undefined.is_none()
    }
}

/// Terms removed from a trace before it is embedded: the predicted labels
/// and their synonyms, or the ground-truth labels when nothing was predicted.
pub fn censor_terms(predicted: &[String], gt_labels: &[String], synonyms: &SynonymTable) -> Vec<String> {
    let base: Vec<&String> = if predicted.iter().any(|p| !p.trim().is_empty()) { predicted.iter().collect() } else { gt_labels.iter().collect() };
    let mut terms = Vec::new();
    for l in base.into_iter().filter(|l| !l.trim().is_empty()) {
        terms.push(l.trim().to_string());
        terms.extend(synonyms.synonyms_for(l).iter().cloned());
    }
    terms
}

/// Remove every censor term from `trace`.
pub fn censor_trace(trace: &str, terms: &[String]) -> String {
    match terms.split_first() {
        Some((first, rest)) => censor_label(trace, first, rest),
        None => trace.to_string(),
    }
}

#[allow(clippy::too_many_arguments)]
pub fn evaluate_deduction(
    trace_id: &str,
    trace: &str,
    predicted: &[String],
    gt_labels: &[String],
    kb: &KnowledgeBase,
    embedder: &dyn Embedder,
    synonyms: &SynonymTable,
    ks: &[usize],
) -> Result<DeductionResult, DeductionError> {
    let k_max = *ks.iter().max().ok_or(DeductionError::NoKs)?;
    if k_max == 0 || ks.contains(&0) {
        return Err(DeductionError::ZeroK);
    }
    let terms = censor_terms(predicted, gt_labels, synonyms);
    let censored = censor_trace(trace, &terms);
    debug_assert!(censor_regex(terms.iter().map(String::as_str)).is_none_or(|re| !re.is_match(&censored)));
    let mut result = DeductionResult {
        trace_id: trace_id.to_string(),
        gt_label: gt_labels.to_vec(),
        retrieved: Vec::new(),
        precision_at: BTreeMap::new(),
        undefined: None,
    };
    let emb = embedder.embed(&censored)?;
    if !emb.valid {
        result.undefined = Some("censored trace has no content".into());
        return Ok(result);
    }
    result.retrieved = retrieve_top_k(kb, &emb.vector, k_max.min(kb.len()))?;
    for &k in ks {
        // When the index is smaller than k, every entry counts toward the denominator.
        let p = if k <= result.retrieved.len() {
            precision_at_k(&result.retrieved, gt_labels, k)?
        } else {
            precision_at_k(&result.retrieved, gt_labels, result.retrieved.len())? * result.retrieved.len() as f64 / k as f64
        };
        result.precision_at.insert(k, p);
    }
    Ok(result)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeductionSummary {
    pub n_traces: usize,
    pub n_undefined: usize,
    /// Mean over defined traces, keyed by k.
    pub mean_precision_at: BTreeMap<usize, Option<f64>>,
}

impl DeductionSummary {
    pub fn from_results(results: &[DeductionResult], ks: &[usize]) -> Self {
        let defined: Vec<&DeductionResult> = results.iter().filter(|r| r.is_defined()).collect();
        let mean_precision_at = ks
            .iter()
            .map(|k| {
                let v: Vec<f64> = defined.iter().filter_map(|r| r.precision_at.get(k).copied()).collect();
                (*k, (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64))
            })
            .collect();
        Self { n_traces: results.len(), n_undefined: results.len() - defined.len(), mean_precision_at }
    }
}
