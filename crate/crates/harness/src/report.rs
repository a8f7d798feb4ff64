//! Run reports: per-trace entries plus aggregates that can always be
//! recomputed from them.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use reasoneval_core::deduction::{DeductionResult, DeductionSummary};
use reasoneval_core::findings::{Flip, FlipMode};
use reasoneval_core::kb::normalize_label;
use reasoneval_core::limits::NormalLimits;
use reasoneval_core::perception::*;
use serde::{Deserialize, Serialize};

use crate::stats::pearson_r;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    Eval,
    AssessSupporting,
    AssessAdversarial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Record,
    Delineation,
    Deduction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowFailure {
    pub stage: Stage,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub trace_id: String,
    pub model_tag: String,
    pub task: String,
    pub gt_labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted_labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perception: Option<TraceEvaluation>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flips: Vec<Flip>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deduction: Option<DeductionResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_correct: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<RowFailure>,
}

/// Exact label-set match after case and whitespace normalization.
pub fn final_answer_correct(predicted: &[String], gt: &[String]) -> bool {
    let norm = |v: &[String]| v.iter().map(|s| normalize_label(s)).filter(|s| !s.is_empty()).collect::<BTreeSet<_>>();
    norm(predicted) == norm(gt)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupAggregate {
    pub model_tag: String,
    pub task: String,
    pub n_rows: usize,
    pub n_failed: usize,
    pub n_zero_verifiable: usize,
    /// Pooled over findings ("micro").
    pub global_accuracy: Metric,
    /// Mean of per-trace fractions ("macro").
    pub global_accuracy_macro: Metric,
    pub acc_at_thresh_50: Metric,
    pub acc_at_thresh_100: Metric,
    pub n_deduction_undefined: usize,
    pub precision_at: BTreeMap<usize, Option<f64>>,
    pub final_accuracy: Metric,
}

impl GroupAggregate {
    pub(crate) fn compute(model_tag: &str, task: &str, traces: &[&TraceEntry], ks: &[usize]) -> Self {
        let evals: Vec<TraceEvaluation> = traces.iter().filter_map(|t| t.perception.clone()).collect();
        let ded: Vec<DeductionResult> = traces.iter().filter_map(|t| t.deduction.clone()).collect();
        let ds = DeductionSummary::from_results(&ded, ks);
        let answered: Vec<bool> = traces.iter().filter_map(|t| t.final_correct).collect();
        Self {
            model_tag: model_tag.to_string(),
            task: task.to_string(),
            n_rows: traces.len(),
            n_failed: traces.iter().filter(|t| t.failure.is_some()).count(),
            n_zero_verifiable: evals.iter().filter(|e| e.zero_verifiable).count(),
            global_accuracy: metric_global_accuracy(&evals),
            global_accuracy_macro: metric_global_accuracy_macro(&evals),
            acc_at_thresh_50: metric_acc_at_threshold(&evals, 50.0).expect("valid percent"),
            acc_at_thresh_100: metric_acc_at_threshold(&evals, 100.0).expect("valid percent"),
            n_deduction_undefined: ds.n_undefined,
            precision_at: if ded.is_empty() { BTreeMap::new() } else { ds.mean_precision_at },
            final_accuracy: Metric {
                value: (!answered.is_empty()).then(|| answered.iter().filter(|c| **c).count() as f64 / answered.len() as f64),
                n_included: answered.len(),
                n_excluded: traces.len() - answered.len(),
            },
        }
    }

    fn metric(&self, name: &str) -> Option<f64> {
        match name {
            "global_accuracy" => self.global_accuracy.value,
            "acc_at_thresh_100" => self.acc_at_thresh_100.value,
            "precision_at_5" => self.precision_at.get(&5).copied().flatten(),
            "final_accuracy" => self.final_accuracy.value,
            _ => None,
        }
    }
}

pub const CORRELATED_METRICS: [&str; 3] = ["global_accuracy", "acc_at_thresh_100", "precision_at_5"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEntry {
    pub metric: String,
    pub against: String,
    pub n_points: usize,
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

fn correlations(groups: &[GroupAggregate]) -> Vec<CorrelationEntry> {
    CORRELATED_METRICS
        .iter()
        .map(|m| {
            let (x, y): (Vec<f64>, Vec<f64>) =
                groups.iter().filter_map(|g| Some((g.metric(m)?, g.metric("final_accuracy")?))).unzip();
            let r = pearson_r(&x, &y);
            CorrelationEntry {
                metric: m.to_string(),
                against: "final_accuracy".into(),
                n_points: x.len(),
                r: r.as_ref().ok().copied(),
                note: r.err().map(|e| e.to_string()),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FailureCounts {
    pub total: usize,
    pub by_stage: BTreeMap<Stage, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub tool_version: String,
    pub limits: NormalLimits,
    pub seed: u64,
    pub ks: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flip: Option<FlipMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedder_fingerprint: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kb_entries: Option<usize>,
    pub lexicon_entries: usize,
}

/// Everything derived from `traces`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub overall: GroupAggregate,
    pub groups: Vec<GroupAggregate>,
    pub correlation: Vec<CorrelationEntry>,
    pub failures: FailureCounts,
}

impl Aggregates {
    pub fn compute(traces: &[TraceEntry], ks: &[usize]) -> Self {
        let all: Vec<&TraceEntry> = traces.iter().collect();
        let mut by_group: BTreeMap<(&str, &str), Vec<&TraceEntry>> = BTreeMap::new();
        for t in traces {
            by_group.entry((t.model_tag.as_str(), t.task.as_str())).or_default().push(t);
        }
        let groups: Vec<GroupAggregate> =
            by_group.iter().map(|((m, task), ts)| GroupAggregate::compute(m, task, ts, ks)).collect();
        let mut failures = FailureCounts::default();
        for f in traces.iter().filter_map(|t| t.failure.as_ref()) {
            failures.total += 1;
            *failures.by_stage.entry(f.stage).or_default() += 1;
        }
        Self { overall: GroupAggregate::compute("*", "*", &all, ks), correlation: correlations(&groups), groups, failures }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub mode: RunMode,
    pub config: ConfigEcho,
    pub aggregates: Aggregates,
    pub traces: Vec<TraceEntry>,
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("cannot access {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed report: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("stored aggregates differ from those recomputed from the traces")]
    Inconsistent,
}

impl RunReport {
    /// Sort traces by id and derive the aggregates.
    pub fn assemble(mode: RunMode, config: ConfigEcho, mut traces: Vec<TraceEntry>) -> Self {
        traces.sort_by(|a, b| a.trace_id.cmp(&b.trace_id));
        let aggregates = Aggregates::compute(&traces, &config.ks);
        Self { mode, config, aggregates, traces }
    }

    pub fn n_succeeded(&self) -> usize {
        self.traces.len() - self.aggregates.failures.total
    }

    pub fn check_consistency(&self) -> Result<(), ReportError> {
        let fresh = Aggregates::compute(&self.traces, &self.config.ks);
        if serde_json::to_string(&fresh)? == serde_json::to_string(&self.aggregates)? {
            Ok(())
        } else {
            Err(ReportError::Inconsistent)
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, ReportError> {
        let r: RunReport = serde_json::from_str(text)?;
        r.check_consistency()?;
        Ok(r)
    }

    pub fn load(path: &Path) -> Result<Self, ReportError> {
        let text = std::fs::read_to_string(path).map_err(|source| ReportError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }
}
