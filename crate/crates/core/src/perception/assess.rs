//! Supporting and adversarial assessment over a set of annotated notes.

use serde::{Deserialize, Serialize};

use super::metrics::*;
use super::verify::{verify_trace, TraceEvaluation};
use crate::findings::{mutate_adversarial, AntonymMap, Flip, FlipMode, Lexicon};
use crate::limits::NormalLimits;
use crate::signal::{EcgRecord, FeatureTable};

/// One note paired with the record it describes.
#[derive(Debug, Clone, Copy)]
pub struct NoteCase<'a> {
    pub trace_id: &'a str,
    pub text: &'a str,
    pub record: &'a EcgRecord,
    pub features: &'a FeatureTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseFailure {
    pub trace_id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerceptionSummary {
    pub n_traces: usize,
    pub n_zero_verifiable: usize,
    pub acc_at_thresh_50: Metric,
    pub acc_at_thresh_100: Metric,
    pub global_accuracy: Metric,
    pub global_accuracy_macro: Metric,
    pub limits: NormalLimits,
}

impl PerceptionSummary {
    pub fn from_evaluations(evals: &[TraceEvaluation], limits: &NormalLimits) -> Self {
        Self {
            n_traces: evals.len(),
            n_zero_verifiable: evals.iter().filter(|e| e.zero_verifiable).count(),
            acc_at_thresh_50: metric_acc_at_threshold(evals, 50.0).expect("valid percent"),
            acc_at_thresh_100: metric_acc_at_threshold(evals, 100.0).expect("valid percent"),
            global_accuracy: metric_global_accuracy(evals),
            global_accuracy_macro: metric_global_accuracy_macro(evals),
            limits: limits.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssessmentMode {
    Supporting,
    Adversarial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversarialTrace {
    pub trace_id: String,
    pub flips: Vec<Flip>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessmentReport {
    pub mode: AssessmentMode,
    pub summary: PerceptionSummary,
    /// Sorted by trace id.
    pub evaluations: Vec<TraceEvaluation>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flips: Vec<AdversarialTrace>,
    #[serde(default)]
    pub failures: Vec<CaseFailure>,
}

impl AssessmentReport {
    /// Assemble a report; evaluations are put in trace-id order so the
    /// output does not depend on evaluation order.
    pub fn new(
        mode: AssessmentMode,
        mut evaluations: Vec<TraceEvaluation>,
        mut flips: Vec<AdversarialTrace>,
        mut failures: Vec<CaseFailure>,
        limits: &NormalLimits,
    ) -> Self {
        evaluations.sort_by(|a, b| a.trace_id.cmp(&b.trace_id));
        flips.sort_by(|a, b| a.trace_id.cmp(&b.trace_id));
        failures.sort_by(|a, b| a.trace_id.cmp(&b.trace_id));
        Self { mode, summary: PerceptionSummary::from_evaluations(&evaluations, limits), evaluations, flips, failures }
    }
}

/// Per-trace seed so each note's flips do not depend on its position in the batch.
pub fn trace_seed(seed: u64, trace_id: &str) -> u64 {
    seed ^ crate::util::fnv1a64(trace_id.as_bytes())
}

pub fn evaluate_supporting(case: &NoteCase<'_>, lexicon: &Lexicon, limits: &NormalLimits) -> TraceEvaluation {
    let ex = lexicon.extract(case.text);
    verify_trace(case.trace_id, &ex.findings, case.features, case.record, limits)
}

pub fn evaluate_adversarial(
    case: &NoteCase<'_>,
    lexicon: &Lexicon,
    map: &AntonymMap,
    seed: u64,
    mode: FlipMode,
    limits: &NormalLimits,
) -> (TraceEvaluation, AdversarialTrace) {
    let ex = lexicon.extract(case.text);
    let (flipped, flips) = mutate_adversarial(&ex.findings, map, trace_seed(seed, case.trace_id), mode);
    let ev = verify_trace(case.trace_id, &flipped, case.features, case.record, limits);
    (ev, AdversarialTrace { trace_id: case.trace_id.to_string(), flips })
}

pub fn run_supporting_assessment(cases: &[NoteCase<'_>], lexicon: &Lexicon, limits: &NormalLimits) -> AssessmentReport {
    let evals = cases.iter().map(|c| evaluate_supporting(c, lexicon, limits)).collect();
    AssessmentReport::new(AssessmentMode::Supporting, evals, Vec::new(), Vec::new(), limits)
}

pub fn run_adversarial_assessment(
    cases: &[NoteCase<'_>],
    lexicon: &Lexicon,
    map: &AntonymMap,
    seed: u64,
    mode: FlipMode,
    limits: &NormalLimits,
) -> AssessmentReport {
    let (evals, flips) = cases.iter().map(|c| evaluate_adversarial(c, lexicon, map, seed, mode, limits)).unzip();
    AssessmentReport::new(AssessmentMode::Adversarial, evals, flips, Vec::new(), limits)
}
