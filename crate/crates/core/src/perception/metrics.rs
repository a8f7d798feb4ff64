//! Trace-level perception metrics.

use serde::{Deserialize, Serialize};

use super::verify::TraceEvaluation;

/// A metric that may be undefined when nothing qualifies for its denominator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub value: Option<f64>,
    pub n_included: usize,
    pub n_excluded: usize,
}

impl Metric {
    pub fn is_defined(&self) -> bool {
        self.value.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error("threshold percent must lie in (0, 100], got {0}")]
    Percent(f64),
}

/// Fraction of traces with at least `p` percent of their verifiable
/// findings verified. Traces with no verifiable finding are left out.
pub fn metric_acc_at_threshold(evals: &[TraceEvaluation], p: f64) -> Result<Metric, MetricError> {
    if !(p > 0.0 && p <= 100.0) {
        return Err(MetricError::Percent(p));
    }
    let included: Vec<&TraceEvaluation> = evals.iter().filter(|e| e.n_verifiable > 0).collect();
    // Compare in counts rather than fractions so 2/3 vs 66.67% has no rounding slop.
    let hits = included.iter().filter(|e| (e.n_verified as f64) * 100.0 >= p * e.n_verifiable as f64).count();
    Ok(Metric {
        value: (!included.is_empty()).then(|| hits as f64 / included.len() as f64),
        n_included: included.len(),
        n_excluded: evals.len() - included.len(),
    })
}

/// Verified findings over verifiable findings, pooled across traces.
pub fn metric_global_accuracy(evals: &[TraceEvaluation]) -> Metric {
    let verified: usize = evals.iter().map(|e| e.n_verified).sum();
    let verifiable: usize = evals.iter().map(|e| e.n_verifiable).sum();
    let n_included = evals.iter().filter(|e| e.n_verifiable > 0).count();
    Metric {
        value: (verifiable > 0).then(|| verified as f64 / verifiable as f64),
        n_included,
        n_excluded: evals.len() - n_included,
    }
}

/// Mean of per-trace verified fractions.
pub fn metric_global_accuracy_macro(evals: &[TraceEvaluation]) -> Metric {
    let fr: Vec<f64> = evals.iter().filter_map(|e| e.verified_fraction).collect();
    Metric {
        value: (!fr.is_empty()).then(|| fr.iter().sum::<f64>() / fr.len() as f64),
        n_included: fr.len(),
        n_excluded: evals.len() - fr.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perception::verify::{Status, VerificationResult};

    fn eval(verified: usize, verifiable: usize) -> TraceEvaluation {
        let mut results = Vec::new();
        for i in 0..verifiable {
            results.push(VerificationResult {
                finding_id: format!("f{i}"),
                status: if i < verified { Status::Verified } else { Status::Refuted },
                measured: None,
                rule_id: "x".into(),
                reason: None,
                quote: String::new(),
            });
        }
        TraceEvaluation::from_results("t", results)
    }

    #[test]
    fn acc_at_threshold_examples() {
        let evals = [eval(4, 4), eval(1, 2), eval(3, 4), eval(2, 2)];
        assert_eq!(metric_acc_at_threshold(&evals, 100.0).unwrap().value, Some(0.5));
        assert_eq!(metric_acc_at_threshold(&evals, 50.0).unwrap().value, Some(1.0));
        let just_under = [eval(49, 100)];
        assert_eq!(metric_acc_at_threshold(&just_under, 50.0).unwrap().value, Some(0.0));
    }

    #[test]
    fn zero_verifiable_excluded() {
        let evals = [eval(1, 1), eval(0, 0)];
        let m = metric_acc_at_threshold(&evals, 100.0).unwrap();
        assert_eq!((m.value, m.n_included, m.n_excluded), (Some(1.0), 1, 1));
        let none = metric_acc_at_threshold(&[eval(0, 0)], 50.0).unwrap();
        assert!(!none.is_defined());
        assert!(metric_acc_at_threshold(&evals, 0.0).is_err());
        assert!(metric_acc_at_threshold(&evals, 100.5).is_err());
        assert!(metric_acc_at_threshold(&evals, f64::NAN).is_err());
    }

    #[test]
    fn global_accuracy_pooled_and_macro() {
        let evals = [eval(2, 3), eval(3, 3), eval(0, 2)];
        assert_eq!(metric_global_accuracy(&evals).value, Some(5.0 / 8.0));
        let m = metric_global_accuracy_macro(&evals).value.unwrap();
        assert!((m - (2.0 / 3.0 + 1.0) / 3.0).abs() < 1e-12);
        assert_eq!(metric_global_accuracy(&[eval(3, 3), eval(1, 1)]).value, Some(1.0));
        assert!(!metric_global_accuracy(&[eval(0, 0)]).is_defined());
    }
}
