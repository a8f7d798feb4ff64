//! Verification of extracted findings and the perception metrics.

mod assess;
mod metrics;
mod verify;

pub use assess::*;
pub use metrics::*;
pub use verify::{verify_finding, verify_trace, Measurement, Status, TraceEvaluation, VerificationResult, MIN_RR_INTERVALS, RR_PATTERN_ACF};
