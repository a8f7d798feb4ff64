//! ECG records, wave annotations and the per-lead feature table.

mod annotation;
mod features;
mod io;
mod lead;
mod record;
mod resample;
mod synth;

use std::path::Path;

pub use annotation::{Delineation, DelineationError, LeadDelineation, Wave};
pub use features::{FeatureTable, LeadFeatures};
pub use io::{load_record, save_record, sidecar_path, AmplitudeUnit, RecordFormat};
pub use lead::{Lead, UnknownLead};
pub use record::EcgRecord;
pub use resample::{resample_record, TARGET_RATE_HZ};
pub use synth::{synthesize_ecg, RrJitter, SynthSpec, TPolarity};

#[derive(Debug, thiserror::Error)]
pub enum SignalError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error(transparent)]
    UnknownLead(#[from] UnknownLead),
    #[error("csv: {0}")]
    Csv(String),
    #[error("row {row} has {found} columns, expected {expected}")]
    RaggedRow { row: usize, expected: usize, found: usize },
    #[error("lead {lead} has {found} samples, expected {expected}")]
    RaggedLeads { lead: Lead, expected: usize, found: usize },
    #[error("non-finite sample in lead {lead} at index {index}")]
    NonFinite { lead: Lead, index: usize },
    #[error("invalid sampling rate {0}")]
    InvalidSamplingRate(f64),
    #[error("record has no leads")]
    NoLeads,
    #[error("record has no samples")]
    EmptySignal,
    #[error("payload is {found} bytes, header implies {expected}")]
    PayloadSize { expected: usize, found: usize },
    #[error("synthesis: {0}")]
    Synthesis(String),
}

impl SignalError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        SignalError::Io { path: path.display().to_string(), source }
    }
}
