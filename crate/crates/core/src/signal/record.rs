use std::collections::BTreeMap;

use super::{Lead, SignalError};

/// A multi-lead ECG strip. Samples are millivolts.
///
/// Construction validates the record; there is no way to mutate one after
/// the fact, so every `EcgRecord` in the system satisfies its invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct EcgRecord {
    record_id: String,
    sampling_rate_hz: f64,
    leads: BTreeMap<Lead, Vec<f32>>,
}

impl EcgRecord {
    pub fn new(
        record_id: impl Into<String>,
        sampling_rate_hz: f64,
        leads: BTreeMap<Lead, Vec<f32>>,
    ) -> Result<Self, SignalError> {
        if !(sampling_rate_hz.is_finite() && sampling_rate_hz > 0.0) {
            return Err(SignalError::InvalidSamplingRate(sampling_rate_hz));
        }
        if leads.is_empty() {
            return Err(SignalError::NoLeads);
        }
        let n = leads.values().next().map(Vec::len).unwrap_or(0);
        if n == 0 {
            return Err(SignalError::EmptySignal);
        }
        for (lead, samples) in &leads {
            if samples.len() != n {
                return Err(SignalError::RaggedLeads {
                    lead: *lead,
                    expected: n,
                    found: samples.len(),
                });
            }
            if let Some(idx) = samples.iter().position(|v| !v.is_finite()) {
                return Err(SignalError::NonFinite { lead: *lead, index: idx });
            }
        }
        Ok(Self {
            record_id: record_id.into(),
            sampling_rate_hz,
            leads,
        })
    }

    pub fn record_id(&self) -> &str {
        &self.record_id
    }

    pub fn sampling_rate_hz(&self) -> f64 {
        self.sampling_rate_hz
    }

    pub fn n_samples(&self) -> usize {
        self.leads.values().next().map(Vec::len).unwrap_or(0)
    }

    pub fn duration_seconds(&self) -> f64 {
        self.n_samples() as f64 / self.sampling_rate_hz
    }

    /// Leads present in the record, canonical order.
    pub fn lead_names(&self) -> impl Iterator<Item = Lead> + '_ {
        self.leads.keys().copied()
    }

    pub fn leads(&self) -> &BTreeMap<Lead, Vec<f32>> {
        &self.leads
    }

    pub fn lead(&self, lead: Lead) -> Option<&[f32]> {
        self.leads.get(&lead).map(Vec::as_slice)
    }

    pub fn has_lead(&self, lead: Lead) -> bool {
        self.leads.contains_key(&lead)
    }

    /// Samples of one lead widened to f64 for processing.
    pub fn lead_f64(&self, lead: Lead) -> Option<Vec<f64>> {
        self.lead(lead).map(|s| s.iter().map(|&v| v as f64).collect())
    }

    pub fn with_record_id(mut self, record_id: impl Into<String>) -> Self {
        self.record_id = record_id.into();
        self
    }
}
