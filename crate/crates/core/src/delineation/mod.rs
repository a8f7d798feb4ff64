//! Waveform delineation and feature extraction.
//!
//! The pipeline detects R peaks on a multi-lead energy trace, refines them
//! per lead, places P/QRS/T boundaries per beat and measures the feature
//! table. A delineation can also be imported from a file instead.

mod features;
pub mod filters;
mod rpeaks;
mod waves;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use features::compute_features;
pub use rpeaks::detect_r_peaks;
pub use waves::{delineate_lead, delineate_waves};

use crate::signal::{Delineation, DelineationError, EcgRecord, FeatureTable, Lead};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DetectError {
    #[error("signal is {seconds:.2} s long, at least 2 s are needed")]
    SignalTooShort { seconds: f64 },
    #[error("invalid delineator configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QtcFormula {
    #[default]
    Bazett,
    Fridericia,
}

impl QtcFormula {
    pub fn correct(self, qt_ms: f64, rr_ms: f64) -> f64 {
        let rr_s = rr_ms / 1000.0;
        match self {
            QtcFormula::Bazett => qt_ms / rr_s.sqrt(),
            QtcFormula::Fridericia => qt_ms / rr_s.cbrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DelineatorConfig {
    pub bandpass_low_hz: f64,
    pub bandpass_high_hz: f64,
    pub integration_window_ms: f64,
    pub refractory_ms: f64,
    /// Forgetting factor of the running signal and noise peak estimates.
    pub threshold_decay: f64,
    pub search_back: bool,
    pub qtc_formula: QtcFormula,
}

impl Default for DelineatorConfig {
    fn default() -> Self {
        Self {
            bandpass_low_hz: 5.0,
            bandpass_high_hz: 15.0,
            integration_window_ms: 150.0,
            refractory_ms: 200.0,
            threshold_decay: 0.875,
            search_back: true,
            qtc_formula: QtcFormula::Bazett,
        }
    }
}

impl DelineatorConfig {
    pub fn validate(&self, fs_hz: f64) -> Result<(), DetectError> {
        let bad = |m: String| Err(DetectError::InvalidConfig(m));
        if !(self.bandpass_low_hz > 0.0 && self.bandpass_low_hz < self.bandpass_high_hz) {
            return bad(format!("band-pass {}..{} Hz is not an increasing positive band", self.bandpass_low_hz, self.bandpass_high_hz));
        }
        if self.bandpass_high_hz >= fs_hz / 2.0 {
            return bad(format!("band-pass upper edge {} Hz is not below Nyquist ({} Hz)", self.bandpass_high_hz, fs_hz / 2.0));
        }
        if self.refractory_ms < 120.0 {
            return bad(format!("refractory period {} ms is below 120 ms", self.refractory_ms));
        }
        if !(self.integration_window_ms > 0.0) {
            return bad("integration window must be positive".into());
        }
        if !(self.threshold_decay > 0.0 && self.threshold_decay < 1.0) {
            return bad(format!("threshold decay {} is outside (0, 1)", self.threshold_decay));
        }
        Ok(())
    }
}

/// R peaks shared across leads: one detection on the summed energy of all
/// leads, refined onto each lead's own dominant deflection.
pub fn detect_record_r_peaks(rec: &EcgRecord, cfg: &DelineatorConfig) -> Result<BTreeMap<Lead, Vec<usize>>, DetectError> {
    let fs = rec.sampling_rate_hz();
    cfg.validate(fs)?;
    if rec.duration_seconds() < 2.0 {
        return Err(DetectError::SignalTooShort { seconds: rec.duration_seconds() });
    }
    let n = rec.n_samples();
    let mut energy = rpeaks::Energy { integrated: vec![0.0; n], slope: vec![0.0; n] };
    let signals: BTreeMap<Lead, Vec<f64>> = rec.lead_names().filter_map(|l| Some((l, rec.lead_f64(l)?))).collect();
    for x in signals.values() {
        let e = rpeaks::lead_energy(x, fs, cfg);
        for i in 0..n {
            energy.integrated[i] += e.integrated[i];
            energy.slope[i] = energy.slope[i].max(e.slope[i]);
        }
    }
    let centers = rpeaks::energy_peaks(&energy, fs, cfg);
    Ok(signals
        .iter()
        .map(|(&lead, x)| (lead, rpeaks::refine_peaks(x, &centers, fs, cfg)))
        .collect())
}

/// Run the full delineation pipeline and validate the result.
pub fn delineate_record(rec: &EcgRecord, cfg: &DelineatorConfig) -> Result<Delineation, DelineateError> {
    let peaks = detect_record_r_peaks(rec, cfg)?;
    let delin = delineate_waves(rec, &peaks);
    delin.validate(rec.n_samples())?;
    Ok(delin)
}

/// Delineate (or take the imported delineation) and measure features.
pub fn analyze_record(
    rec: &EcgRecord,
    imported: Option<&Delineation>,
    cfg: &DelineatorConfig,
) -> Result<(Delineation, FeatureTable), DelineateError> {
    let delin = match imported {
        Some(d) => d.clone(),
        None => delineate_record(rec, cfg)?,
    };
    let table = compute_features(rec, &delin, cfg.qtc_formula);
    Ok((delin, table))
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DelineateError {
    #[error(transparent)]
    Detect(#[from] DetectError),
    #[error(transparent)]
    Invalid(#[from] DelineationError),
}

/// Parse an external delineation and check it against the record.
pub fn parse_delineation(text: &str, rec: &EcgRecord) -> Result<Delineation, DelineationError> {
    let d = Delineation::from_json(text)?;
    if (d.fs_hz - rec.sampling_rate_hz()).abs() > 1e-9 {
        return Err(DelineationError::RateMismatch { expected: rec.sampling_rate_hz(), found: d.fs_hz });
    }
    for lead in d.leads.keys() {
        if !rec.has_lead(*lead) {
            return Err(DelineationError::LeadMismatch(*lead));
        }
    }
    d.validate(rec.n_samples())?;
    Ok(d)
}

pub fn import_delineation(path: &Path, rec: &EcgRecord) -> Result<Delineation, DelineationError> {
    let text = std::fs::read_to_string(path).map_err(|e| DelineationError::Io(format!("{}: {e}", path.display())))?;
    parse_delineation(&text, rec)
}

pub fn export_delineation(delin: &Delineation, path: &Path) -> Result<(), DelineationError> {
    std::fs::write(path, delin.to_json()).map_err(|e| DelineationError::Io(format!("{}: {e}", path.display())))
}
