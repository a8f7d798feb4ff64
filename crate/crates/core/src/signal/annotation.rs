use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Lead;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Wave {
    P,
    Qrs,
    T,
}

impl std::fmt::Display for Wave {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Wave::P => "P",
            Wave::Qrs => "QRS",
            Wave::T => "T",
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DelineationError {
    #[error("lead {lead}: {field} index {index} outside [0, {n_samples})")]
    IndexOutOfRange { lead: Lead, field: &'static str, index: usize, n_samples: usize },
    #[error("lead {lead}: {field} is not strictly increasing")]
    Unsorted { lead: Lead, field: &'static str },
    #[error("lead {lead}: {wave} has {onsets} onsets but {offsets} offsets")]
    CountMismatch { lead: Lead, wave: Wave, onsets: usize, offsets: usize },
    #[error("lead {lead}: inverted {wave} boundary at beat {beat} (on {on} >= off {off})")]
    InvertedBoundary { lead: Lead, wave: Wave, beat: usize, on: usize, off: usize },
    #[error("lead {lead}: {wave} wave {beat} overlaps the next one")]
    Overlap { lead: Lead, wave: Wave, beat: usize },
    #[error("lead {lead}: QRS {beat} contains {count} R peaks, expected exactly one")]
    RPeakCount { lead: Lead, beat: usize, count: usize },
    #[error("lead {0} is not present in the record")]
    LeadMismatch(Lead),
    #[error("unknown lead name `{0}`")]
    UnknownLead(String),
    #[error("sampling rate {found} Hz does not match record rate {expected} Hz")]
    RateMismatch { expected: f64, found: f64 },
    #[error("{0}")]
    Io(String),
    #[error("malformed delineation file: {0}")]
    Malformed(String),
}

/// Wave boundaries for one lead, as sample indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeadDelineation {
    #[serde(default)]
    pub r_peak_idxs: Vec<usize>,
    #[serde(default)]
    pub p_on_idxs: Vec<usize>,
    #[serde(default)]
    pub p_off_idxs: Vec<usize>,
    #[serde(default)]
    pub qrs_on_idxs: Vec<usize>,
    #[serde(default)]
    pub qrs_off_idxs: Vec<usize>,
    #[serde(default)]
    pub t_on_idxs: Vec<usize>,
    #[serde(default)]
    pub t_off_idxs: Vec<usize>,
}

impl LeadDelineation {
    pub fn pairs(&self, wave: Wave) -> impl Iterator<Item = (usize, usize)> + '_ {
        let (on, off) = match wave {
            Wave::P => (&self.p_on_idxs, &self.p_off_idxs),
            Wave::Qrs => (&self.qrs_on_idxs, &self.qrs_off_idxs),
            Wave::T => (&self.t_on_idxs, &self.t_off_idxs),
        };
        on.iter().copied().zip(off.iter().copied())
    }

    pub fn validate(&self, lead: Lead, n_samples: usize) -> Result<(), DelineationError> {
        let fields: [(&'static str, &Vec<usize>); 7] = [
            ("r_peak_idxs", &self.r_peak_idxs),
            ("p_on_idxs", &self.p_on_idxs),
            ("p_off_idxs", &self.p_off_idxs),
            ("qrs_on_idxs", &self.qrs_on_idxs),
            ("qrs_off_idxs", &self.qrs_off_idxs),
            ("t_on_idxs", &self.t_on_idxs),
            ("t_off_idxs", &self.t_off_idxs),
        ];
        for (field, idxs) in fields {
            if let Some(&index) = idxs.iter().find(|&&i| i >= n_samples) {
                return Err(DelineationError::IndexOutOfRange { lead, field, index, n_samples });
            }
            if idxs.windows(2).any(|w| w[0] >= w[1]) {
                return Err(DelineationError::Unsorted { lead, field });
            }
        }
        for (wave, on, off) in [
            (Wave::P, &self.p_on_idxs, &self.p_off_idxs),
            (Wave::Qrs, &self.qrs_on_idxs, &self.qrs_off_idxs),
            (Wave::T, &self.t_on_idxs, &self.t_off_idxs),
        ] {
            if on.len() != off.len() {
                return Err(DelineationError::CountMismatch {
                    lead,
                    wave,
                    onsets: on.len(),
                    offsets: off.len(),
                });
            }
            for (beat, (&a, &b)) in on.iter().zip(off.iter()).enumerate() {
                if a >= b {
                    return Err(DelineationError::InvertedBoundary { lead, wave, beat, on: a, off: b });
                }
                if let Some(&next_on) = on.get(beat + 1) {
                    if b >= next_on {
                        return Err(DelineationError::Overlap { lead, wave, beat });
                    }
                }
            }
        }
        for (beat, (on, off)) in self.pairs(Wave::Qrs).enumerate() {
            let count = self.r_peak_idxs.iter().filter(|&&r| r >= on && r <= off).count();
            if count != 1 {
                return Err(DelineationError::RPeakCount { lead, beat, count });
            }
        }
        Ok(())
    }
}

/// Per-lead wave boundaries for one record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Delineation {
    pub record_id: String,
    pub fs_hz: f64,
    pub leads: BTreeMap<Lead, LeadDelineation>,
}

impl Delineation {
    pub fn validate(&self, n_samples: usize) -> Result<(), DelineationError> {
        for (lead, d) in &self.leads {
            d.validate(*lead, n_samples)?;
        }
        Ok(())
    }

    pub fn lead(&self, lead: Lead) -> Option<&LeadDelineation> {
        self.leads.get(&lead)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("delineation serializes")
    }

    /// Parse the JSON form without checking it against a record.
    pub fn from_json(text: &str) -> Result<Self, DelineationError> {
        #[derive(Deserialize)]
        struct Raw {
            record_id: String,
            fs_hz: f64,
            leads: BTreeMap<String, LeadDelineation>,
        }
        let raw: Raw =
            serde_json::from_str(text).map_err(|e| DelineationError::Malformed(e.to_string()))?;
        let mut leads = BTreeMap::new();
        for (name, d) in raw.leads {
            let lead: Lead = name.parse().map_err(|_| DelineationError::UnknownLead(name.clone()))?;
            leads.insert(lead, d);
        }
        Ok(Self { record_id: raw.record_id, fs_hz: raw.fs_hz, leads })
    }
}
