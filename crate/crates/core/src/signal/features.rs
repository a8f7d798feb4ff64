use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Lead;

/// Per-lead measurements. Key names follow the feature dictionary handed
/// to verification agents, so a serialized table can be fed to one as-is.
///
/// `None` means the feature could not be measured on this lead (for
/// example no P waves were found) and serializes as `null`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LeadFeatures {
    #[serde(rename = "avg_PR_interval_(msec)")]
    pub avg_pr_interval_ms: Option<f64>,
    #[serde(rename = "avg_QRS_interval_(msec)")]
    pub avg_qrs_interval_ms: Option<f64>,
    #[serde(rename = "avg_QT_interval_(msec)")]
    pub avg_qt_interval_ms: Option<f64>,
    #[serde(rename = "avg_QTc_interval_(msec)")]
    pub avg_qtc_interval_ms: Option<f64>,
    #[serde(rename = "avg_RR_interval_(msec)")]
    pub avg_rr_interval_ms: Option<f64>,
    #[serde(rename = "avg_heart_rate_(bpm)")]
    pub avg_heart_rate_bpm: Option<f64>,
    #[serde(rename = "avg_ST_segment_(msec)")]
    pub avg_st_segment_ms: Option<f64>,
    #[serde(rename = "avg_P_peak_amp_(mv)")]
    pub avg_p_peak_amp_mv: Option<f64>,
    #[serde(rename = "avg_QRS_peak_amp_(mv)")]
    pub avg_qrs_peak_amp_mv: Option<f64>,
    #[serde(rename = "avg_T_peak_amp_(mv)")]
    pub avg_t_peak_amp_mv: Option<f64>,
    #[serde(rename = "avg_ST_deviation_(mv)")]
    pub avg_st_deviation_mv: Option<f64>,
    /// Most positive QRS deflection from baseline.
    #[serde(rename = "avg_QRS_max_amp_(mv)")]
    pub avg_qrs_max_amp_mv: Option<f64>,
    /// Most negative QRS deflection from baseline (S or Q depth, signed).
    #[serde(rename = "avg_QRS_min_amp_(mv)")]
    pub avg_qrs_min_amp_mv: Option<f64>,
    /// Fraction of QRS complexes preceded by a delineated P wave.
    #[serde(rename = "P_wave_ratio")]
    pub p_wave_ratio: Option<f64>,
    #[serde(rename = "RR_intervals_(msec)")]
    pub rr_intervals_ms: Vec<f64>,
    #[serde(rename = "R_peak_idxs")]
    pub r_peak_idxs: Vec<usize>,
    #[serde(rename = "P_on_idxs")]
    pub p_on_idxs: Vec<usize>,
    #[serde(rename = "P_off_idxs")]
    pub p_off_idxs: Vec<usize>,
    #[serde(rename = "QRS_on_idxs")]
    pub qrs_on_idxs: Vec<usize>,
    #[serde(rename = "QRS_off_idxs")]
    pub qrs_off_idxs: Vec<usize>,
    #[serde(rename = "T_on_idxs")]
    pub t_on_idxs: Vec<usize>,
    #[serde(rename = "T_off_idxs")]
    pub t_off_idxs: Vec<usize>,
}

impl LeadFeatures {
    pub fn qrs_peak_to_peak_mv(&self) -> Option<f64> {
        Some(self.avg_qrs_max_amp_mv? - self.avg_qrs_min_amp_mv?)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureTable {
    pub leads: BTreeMap<Lead, LeadFeatures>,
    /// Frontal QRS axis from the net QRS areas of leads I and aVF.
    pub frontal_axis_deg: Option<f64>,
}

impl FeatureTable {
    pub fn lead(&self, lead: Lead) -> Option<&LeadFeatures> {
        self.leads.get(&lead)
    }

    /// Lead used for record-level rhythm measurements: II when it has at
    /// least three beats, otherwise the lead with the most beats.
    pub fn rhythm_lead(&self) -> Option<Lead> {
        if let Some(f) = self.leads.get(&Lead::II) {
            if f.r_peak_idxs.len() >= 3 {
                return Some(Lead::II);
            }
        }
        self.leads
            .iter()
            .filter(|(_, f)| !f.r_peak_idxs.is_empty())
            .max_by(|a, b| {
                a.1.r_peak_idxs
                    .len()
                    .cmp(&b.1.r_peak_idxs.len())
                    .then_with(|| b.0.cmp(a.0))
            })
            .map(|(l, _)| *l)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn serializes_with_agent_keys_and_null_for_absent() {
        let f = LeadFeatures {
            avg_pr_interval_ms: None,
            avg_qrs_interval_ms: Some(71.0),
            ..Default::default()
        };
        let json = serde_json::to_value(&f).unwrap();
        assert_eq!(json["avg_QRS_interval_(msec)"], 71.0);
        assert!(json["avg_PR_interval_(msec)"].is_null());
        assert!(json.get("P_on_idxs").is_some());
        let back: LeadFeatures = serde_json::from_value(json).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn rhythm_lead_prefers_ii() {
        let mut t = FeatureTable::default();
        let beats = |n: usize| LeadFeatures { r_peak_idxs: (0..n).collect(), ..Default::default() };
        t.leads.insert(Lead::I, beats(10));
        t.leads.insert(Lead::II, beats(5));
        assert_eq!(t.rhythm_lead(), Some(Lead::II));
        t.leads.insert(Lead::II, beats(2));
        assert_eq!(t.rhythm_lead(), Some(Lead::I));
    }
}
