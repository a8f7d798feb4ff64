//! Clinical reference limits used for qualitative descriptors and rule
//! evaluation. All values are configurable and echoed into reports.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sex {
    Male,
    Female,
    #[default]
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormalLimits {
    pub pr_min_ms: f64,
    pub pr_max_ms: f64,
    pub qrs_wide_ms: f64,
    pub qtc_prolonged_male_ms: f64,
    pub qtc_prolonged_female_ms: f64,
    pub qtc_short_ms: f64,
    pub rate_brady_bpm: f64,
    pub rate_tachy_bpm: f64,
    pub st_elev_mv: f64,
    pub st_depr_mv: f64,
    pub t_flat_mv: f64,
    pub low_qrs_voltage_limb_mv: f64,
    pub low_qrs_voltage_precordial_mv: f64,
    /// Sokolow-Lyon sum (S in V1 plus the larger R in V5/V6).
    pub high_qrs_voltage_mv: f64,
    pub axis_left_deg: f64,
    pub axis_right_deg: f64,
    pub rr_irregular_cv: f64,
    pub irregularly_irregular_cv: f64,
    pub premature_beat_ratio: f64,
    /// Fraction of beats with a delineated P wave for P to count as present.
    pub p_present_ratio: f64,
    /// Fraction of beats with a P wave required by the sinus rhythm rules.
    pub sinus_p_ratio: f64,
    pub sex: Sex,
}

impl Default for NormalLimits {
    fn default() -> Self {
        Self {
            pr_min_ms: 120.0,
            pr_max_ms: 200.0,
            qrs_wide_ms: 120.0,
            qtc_prolonged_male_ms: 450.0,
            qtc_prolonged_female_ms: 460.0,
            qtc_short_ms: 350.0,
            rate_brady_bpm: 60.0,
            rate_tachy_bpm: 100.0,
            st_elev_mv: 0.1,
            st_depr_mv: -0.05,
            t_flat_mv: 0.1,
            low_qrs_voltage_limb_mv: 0.5,
            low_qrs_voltage_precordial_mv: 1.0,
            high_qrs_voltage_mv: 3.5,
            axis_left_deg: -30.0,
            axis_right_deg: 90.0,
            rr_irregular_cv: 0.10,
            irregularly_irregular_cv: 0.15,
            premature_beat_ratio: 0.80,
            p_present_ratio: 0.5,
            sinus_p_ratio: 0.9,
            sex: Sex::Unknown,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid normal limits: {0}")]
pub struct LimitsError(pub String);

impl NormalLimits {
    /// QTc prolongation cutoff for the configured sex (female value when unknown).
    pub fn qtc_prolonged_ms(&self) -> f64 {
        match self.sex {
            Sex::Male => self.qtc_prolonged_male_ms,
            Sex::Female | Sex::Unknown => self.qtc_prolonged_female_ms,
        }
    }

    /// Look up a limit by the name used in lexicon default thresholds.
    pub fn by_name(&self, name: &str) -> Option<f64> {
        Some(match name {
            "pr_min_ms" => self.pr_min_ms,
            "pr_max_ms" => self.pr_max_ms,
            "qrs_wide_ms" => self.qrs_wide_ms,
            "qtc_prolonged_ms" => self.qtc_prolonged_ms(),
            "qtc_short_ms" => self.qtc_short_ms,
            "rate_brady_bpm" => self.rate_brady_bpm,
            "rate_tachy_bpm" => self.rate_tachy_bpm,
            "st_elev_mv" => self.st_elev_mv,
            "st_depr_mv" => self.st_depr_mv,
            "t_flat_mv" => self.t_flat_mv,
            "axis_left_deg" => self.axis_left_deg,
            "axis_right_deg" => self.axis_right_deg,
            _ => return None,
        })
    }

    pub fn validate(&self) -> Result<(), LimitsError> {
        let values = [
            self.pr_min_ms,
            self.pr_max_ms,
            self.qrs_wide_ms,
            self.qtc_prolonged_male_ms,
            self.qtc_prolonged_female_ms,
            self.qtc_short_ms,
            self.rate_brady_bpm,
            self.rate_tachy_bpm,
            self.st_elev_mv,
            self.st_depr_mv,
            self.t_flat_mv,
            self.low_qrs_voltage_limb_mv,
            self.low_qrs_voltage_precordial_mv,
            self.high_qrs_voltage_mv,
            self.axis_left_deg,
            self.axis_right_deg,
            self.rr_irregular_cv,
            self.irregularly_irregular_cv,
            self.premature_beat_ratio,
            self.p_present_ratio,
            self.sinus_p_ratio,
        ];
        if values.iter().any(|v| !v.is_finite()) {
            return Err(LimitsError("all limits must be finite".into()));
        }
        if self.rate_brady_bpm >= self.rate_tachy_bpm {
            return Err(LimitsError(format!("brady {} must be below tachy {}", self.rate_brady_bpm, self.rate_tachy_bpm)));
        }
        if self.axis_left_deg >= self.axis_right_deg {
            return Err(LimitsError(format!("left axis {} must be below right axis {}", self.axis_left_deg, self.axis_right_deg)));
        }
        if self.pr_min_ms >= self.pr_max_ms {
            return Err(LimitsError("PR range is empty".into()));
        }
        for (name, r) in [("p_present_ratio", self.p_present_ratio), ("sinus_p_ratio", self.sinus_p_ratio), ("premature_beat_ratio", self.premature_beat_ratio)] {
            if !(0.0..=1.0).contains(&r) {
                return Err(LimitsError(format!("{name} must lie in [0, 1]")));
            }
        }
        if self.rr_irregular_cv > self.irregularly_irregular_cv {
            return Err(LimitsError("irregular CV limit exceeds irregularly-irregular limit".into()));
        }
        Ok(())
    }
}

/// Measurement tolerances: comparator findings whose measured value lies
/// within these distances of the threshold are treated as indeterminate
/// in inversion tests.
pub mod tolerance {
    pub const INTERVAL_MS: f64 = 5.0;
    pub const AMPLITUDE_MV: f64 = 0.02;
    pub const RATE_BPM: f64 = 1.0;
    pub const AXIS_DEG: f64 = 5.0;
}
