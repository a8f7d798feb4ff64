//! Deterministic predicate evaluation of findings against measured features.

use serde::{Deserialize, Serialize};

use crate::findings::*;
use crate::limits::NormalLimits;
use crate::signal::{EcgRecord, FeatureTable, Lead, LeadFeatures};

/// Fewest RR intervals a rhythm rule will look at.
pub const MIN_RR_INTERVALS: usize = 4;
/// Autocorrelation at lags 1..=3 at or above this marks a repeating RR pattern.
pub const RR_PATTERN_ACF: f64 = 0.5;

const LIMB: [Lead; 6] = [Lead::I, Lead::II, Lead::III, Lead::AVR, Lead::AVL, Lead::AVF];
const PRECORDIAL: [Lead; 6] = [Lead::V1, Lead::V2, Lead::V3, Lead::V4, Lead::V5, Lead::V6];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    Verified,
    Refuted,
    Unverifiable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub value: f64,
    pub unit: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lead: Option<Lead>,
}

impl Measurement {
    fn new(value: f64, unit: &str, lead: Option<Lead>) -> Self {
        Self { value, unit: unit.to_string(), lead }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationResult {
    pub finding_id: String,
    pub status: Status,
    pub measured: Option<Measurement>,
    pub rule_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(default)]
    pub quote: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Outcome {
    Decided(bool, Measurement),
    Unknown(String),
}

use Outcome::{Decided, Unknown};

fn unknown(msg: impl Into<String>) -> Outcome {
    Unknown(msg.into())
}

fn not(o: Outcome) -> Outcome {
    match o {
        Decided(b, m) => Decided(!b, m),
        u => u,
    }
}

/// Three-valued conjunction: one false decides, otherwise any unknown wins.
fn all_of(outs: Vec<Outcome>) -> Outcome {
    if let Some(f) = outs.iter().find(|o| matches!(o, Decided(false, _))) {
        return f.clone();
    }
    if let Some(u) = outs.iter().find(|o| matches!(o, Unknown(_))) {
        return u.clone();
    }
    outs.into_iter().next().unwrap_or_else(|| unknown("no leads to evaluate"))
}

fn any_of(outs: Vec<Outcome>) -> Outcome {
    not(all_of(outs.into_iter().map(not).collect()))
}

fn rule_id(claim: &Claim) -> String {
    let v = serde_json::to_value(claim.feature).unwrap_or_default();
    let feature = v.get("feature").and_then(|f| f.as_str()).unwrap_or("?").to_ascii_lowercase();
    let dir = serde_json::to_value(claim.direction)
        .ok()
        .and_then(|d| d.as_str().map(str::to_ascii_lowercase))
        .unwrap_or_default();
    format!("{}.{feature}.{dir}", claim.feature.kind_name().to_ascii_lowercase())
}

fn numeric_value(feature: Feature, lf: &LeadFeatures) -> Option<(f64, &'static str)> {
    use AmplitudeFeature as A;
    use IntervalFeature as I;
    let (v, unit) = match feature {
        Feature::Interval(i) => (
            match i {
                I::PR => lf.avg_pr_interval_ms,
                I::QRS => lf.avg_qrs_interval_ms,
                I::QT => lf.avg_qt_interval_ms,
                I::QTc => lf.avg_qtc_interval_ms,
                I::RR => lf.avg_rr_interval_ms,
                I::StSegment => lf.avg_st_segment_ms,
            },
            "ms",
        ),
        Feature::Amplitude(a) => (
            match a {
                A::P => lf.avg_p_peak_amp_mv,
                A::R => lf.avg_qrs_max_amp_mv,
                A::T => lf.avg_t_peak_amp_mv,
                A::StDeviation => lf.avg_st_deviation_mv,
            },
            "mV",
        ),
        Feature::Rate(_) => (lf.avg_heart_rate_bpm, "bpm"),
        _ => return None,
    };
    v.filter(|x| x.is_finite()).map(|x| (x, unit))
}

/// Inclusive-or-strict bounds of the normal range: (low, low inclusive, high, high inclusive).
fn normal_range(feature: Feature, l: &NormalLimits) -> Option<(f64, bool, f64, bool)> {
    use IntervalFeature as I;
    Some(match feature {
        Feature::Interval(I::PR) => (l.pr_min_ms, true, l.pr_max_ms, true),
        Feature::Interval(I::QRS) => (f64::NEG_INFINITY, true, l.qrs_wide_ms, false),
        Feature::Interval(I::QTc) => (l.qtc_short_ms, false, l.qtc_prolonged_ms(), false),
        Feature::Interval(I::RR) => (60_000.0 / l.rate_tachy_bpm, true, 60_000.0 / l.rate_brady_bpm, true),
        Feature::Amplitude(AmplitudeFeature::StDeviation) => (l.st_depr_mv, false, l.st_elev_mv, false),
        Feature::Rate(_) => (l.rate_brady_bpm, true, l.rate_tachy_bpm, true),
        Feature::Axis(_) => (l.axis_left_deg, true, l.axis_right_deg, true),
        _ => return None,
    })
}

fn in_range(x: f64, (lo, lo_in, hi, hi_in): (f64, bool, f64, bool)) -> bool {
    let above = if lo_in { x >= lo } else { x > lo };
    let below = if hi_in { x <= hi } else { x < hi };
    above && below
}

fn numeric_predicate(claim: &Claim, value: f64, limits: &NormalLimits) -> Option<bool> {
    match claim.direction {
        d if d.is_comparator() => d.compare(value, claim.threshold?.canonical_value()),
        Direction::WithinNormal => Some(in_range(value, normal_range(claim.feature, limits)?)),
        Direction::Left if matches!(claim.feature, Feature::Axis(_)) => Some(value < limits.axis_left_deg),
        Direction::Right if matches!(claim.feature, Feature::Axis(_)) => Some(value > limits.axis_right_deg),
        _ => None,
    }
}

pub(crate) fn rr_stats(rr: &[f64]) -> Option<(f64, f64)> {
    if rr.len() < 2 {
        return None;
    }
    let n = rr.len() as f64;
    let mean = rr.iter().sum::<f64>() / n;
    if mean <= 0.0 {
        return None;
    }
    let var = rr.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    Some((mean, var.sqrt() / mean))
}

/// Sample autocorrelation of the RR sequence at `lag`.
pub(crate) fn autocorrelation(rr: &[f64], lag: usize) -> f64 {
    if rr.len() <= lag {
        return 0.0;
    }
    let n = rr.len() as f64;
    let mean = rr.iter().sum::<f64>() / n;
    let denom: f64 = rr.iter().map(|x| (x - mean).powi(2)).sum();
    if denom <= 0.0 {
        return 0.0;
    }
    let num: f64 = rr.windows(lag + 1).map(|w| (w[0] - mean) * (w[lag] - mean)).sum();
    num / denom
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 0 { 0.5 * (s[m - 1] + s[m]) } else { s[m] }
}

struct Ctx<'a> {
    ft: &'a FeatureTable,
    rec: &'a EcgRecord,
    limits: &'a NormalLimits,
}

impl Ctx<'_> {
    fn lead(&self, lead: Lead) -> Result<&LeadFeatures, Outcome> {
        if !self.rec.has_lead(lead) {
            return Err(unknown(format!("lead {} not recorded", lead.name())));
        }
        self.ft.lead(lead).ok_or_else(|| unknown(format!("no features for lead {}", lead.name())))
    }

    /// Evaluate a per-lead predicate over the claim's lead scope.
    fn over_scope(&self, claim: &Claim, eval: impl Fn(Lead, &LeadFeatures) -> Outcome) -> Outcome {
        let per_lead = |lead: Lead| match self.lead(lead) {
            Ok(lf) => eval(lead, lf),
            Err(u) => u,
        };
        match &claim.leads {
            LeadScope::Set(s) => all_of(s.iter().map(|l| per_lead(*l)).collect()),
            LeadScope::AnyOf(s) => any_of(s.iter().map(|l| per_lead(*l)).collect()),
            scope @ (LeadScope::Any | LeadScope::All) => {
                if claim.feature.is_record_level() {
                    return match self.ft.rhythm_lead() {
                        Some(l) => per_lead(l),
                        None => unknown("no lead with detected beats"),
                    };
                }
                let measurable: Vec<Outcome> = self
                    .ft
                    .leads
                    .keys()
                    .filter(|l| self.rec.has_lead(**l))
                    .map(|l| per_lead(*l))
                    .filter(|o| matches!(o, Decided(..)))
                    .collect();
                if measurable.is_empty() {
                    return unknown("feature not measurable in any lead");
                }
                if *scope == LeadScope::Any { any_of(measurable) } else { all_of(measurable) }
            }
        }
    }

    fn numeric(&self, claim: &Claim) -> Outcome {
        self.over_scope(claim, |lead, lf| match numeric_value(claim.feature, lf) {
            None => unknown(format!("{} not measured in lead {}", claim.feature.kind_name(), lead.name())),
            Some((v, unit)) => match numeric_predicate(claim, v, self.limits) {
                Some(b) => Decided(b, Measurement::new(v, unit, Some(lead))),
                None => unknown("no reference range for this feature"),
            },
        })
    }

    fn axis(&self, claim: &Claim) -> Outcome {
        let Some(axis) = self.ft.frontal_axis_deg.filter(|a| a.is_finite()) else {
            return unknown("frontal axis not measured");
        };
        match numeric_predicate(claim, axis, self.limits) {
            Some(b) => Decided(b, Measurement::new(axis, "deg", None)),
            None => unknown("unsupported axis direction"),
        }
    }

    fn presence(&self, claim: &Claim, wave: WaveFeature) -> Outcome {
        let want = claim.direction == Direction::Present;
        self.over_scope(claim, |lead, lf| {
            if lf.r_peak_idxs.is_empty() {
                return unknown(format!("no beats in lead {}", lead.name()));
            }
            let present = match wave {
                WaveFeature::P => {
                    let r = lf.p_wave_ratio.unwrap_or(0.0);
                    return Decided((r >= self.limits.p_present_ratio) == want, Measurement::new(r, "ratio", Some(lead)));
                }
                WaveFeature::T => lf.avg_t_peak_amp_mv.unwrap_or(0.0),
            };
            Decided((present.abs() >= self.limits.t_flat_mv) == want, Measurement::new(present, "mV", Some(lead)))
        })
    }

    fn polarity(&self, claim: &Claim, wave: WaveFeature) -> Outcome {
        self.over_scope(claim, |lead, lf| {
            let amp = match wave {
                WaveFeature::P => lf.avg_p_peak_amp_mv,
                WaveFeature::T => lf.avg_t_peak_amp_mv,
            };
            let Some(a) = amp.filter(|a| a.is_finite()) else {
                return unknown(format!("wave not delineated in lead {}", lead.name()));
            };
            let b = match claim.direction {
                Direction::Inverted => a < 0.0,
                _ => a > 0.0,
            };
            Decided(b, Measurement::new(a, "mV", Some(lead)))
        })
    }

    fn rhythm(&self, claim: &Claim, r: RhythmFeature) -> Outcome {
        let l = self.limits;
        self.over_scope(claim, |lead, lf| {
            let rr = &lf.rr_intervals_ms;
            if rr.len() < MIN_RR_INTERVALS {
                return unknown(format!("too few RR intervals in lead {}", lead.name()));
            }
            let Some((mean, cv)) = rr_stats(rr) else {
                return unknown("degenerate RR sequence");
            };
            let cv_m = Measurement::new(cv, "cv", Some(lead));
            let regular = cv <= l.rr_irregular_cv;
            match r {
                RhythmFeature::Regular => Decided(regular, cv_m),
                RhythmFeature::Irregular => Decided(!regular, cv_m),
                RhythmFeature::IrregularlyIrregular => {
                    let patterned = (1..=3).any(|k| autocorrelation(rr, k) >= RR_PATTERN_ACF);
                    Decided(cv > l.irregularly_irregular_cv && !patterned, cv_m)
                }
                RhythmFeature::Class(c) => {
                    let hr = lf.avg_heart_rate_bpm.unwrap_or(60_000.0 / mean);
                    let p = lf.p_wave_ratio.unwrap_or(0.0);
                    let sinus_p = p >= l.sinus_p_ratio;
                    let no_p = p < l.p_present_ratio;
                    let b = match c {
                        RhythmClass::SinusRhythm => sinus_p && regular && hr >= l.rate_brady_bpm && hr <= l.rate_tachy_bpm,
                        RhythmClass::SinusBradycardia => sinus_p && regular && hr < l.rate_brady_bpm,
                        RhythmClass::SinusTachycardia => sinus_p && regular && hr > l.rate_tachy_bpm,
                        RhythmClass::AtrialFibrillation => {
                            no_p && cv > l.irregularly_irregular_cv && (1..=3).all(|k| autocorrelation(rr, k) < RR_PATTERN_ACF)
                        }
                        RhythmClass::AtrialFlutter => no_p && regular && hr > l.rate_tachy_bpm,
                        RhythmClass::JunctionalRhythm => no_p && regular && hr <= l.rate_tachy_bpm,
                    };
                    Decided(b, Measurement::new(hr, "bpm", Some(lead)))
                }
            }
        })
    }

    fn ectopic(&self, claim: &Claim) -> Outcome {
        let want = claim.direction == Direction::Present;
        self.over_scope(claim, |lead, lf| {
            let rr = &lf.rr_intervals_ms;
            if rr.len() < MIN_RR_INTERVALS {
                return unknown(format!("too few RR intervals in lead {}", lead.name()));
            }
            let med = median(rr);
            let min = rr.iter().copied().fold(f64::INFINITY, f64::min);
            let ratio = min / med;
            Decided((ratio < self.limits.premature_beat_ratio) == want, Measurement::new(ratio, "ratio", Some(lead)))
        })
    }

    fn p2p(&self, lead: Lead) -> Option<f64> {
        if !self.rec.has_lead(lead) {
            return None;
        }
        self.ft.lead(lead)?.qrs_peak_to_peak_mv().filter(|v| v.is_finite())
    }

    fn voltage(&self, claim: &Claim) -> Outcome {
        let l = self.limits;
        let group_low = |leads: &[Lead], limit: f64| {
            all_of(
                leads
                    .iter()
                    .map(|ld| match self.p2p(*ld) {
                        Some(v) => Decided(v < limit, Measurement::new(v, "mV", Some(*ld))),
                        None => unknown(format!("QRS amplitude missing in lead {}", ld.name())),
                    })
                    .collect(),
            )
        };
        let low = any_of(vec![group_low(&LIMB, l.low_qrs_voltage_limb_mv), group_low(&PRECORDIAL, l.low_qrs_voltage_precordial_mv)]);
        let high = {
            let s_v1 = self.ft.lead(Lead::V1).and_then(|f| f.avg_qrs_min_amp_mv).filter(|_| self.rec.has_lead(Lead::V1));
            let r_lat = [Lead::V5, Lead::V6]
                .iter()
                .filter(|ld| self.rec.has_lead(**ld))
                .filter_map(|ld| self.ft.lead(*ld)?.avg_qrs_max_amp_mv)
                .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))));
            match (s_v1, r_lat) {
                (Some(s), Some(r)) => {
                    let sum = (-s).max(0.0) + r.max(0.0);
                    Decided(sum >= l.high_qrs_voltage_mv, Measurement::new(sum, "mV", None))
                }
                _ => unknown("Sokolow-Lyon leads not measured"),
            }
        };
        match claim.direction {
            Direction::AboveNormal => high,
            Direction::BelowNormal => low,
            _ => not(any_of(vec![low, high])),
        }
    }

    fn evaluate(&self, claim: &Claim) -> Outcome {
        if let Err(e) = claim.validate() {
            return unknown(format!("invalid finding: {e}"));
        }
        match claim.feature {
            Feature::Interval(_) | Feature::Amplitude(_) | Feature::Rate(_) => self.numeric(claim),
            Feature::Axis(_) => self.axis(claim),
            Feature::Presence(w) => self.presence(claim, w),
            Feature::Polarity(w) => self.polarity(claim, w),
            Feature::Rhythm(r) => self.rhythm(claim, r),
            Feature::EctopicBeat(_) => self.ectopic(claim),
            Feature::Voltage(_) => self.voltage(claim),
        }
    }
}

/// Check one finding against the record's measured features.
pub fn verify_finding(f: &Finding, ft: &FeatureTable, rec: &EcgRecord, limits: &NormalLimits) -> VerificationResult {
    let ctx = Ctx { ft, rec, limits };
    let (status, measured, reason) = match ctx.evaluate(&f.claim) {
        Decided(true, m) => (Status::Verified, Some(m), None),
        Decided(false, m) => (Status::Refuted, Some(m), None),
        Unknown(r) => (Status::Unverifiable, None, Some(r)),
    };
    VerificationResult {
        finding_id: f.finding_id.clone(),
        status,
        measured,
        rule_id: rule_id(&f.claim),
        reason,
        quote: f.quotes.join(" "),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvaluation {
    pub trace_id: String,
    pub results: Vec<VerificationResult>,
    pub n_verifiable: usize,
    pub n_verified: usize,
    /// `None` when no finding could be verified either way.
    pub verified_fraction: Option<f64>,
    pub zero_verifiable: bool,
}

impl TraceEvaluation {
    pub fn from_results(trace_id: impl Into<String>, results: Vec<VerificationResult>) -> Self {
        let n_verifiable = results.iter().filter(|r| r.status != Status::Unverifiable).count();
        let n_verified = results.iter().filter(|r| r.status == Status::Verified).count();
        Self {
            trace_id: trace_id.into(),
            results,
            n_verifiable,
            n_verified,
            verified_fraction: (n_verifiable > 0).then(|| n_verified as f64 / n_verifiable as f64),
            zero_verifiable: n_verifiable == 0,
        }
    }
}

pub fn verify_trace(
    trace_id: &str,
    findings: &[Finding],
    ft: &FeatureTable,
    rec: &EcgRecord,
    limits: &NormalLimits,
) -> TraceEvaluation {
    let results = findings.iter().map(|f| verify_finding(f, ft, rec, limits)).collect();
    TraceEvaluation::from_results(trace_id, results)
}
