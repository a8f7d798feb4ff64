//! Seeded generators for synthetic records, findings and notes.
//!
//! Used by the test suites and by the CLI to build fixture corpora whose
//! ground truth is known.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::delineation::{analyze_record, DelineateError, DelineatorConfig};
use crate::findings::*;
use crate::signal::{synthesize_ecg, Delineation, EcgRecord, FeatureTable, Lead, SignalError, SynthSpec};

/// A feasible spec spanning HR 40–180 bpm and QRS 70–160 ms, with P waves
/// in roughly 70% of records.
pub fn random_spec(seed: u64) -> SynthSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hr: f64 = rng.gen_range(40.0..=180.0);
    let qrs: f64 = rng.gen_range(70.0..=160.0);
    let rr = 60_000.0 / hr;
    let qt = (400.0 * (rr / 1000.0).sqrt()).max(qrs + 80.0);
    let pr = rng.gen_range(120.0..=200.0_f64).min(rr - qt - 30.0);
    let p_present = rng.gen_bool(0.7) && pr >= 90.0;
    SynthSpec {
        hr_bpm: hr,
        qrs_width_ms: qrs,
        qt_ms: qt,
        pr_ms: if p_present { pr } else { 160.0_f64.min(pr.max(60.0)) },
        p_present,
        noise_mv: 0.01,
        seed,
        axis_deg: rng.gen_range(-20.0..=90.0),
        ..Default::default()
    }
}

fn random_scope(rng: &mut impl Rng) -> LeadScope {
    let kind = rng.gen_range(0..4);
    let n = if kind == 2 { rng.gen_range(1..=4) } else { rng.gen_range(2..=4) };
    let leads = Lead::ALL.choose_multiple(rng, n).copied().collect();
    match kind {
        0 => LeadScope::Any,
        1 => LeadScope::All,
        2 => LeadScope::Set(leads),
        _ => LeadScope::AnyOf(leads),
    }
}

fn random_threshold(feature: Feature, rng: &mut impl Rng) -> Threshold {
    let unit = *feature.allowed_units().choose(rng).expect("comparator features have units");
    let value = match unit {
        Unit::Ms => f64::from(rng.gen_range(20..=600)),
        Unit::MV => f64::from(rng.gen_range(-150..=250)) / 100.0,
        Unit::Mm => f64::from(rng.gen_range(-10..=30)) / 2.0,
        Unit::Bpm => f64::from(rng.gen_range(20..=220)),
        Unit::Deg => f64::from(rng.gen_range(-180..=180)),
    };
    Threshold::new(value, unit)
}

/// Any valid claim, across every feature kind, direction and scope shape.
pub fn random_claim(rng: &mut impl Rng) -> Claim {
    use AmplitudeFeature as A;
    use IntervalFeature as I;
    let feature = match rng.gen_range(0..9) {
        0 => Feature::Interval(*[I::PR, I::QRS, I::QT, I::QTc, I::RR, I::StSegment].choose(rng).unwrap()),
        1 => Feature::Amplitude(*[A::P, A::R, A::T, A::StDeviation].choose(rng).unwrap()),
        2 => Feature::Rate(RateFeature::HeartRate),
        3 => Feature::Rhythm(match rng.gen_range(0..4) {
            0 => RhythmFeature::Regular,
            1 => RhythmFeature::Irregular,
            2 => RhythmFeature::IrregularlyIrregular,
            _ => RhythmFeature::Class(*RhythmClass::ALL.choose(rng).unwrap()),
        }),
        4 => Feature::Polarity(*[WaveFeature::P, WaveFeature::T].choose(rng).unwrap()),
        5 => Feature::Presence(*[WaveFeature::P, WaveFeature::T].choose(rng).unwrap()),
        6 => Feature::Axis(AxisFeature::Frontal),
        7 => Feature::Voltage(VoltageFeature::QRS),
        _ => Feature::EctopicBeat(EctopicFeature::PrematureComplex),
    };
    let direction = *Claim::allowed_directions(feature).choose(rng).unwrap();
    let threshold = direction.is_comparator().then(|| random_threshold(feature, rng));
    Claim::new(feature, direction, threshold, random_scope(rng))
}

#[derive(Debug, Clone)]
pub struct SyntheticCase {
    pub trace_id: String,
    pub spec: SynthSpec,
    pub record: EcgRecord,
    pub truth: Delineation,
    pub features: FeatureTable,
    pub note: String,
}

#[derive(Debug, thiserror::Error)]
pub enum SyntheticError {
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Delineate(#[from] DelineateError),
}

/// Margins between measured values and note thresholds, in the order
/// (interval ms, rate bpm, amplitude mV). Each range sits well clear of
/// the measurement tolerances.
const MARGINS: [(f64, f64); 3] = [(12.0, 40.0), (5.0, 20.0), (0.06, 0.2)];

fn offset(rng: &mut impl Rng, (lo, hi): (f64, f64)) -> (bool, f64) {
    (rng.gen_bool(0.5), rng.gen_range(lo..=hi))
}

/// A short note whose every statement holds for `ft` with a margin.
pub fn note_from_features(ft: &FeatureTable, rng: &mut ChaCha8Rng) -> String {
    let mut out: Vec<String> = Vec::new();
    let Some(lead) = ft.rhythm_lead() else {
        return String::new();
    };
    let lf = &ft.leads[&lead];
    let name = lead.name();
    if let Some(hr) = lf.avg_heart_rate_bpm {
        let (above, m) = offset(rng, MARGINS[1]);
        out.push(if above {
            format!("Heart rate is above {:.0} bpm.", (hr - m).floor())
        } else {
            format!("Heart rate is below {:.0} bpm.", (hr + m).ceil())
        });
    }
    for (label, v) in [("QRS duration", lf.avg_qrs_interval_ms), ("PR interval", lf.avg_pr_interval_ms), ("QTc", lf.avg_qtc_interval_ms)] {
        let Some(v) = v else { continue };
        let (above, m) = offset(rng, MARGINS[0]);
        out.push(if above {
            format!("{label} greater than {:.0} ms in lead {name}.", (v - m).floor())
        } else {
            format!("{label} less than {:.0} ms in lead {name}.", (v + m).ceil())
        });
    }
    if let Some(st) = lf.avg_st_deviation_mv {
        let (above, m) = offset(rng, MARGINS[2]);
        out.push(if above {
            format!("ST deviation above {:.2} mV in lead {name}.", st - m - 0.005)
        } else {
            format!("ST deviation below {:.2} mV in lead {name}.", st + m + 0.005)
        });
    }
    match lf.p_wave_ratio {
        Some(r) if r >= 0.95 => out.push(format!("P waves are present in lead {name}.")),
        Some(r) if r <= 0.05 => out.push(format!("No P waves in lead {name}.")),
        _ => {}
    }
    out.shuffle(rng);
    out.join(" ")
}

/// Synthesize a record from [`random_spec`], measure it, and write a note
/// consistent with the measurements.
pub fn synthetic_case(seed: u64, cfg: &DelineatorConfig) -> Result<SyntheticCase, SyntheticError> {
    let spec = random_spec(seed);
    let (record, truth) = synthesize_ecg(&spec)?;
    let record = record.with_record_id(format!("syn{seed:05}"));
    let (_, features) = analyze_record(&record, None, cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0f_0e7e);
    let note = note_from_features(&features, &mut rng);
    Ok(SyntheticCase { trace_id: format!("syn{seed:05}"), spec, record, truth, features, note })
}
