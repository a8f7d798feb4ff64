//! Fixed template text for claims:
//! `{Feature} is {Morphology}[ {op} {value}{unit}] in leads {leads}`.

use std::collections::BTreeSet;
use std::sync::LazyLock;

use regex::Regex;

use super::model::*;
use crate::signal::Lead;

fn feature_name(f: Feature) -> &'static str {
    match f {
        Feature::Interval(IntervalFeature::PR) => "PR Interval",
        Feature::Interval(IntervalFeature::QRS) => "QRS",
        Feature::Interval(IntervalFeature::QT) => "QT Interval",
        Feature::Interval(IntervalFeature::QTc) => "QTc Interval",
        Feature::Interval(IntervalFeature::RR) => "RR Interval",
        Feature::Interval(IntervalFeature::StSegment) => "ST Segment Duration",
        Feature::Amplitude(AmplitudeFeature::StDeviation) => "ST Segment",
        Feature::Amplitude(AmplitudeFeature::P) => "P Wave Amplitude",
        Feature::Amplitude(AmplitudeFeature::R) => "R Wave Amplitude",
        Feature::Amplitude(AmplitudeFeature::T) => "T Wave Amplitude",
        Feature::Rate(_) => "Heart Rate",
        Feature::Rhythm(_) => "Rhythm",
        Feature::Polarity(WaveFeature::P) | Feature::Presence(WaveFeature::P) => "P Wave",
        Feature::Polarity(WaveFeature::T) | Feature::Presence(WaveFeature::T) => "T Wave",
        Feature::Axis(_) => "Axis",
        Feature::Voltage(_) => "QRS Voltage",
        Feature::EctopicBeat(_) => "Premature Complex",
    }
}

/// Morphology words for (increase, decrease) comparators.
fn comparator_words(f: Feature) -> (&'static str, &'static str) {
    match f {
        Feature::Interval(IntervalFeature::QRS) => ("Wide", "Narrow"),
        Feature::Interval(_) => ("Prolonged", "Shortened"),
        Feature::Amplitude(AmplitudeFeature::StDeviation) => ("Elevated", "Depressed"),
        Feature::Amplitude(_) => ("High", "Low"),
        Feature::Rate(_) => ("Fast", "Slow"),
        _ => ("Rightward", "Leftward"),
    }
}

fn rhythm_word(r: RhythmFeature) -> &'static str {
    match r {
        RhythmFeature::Regular => "Regular",
        RhythmFeature::Irregular => "Irregular",
        RhythmFeature::IrregularlyIrregular => "Irregularly Irregular",
        RhythmFeature::Class(c) => c.title(),
    }
}

fn lead_list(s: &BTreeSet<Lead>) -> String {
    s.iter().map(|l| l.name()).collect::<Vec<_>>().join(", ")
}

fn scope_text(scope: &LeadScope) -> String {
    match scope {
        LeadScope::Any => "any".into(),
        LeadScope::All => "all".into(),
        LeadScope::Set(s) => lead_list(s),
        LeadScope::AnyOf(s) if s.len() == 1 => lead_list(s),
        LeadScope::AnyOf(s) => format!("any of {}", lead_list(s)),
    }
}

/// Render a claim in the fixed template.
///
/// ST depression is written with a positive depth: deviation `< -0.1`
/// reads "Depressed > 0.1mV".
pub fn canonicalize(claim: &Claim) -> String {
    let name = feature_name(claim.feature);
    let morph: String = match (claim.direction, claim.threshold) {
        (d, Some(t)) if d.is_comparator() => {
            let (up, down) = comparator_words(claim.feature);
            let is_up = matches!(d, Direction::Gt | Direction::Ge);
            let st = claim.feature == Feature::Amplitude(AmplitudeFeature::StDeviation);
            let (word, op, value) = if st && !is_up {
                (down, d.mirror().unwrap(), -t.value)
            } else {
                (if is_up { up } else { down }, d, t.value)
            };
            format!("{word} {} {value}{}", op.symbol().unwrap(), t.unit)
        }
        (Direction::WithinNormal, _) => "Normal".into(),
        (Direction::AboveNormal, _) => "High".into(),
        (Direction::BelowNormal, _) => "Low".into(),
        (Direction::Inverted, _) => "Inverted".into(),
        (Direction::Upright, _) => "Upright".into(),
        (Direction::Absent, _) => "Absent".into(),
        (Direction::Left, _) => "Left Deviated".into(),
        (Direction::Right, _) => "Right Deviated".into(),
        (Direction::Present, _) => match claim.feature {
            Feature::Rhythm(r) => rhythm_word(r).into(),
            _ => "Present".into(),
        },
        (d, _) => format!("{d:?}"),
    };
    format!("{name} is {morph} in leads {}", scope_text(&claim.leads))
}

static TEMPLATE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?i)^\s*(?P<name>.+?) is (?P<morph>[a-z][a-z ]*?)(?:\s+(?P<op>>=|<=|>|<|≥|≤)\s*(?P<value>-?\d+(?:\.\d+)?)\s*(?P<unit>ms|mv|mm|bpm|deg))? in leads? (?P<leads>.+?)\s*\.?\s*$",
    )
    .unwrap()
});

fn parse_scope(text: &str) -> Option<LeadScope> {
    let t = text.trim();
    let lower = t.to_ascii_lowercase();
    if lower == "any" {
        return Some(LeadScope::Any);
    }
    if lower == "all" {
        return Some(LeadScope::All);
    }
    let (any_of, list) = match lower.strip_prefix("any of ") {
        Some(_) => (true, &t[7..]),
        None => (false, t),
    };
    let leads: Option<BTreeSet<Lead>> = list
        .split(',')
        .map(|s| s.trim().parse::<Lead>().ok())
        .collect();
    let leads = leads.filter(|s| !s.is_empty())?;
    Some(if any_of { LeadScope::AnyOf(leads).normalized() } else { LeadScope::Set(leads) })
}

fn feature_by_name(name: &str, morph: &str) -> Option<Feature> {
    let n = name.trim().to_ascii_lowercase();
    let m = morph.trim().to_ascii_lowercase();
    let wave = |c: &str| if c.starts_with('p') { WaveFeature::P } else { WaveFeature::T };
    Some(match n.as_str() {
        "pr interval" => Feature::Interval(IntervalFeature::PR),
        "qrs" => Feature::Interval(IntervalFeature::QRS),
        "qt interval" => Feature::Interval(IntervalFeature::QT),
        "qtc interval" => Feature::Interval(IntervalFeature::QTc),
        "rr interval" => Feature::Interval(IntervalFeature::RR),
        "st segment duration" => Feature::Interval(IntervalFeature::StSegment),
        "st segment" => Feature::Amplitude(AmplitudeFeature::StDeviation),
        "p wave amplitude" => Feature::Amplitude(AmplitudeFeature::P),
        "r wave amplitude" => Feature::Amplitude(AmplitudeFeature::R),
        "t wave amplitude" => Feature::Amplitude(AmplitudeFeature::T),
        "heart rate" => Feature::Rate(RateFeature::HeartRate),
        "axis" => Feature::Axis(AxisFeature::Frontal),
        "qrs voltage" => Feature::Voltage(VoltageFeature::QRS),
        "premature complex" => Feature::EctopicBeat(EctopicFeature::PrematureComplex),
        "rhythm" => Feature::Rhythm(match m.as_str() {
            "regular" => RhythmFeature::Regular,
            "irregular" => RhythmFeature::Irregular,
            "irregularly irregular" => RhythmFeature::IrregularlyIrregular,
            other => RhythmFeature::Class(RhythmClass::from_title(other)?),
        }),
        "p wave" | "t wave" => match m.as_str() {
            "inverted" | "upright" => Feature::Polarity(wave(&n)),
            "absent" | "present" => Feature::Presence(wave(&n)),
            _ => return None,
        },
        _ => return None,
    })
}

/// Parse text produced by [`canonicalize`] (case-insensitive). Returns
/// `None` for anything that does not follow the template exactly.
pub fn parse_canonical(text: &str) -> Option<Claim> {
    let caps = TEMPLATE.captures(text)?;
    let morph = caps.name("morph")?.as_str().trim();
    let feature = feature_by_name(caps.name("name")?.as_str(), morph)?;
    let leads = parse_scope(caps.name("leads")?.as_str())?;
    let m = morph.to_ascii_lowercase();

    let claim = if let Some(op) = caps.name("op") {
        let op = Direction::from_symbol(op.as_str())?;
        let value: f64 = caps.name("value")?.as_str().parse().ok()?;
        let unit = Unit::parse(caps.name("unit")?.as_str())?;
        let (up, down) = comparator_words(feature);
        let is_up = matches!(op, Direction::Gt | Direction::Ge);
        let st = feature == Feature::Amplitude(AmplitudeFeature::StDeviation);
        let (direction, value) = if m == up.to_ascii_lowercase() {
            (op, value)
        } else if m == down.to_ascii_lowercase() {
            if st {
                (op.mirror()?, -value)
            } else {
                (op, value)
            }
        } else {
            return None;
        };
        if !st && (m == up.to_ascii_lowercase()) != is_up {
            return None;
        }
        if st && !is_up {
            return None;
        }
        Claim::new(feature, direction, Some(Threshold::new(value, unit)), leads)
    } else {
        let direction = match (feature, m.as_str()) {
            (Feature::Rhythm(_), _) => Direction::Present,
            (_, "normal") => Direction::WithinNormal,
            (Feature::Voltage(_), "high") => Direction::AboveNormal,
            (Feature::Voltage(_), "low") => Direction::BelowNormal,
            (_, "inverted") => Direction::Inverted,
            (_, "upright") => Direction::Upright,
            (_, "absent") => Direction::Absent,
            (_, "present") => Direction::Present,
            (_, "left deviated") => Direction::Left,
            (_, "right deviated") => Direction::Right,
            _ => return None,
        };
        Claim::new(feature, direction, None, leads)
    };
    claim.validate().ok()?;
    Some(claim)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn template_fill() {
        let st = Claim::new(
            Feature::Amplitude(AmplitudeFeature::StDeviation),
            Direction::Gt,
            Some(Threshold::new(0.1, Unit::MV)),
            LeadScope::set([Lead::V1]),
        );
        assert_eq!(canonicalize(&st), "ST Segment is Elevated > 0.1mV in leads V1");
        let qrs = Claim::new(
            Feature::Interval(IntervalFeature::QRS),
            Direction::Ge,
            Some(Threshold::new(120.0, Unit::Ms)),
            LeadScope::Any,
        );
        assert_eq!(canonicalize(&qrs), "QRS is Wide >= 120ms in leads any");
    }

    #[test]
    fn depression_mirrors_sign() {
        let c = Claim::new(
            Feature::Amplitude(AmplitudeFeature::StDeviation),
            Direction::Lt,
            Some(Threshold::new(-0.1, Unit::MV)),
            LeadScope::AnyOf([Lead::II, Lead::III].into()),
        );
        let text = canonicalize(&c);
        assert_eq!(text, "ST Segment is Depressed > 0.1mV in leads any of II, III");
        assert_eq!(parse_canonical(&text), Some(c));
    }

    #[test]
    fn clinical_style_example_parses() {
        let c = parse_canonical("ST Segment is Elevated > 2mm in leads V1, V2").unwrap();
        assert_eq!(c.feature, Feature::Amplitude(AmplitudeFeature::StDeviation));
        assert_eq!(c.direction, Direction::Gt);
        let t = c.threshold.unwrap();
        assert_eq!((t.value, t.unit), (2.0, Unit::Mm));
        assert!((t.canonical_value() - 0.2).abs() < 1e-12);
        assert_eq!(c.leads, LeadScope::set([Lead::V1, Lead::V2]));
    }

    #[test]
    fn non_template_text_rejected() {
        assert_eq!(parse_canonical("QRS is Narrow >= 120ms in leads any"), None);
        assert_eq!(parse_canonical("QRS is Wide in leads any"), None);
        assert_eq!(parse_canonical("ST elevation in V1"), None);
        assert_eq!(parse_canonical("QRS is Wide >= 120ms in leads V9"), None);
    }

    #[test]
    fn non_comparator_forms_round_trip() {
        for text in [
            "Rhythm is Irregularly Irregular in leads any",
            "Rhythm is Sinus Tachycardia in leads any",
            "T Wave is Inverted in leads V1, V2, V3",
            "P Wave is Absent in leads all",
            "Axis is Left Deviated in leads any",
            "QRS Voltage is Low in leads any",
            "Premature Complex is Present in leads any",
            "PR Interval is Normal in leads II",
        ] {
            let c = parse_canonical(text).unwrap_or_else(|| panic!("{text}"));
            assert_eq!(canonicalize(&c), text);
        }
    }
}
