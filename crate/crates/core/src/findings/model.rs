use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::signal::Lead;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IntervalFeature {
    PR,
    QRS,
    QT,
    QTc,
    RR,
    #[serde(rename = "ST_SEGMENT")]
    StSegment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AmplitudeFeature {
    P,
    R,
    T,
    #[serde(rename = "ST_DEVIATION")]
    StDeviation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RateFeature {
    #[serde(rename = "HEART_RATE")]
    HeartRate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RhythmClass {
    SinusRhythm,
    SinusBradycardia,
    SinusTachycardia,
    AtrialFibrillation,
    AtrialFlutter,
    JunctionalRhythm,
}

impl RhythmClass {
    pub const ALL: [RhythmClass; 6] = [
        RhythmClass::SinusRhythm,
        RhythmClass::SinusBradycardia,
        RhythmClass::SinusTachycardia,
        RhythmClass::AtrialFibrillation,
        RhythmClass::AtrialFlutter,
        RhythmClass::JunctionalRhythm,
    ];

    /// Title-case display name, e.g. "Sinus Tachycardia".
    pub fn title(self) -> &'static str {
        match self {
            RhythmClass::SinusRhythm => "Sinus Rhythm",
            RhythmClass::SinusBradycardia => "Sinus Bradycardia",
            RhythmClass::SinusTachycardia => "Sinus Tachycardia",
            RhythmClass::AtrialFibrillation => "Atrial Fibrillation",
            RhythmClass::AtrialFlutter => "Atrial Flutter",
            RhythmClass::JunctionalRhythm => "Junctional Rhythm",
        }
    }

    pub fn from_title(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.title().eq_ignore_ascii_case(s.trim()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RhythmFeature {
    Regular,
    Irregular,
    IrregularlyIrregular,
    #[serde(untagged)]
    Class(RhythmClass),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum WaveFeature {
    P,
    T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AxisFeature {
    #[serde(rename = "FRONTAL")]
    Frontal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum VoltageFeature {
    QRS,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EctopicFeature {
    #[serde(rename = "PREMATURE_COMPLEX")]
    PrematureComplex,
}

/// What a finding talks about: a kind plus the kind-specific feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "feature")]
pub enum Feature {
    Interval(IntervalFeature),
    Amplitude(AmplitudeFeature),
    Rate(RateFeature),
    Rhythm(RhythmFeature),
    Polarity(WaveFeature),
    Presence(WaveFeature),
    Axis(AxisFeature),
    Voltage(VoltageFeature),
    EctopicBeat(EctopicFeature),
}

impl Feature {
    pub fn kind_name(self) -> &'static str {
        match self {
            Feature::Interval(_) => "Interval",
            Feature::Amplitude(_) => "Amplitude",
            Feature::Rate(_) => "Rate",
            Feature::Rhythm(_) => "Rhythm",
            Feature::Polarity(_) => "Polarity",
            Feature::Presence(_) => "Presence",
            Feature::Axis(_) => "Axis",
            Feature::Voltage(_) => "Voltage",
            Feature::EctopicBeat(_) => "EctopicBeat",
        }
    }

    /// Units a threshold on this feature may carry.
    pub fn allowed_units(self) -> &'static [Unit] {
        match self {
            Feature::Interval(_) => &[Unit::Ms],
            Feature::Amplitude(_) => &[Unit::MV, Unit::Mm],
            Feature::Rate(_) => &[Unit::Bpm],
            Feature::Axis(_) => &[Unit::Deg],
            _ => &[],
        }
    }

    pub fn default_unit(self) -> Option<Unit> {
        self.allowed_units().first().copied()
    }

    pub fn supports_comparator(self) -> bool {
        !self.allowed_units().is_empty()
    }

    /// Features measured once per record rather than per lead.
    pub fn is_record_level(self) -> bool {
        matches!(
            self,
            Feature::Rate(_) | Feature::Rhythm(_) | Feature::EctopicBeat(_) | Feature::Axis(_) | Feature::Voltage(_)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "GT")]
    Gt,
    #[serde(rename = "GE")]
    Ge,
    #[serde(rename = "LT")]
    Lt,
    #[serde(rename = "LE")]
    Le,
    WithinNormal,
    AboveNormal,
    BelowNormal,
    Inverted,
    Upright,
    Absent,
    Present,
    Left,
    Right,
}

impl Direction {
    pub fn is_comparator(self) -> bool {
        matches!(self, Direction::Gt | Direction::Ge | Direction::Lt | Direction::Le)
    }

    pub fn symbol(self) -> Option<&'static str> {
        Some(match self {
            Direction::Gt => ">",
            Direction::Ge => ">=",
            Direction::Lt => "<",
            Direction::Le => "<=",
            _ => return None,
        })
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        Some(match s {
            ">" => Direction::Gt,
            ">=" | "≥" => Direction::Ge,
            "<" => Direction::Lt,
            "<=" | "≤" => Direction::Le,
            _ => return None,
        })
    }

    /// The comparator that holds exactly when this one fails.
    pub fn complement(self) -> Option<Self> {
        Some(match self {
            Direction::Gt => Direction::Le,
            Direction::Ge => Direction::Lt,
            Direction::Lt => Direction::Ge,
            Direction::Le => Direction::Gt,
            _ => return None,
        })
    }

    /// Same comparison seen from the other side (`a > b` is `-a < -b`).
    pub fn mirror(self) -> Option<Self> {
        Some(match self {
            Direction::Gt => Direction::Lt,
            Direction::Ge => Direction::Le,
            Direction::Lt => Direction::Gt,
            Direction::Le => Direction::Ge,
            _ => return None,
        })
    }

    pub fn compare(self, measured: f64, threshold: f64) -> Option<bool> {
        Some(match self {
            Direction::Gt => measured > threshold,
            Direction::Ge => measured >= threshold,
            Direction::Lt => measured < threshold,
            Direction::Le => measured <= threshold,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Unit {
    #[serde(rename = "ms")]
    Ms,
    #[serde(rename = "mV")]
    MV,
    #[serde(rename = "mm")]
    Mm,
    #[serde(rename = "bpm")]
    Bpm,
    #[serde(rename = "deg")]
    Deg,
}

impl Unit {
    pub fn as_str(self) -> &'static str {
        match self {
            Unit::Ms => "ms",
            Unit::MV => "mV",
            Unit::Mm => "mm",
            Unit::Bpm => "bpm",
            Unit::Deg => "deg",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s.to_ascii_lowercase().as_str() {
            "ms" => Unit::Ms,
            "mv" => Unit::MV,
            "mm" => Unit::Mm,
            "bpm" => Unit::Bpm,
            "deg" => Unit::Deg,
            _ => return None,
        })
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// 1 mm of deflection at standard calibration.
pub const MV_PER_MM: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub value: f64,
    pub unit: Unit,
}

impl Threshold {
    pub fn new(value: f64, unit: Unit) -> Self {
        Self { value, unit }
    }

    /// Value in the unit the feature table uses (mm converted to mV).
    pub fn canonical_value(&self) -> f64 {
        match self.unit {
            Unit::Mm => self.value * MV_PER_MM,
            _ => self.value,
        }
    }
}

/// Which leads a finding refers to.
///
/// `Set` requires the claim in every listed lead; `AnyOf` in at least one.
/// `Any` and `All` range over every lead where the feature is measurable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeadScope {
    Any,
    All,
    Set(BTreeSet<Lead>),
    AnyOf(BTreeSet<Lead>),
}

impl LeadScope {
    pub fn set<I: IntoIterator<Item = Lead>>(leads: I) -> Self {
        LeadScope::Set(leads.into_iter().collect())
    }

    /// Singleton `AnyOf` is the same claim as a singleton `Set`.
    pub fn normalized(self) -> Self {
        match self {
            LeadScope::AnyOf(s) if s.len() == 1 => LeadScope::Set(s),
            other => other,
        }
    }

    /// Scope whose verdict is the negation of this one when paired with a
    /// complementary comparator.
    pub fn dual(&self) -> Self {
        match self {
            LeadScope::Any => LeadScope::All,
            LeadScope::All => LeadScope::Any,
            LeadScope::Set(s) => LeadScope::AnyOf(s.clone()).normalized(),
            LeadScope::AnyOf(s) => LeadScope::Set(s.clone()),
        }
    }

    pub fn explicit_leads(&self) -> Option<&BTreeSet<Lead>> {
        match self {
            LeadScope::Set(s) | LeadScope::AnyOf(s) => Some(s),
            _ => None,
        }
    }
}

/// The verifiable content of a finding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Claim {
    #[serde(flatten)]
    pub feature: Feature,
    pub direction: Direction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<Threshold>,
    pub leads: LeadScope,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FindingError {
    #[error("{direction:?} is not a valid direction for {feature:?}")]
    Direction { feature: Feature, direction: Direction },
    #[error("comparator {0:?} needs a threshold")]
    MissingThreshold(Direction),
    #[error("{0:?} does not take a threshold")]
    UnexpectedThreshold(Direction),
    #[error("unit {unit} does not fit {feature:?}")]
    Unit { feature: Feature, unit: Unit },
    #[error("threshold value must be finite")]
    NonFinite,
    #[error("explicit lead set is empty")]
    EmptyLeads,
}

impl Claim {
    pub fn new(feature: Feature, direction: Direction, threshold: Option<Threshold>, leads: LeadScope) -> Self {
        Self { feature, direction, threshold, leads: leads.normalized() }
    }

    pub fn allowed_directions(feature: Feature) -> &'static [Direction] {
        use Direction::*;
        match feature {
            Feature::Interval(_) | Feature::Amplitude(_) | Feature::Rate(_) => &[Gt, Ge, Lt, Le, WithinNormal],
            Feature::Rhythm(_) => &[Present],
            Feature::Polarity(_) => &[Inverted, Upright],
            Feature::Presence(_) | Feature::EctopicBeat(_) => &[Present, Absent],
            Feature::Axis(_) => &[Gt, Ge, Lt, Le, WithinNormal, Left, Right],
            Feature::Voltage(_) => &[AboveNormal, BelowNormal, WithinNormal],
        }
    }

    pub fn validate(&self) -> Result<(), FindingError> {
        if !Self::allowed_directions(self.feature).contains(&self.direction) {
            return Err(FindingError::Direction { feature: self.feature, direction: self.direction });
        }
        match (self.direction.is_comparator(), &self.threshold) {
            (true, None) => return Err(FindingError::MissingThreshold(self.direction)),
            (false, Some(_)) => return Err(FindingError::UnexpectedThreshold(self.direction)),
            (true, Some(t)) => {
                if !t.value.is_finite() {
                    return Err(FindingError::NonFinite);
                }
                if !self.feature.allowed_units().contains(&t.unit) {
                    return Err(FindingError::Unit { feature: self.feature, unit: t.unit });
                }
            }
            (false, None) => {}
        }
        if self.leads.explicit_leads().is_some_and(|s| s.is_empty()) {
            return Err(FindingError::EmptyLeads);
        }
        Ok(())
    }
}

/// A claim with its identifier and the source text it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub finding_id: String,
    #[serde(flatten)]
    pub claim: Claim,
    #[serde(default)]
    pub quotes: Vec<String>,
}

/// Why a piece of text did not yield a verifiable finding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnverifiableReason {
    /// Artifact, noise or similar recording-quality remarks.
    NonSpecific,
    /// Pacemaker and paced-rhythm remarks.
    Pacemaker,
    /// A diagnosis name with no waveform claim.
    Diagnosis,
    /// Nothing in the text matched the lexicon.
    Unrecognized,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Parsed {
    Finding(Finding),
    Unverifiable(UnverifiableReason),
}

impl Parsed {
    pub fn finding(self) -> Option<Finding> {
        match self {
            Parsed::Finding(f) => Some(f),
            Parsed::Unverifiable(_) => None,
        }
    }
}
