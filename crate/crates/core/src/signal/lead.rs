use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// One of the twelve standard ECG leads.
///
/// The derived ordering is the canonical lead order used throughout the
/// crate: limb leads I, II, III, aVR, aVF, aVL followed by V1..V6.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Lead {
    I,
    II,
    III,
    AVR,
    AVF,
    AVL,
    V1,
    V2,
    V3,
    V4,
    V5,
    V6,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown lead name `{0}`")]
pub struct UnknownLead(pub String);

impl Lead {
    pub const ALL: [Lead; 12] = [
        Lead::I,
        Lead::II,
        Lead::III,
        Lead::AVR,
        Lead::AVF,
        Lead::AVL,
        Lead::V1,
        Lead::V2,
        Lead::V3,
        Lead::V4,
        Lead::V5,
        Lead::V6,
    ];

    pub const LIMB: [Lead; 6] = [Lead::I, Lead::II, Lead::III, Lead::AVR, Lead::AVF, Lead::AVL];
    pub const PRECORDIAL: [Lead; 6] = [Lead::V1, Lead::V2, Lead::V3, Lead::V4, Lead::V5, Lead::V6];

    pub fn name(self) -> &'static str {
        match self {
            Lead::I => "I",
            Lead::II => "II",
            Lead::III => "III",
            Lead::AVR => "aVR",
            Lead::AVF => "aVF",
            Lead::AVL => "aVL",
            Lead::V1 => "V1",
            Lead::V2 => "V2",
            Lead::V3 => "V3",
            Lead::V4 => "V4",
            Lead::V5 => "V5",
            Lead::V6 => "V6",
        }
    }

    pub fn is_limb(self) -> bool {
        Lead::LIMB.contains(&self)
    }

    /// Angle of the lead axis in the hexaxial reference system, degrees.
    /// Only defined for limb leads.
    pub fn frontal_angle_deg(self) -> Option<f64> {
        match self {
            Lead::I => Some(0.0),
            Lead::II => Some(60.0),
            Lead::III => Some(120.0),
            Lead::AVR => Some(-150.0),
            Lead::AVF => Some(90.0),
            Lead::AVL => Some(-30.0),
            _ => None,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Lead {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Lead {
    type Err = UnknownLead;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let trimmed = s.trim();
        Lead::ALL
            .iter()
            .copied()
            .find(|l| l.name().eq_ignore_ascii_case(trimmed))
            .ok_or_else(|| UnknownLead(trimmed.to_string()))
    }
}

impl Serialize for Lead {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Lead {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_order_matches_prompt_order() {
        let names: Vec<_> = Lead::ALL.iter().map(|l| l.name()).collect();
        assert_eq!(
            names,
            ["I", "II", "III", "aVR", "aVF", "aVL", "V1", "V2", "V3", "V4", "V5", "V6"]
        );
        let mut sorted = Lead::ALL.to_vec();
        sorted.reverse();
        sorted.sort();
        assert_eq!(sorted, Lead::ALL.to_vec());
    }

    #[test]
    fn parsing_is_case_insensitive() {
        assert_eq!("avf".parse::<Lead>().unwrap(), Lead::AVF);
        assert_eq!("AVL".parse::<Lead>().unwrap(), Lead::AVL);
        assert_eq!(" v3 ".parse::<Lead>().unwrap(), Lead::V3);
        assert_eq!("ii".parse::<Lead>().unwrap(), Lead::II);
    }

    #[test]
    fn rejects_unknown() {
        assert!("avX".parse::<Lead>().is_err());
        assert!("V7".parse::<Lead>().is_err());
        assert!("".parse::<Lead>().is_err());
    }
}
