//! Antonym flipping for the adversarial negative control.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};

use super::model::*;

const BUILTIN_ANTONYMS: &str = include_str!("../../assets/antonyms.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AntonymPair {
    /// Word forms on one side, index-aligned with `b`.
    pub a: Vec<String>,
    pub b: Vec<String>,
    /// Only flip when the text right after the word matches this pattern.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub followed_by: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OneWay {
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AntonymSpec {
    pub pairs: Vec<AntonymPair>,
    #[serde(default)]
    pub one_way: Vec<OneWay>,
    pub rhythm_classes: Vec<String>,
    #[serde(default)]
    pub rhythm_aliases: BTreeMap<String, String>,
}

#[derive(Debug, thiserror::Error)]
pub enum AntonymError {
    #[error("antonym map JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid antonym map: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Target {
    /// Pair index, side (false = a), form index.
    Pair(usize, bool, usize),
    OneWay(usize),
    Rhythm(usize),
}

#[derive(Debug, Clone)]
pub struct AntonymMap {
    spec: AntonymSpec,
    phrases: Vec<(String, Target)>,
    matcher: Regex,
    contexts: Vec<Option<Regex>>,
}

/// Whether to flip every descriptor or a single seeded choice.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlipMode {
    #[default]
    All,
    One,
}

impl std::str::FromStr for FlipMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "all" => Ok(FlipMode::All),
            "one" => Ok(FlipMode::One),
            other => Err(format!("unknown flip mode `{other}` (expected all or one)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flip {
    pub from: String,
    pub to: String,
}

fn norm(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

impl AntonymMap {
    pub fn builtin() -> Self {
        Self::from_json(BUILTIN_ANTONYMS).expect("builtin antonym map is valid")
    }

    pub fn from_json(text: &str) -> Result<Self, AntonymError> {
        Self::from_spec(serde_json::from_str(text)?)
    }

    pub fn from_spec(spec: AntonymSpec) -> Result<Self, AntonymError> {
        let bad = |m: String| Err(AntonymError::Invalid(m));
        let mut phrases: Vec<(String, Target)> = Vec::new();
        let mut seen = BTreeSet::new();
        let mut add = |p: &str, t: Target, phrases: &mut Vec<(String, Target)>| -> Result<(), AntonymError> {
            let p = norm(p);
            if p.is_empty() || !seen.insert(p.clone()) {
                return Err(AntonymError::Invalid(format!("phrase `{p}` is empty or listed twice")));
            }
            phrases.push((p, t));
            Ok(())
        };
        let mut contexts = Vec::new();
        for (i, pair) in spec.pairs.iter().enumerate() {
            if pair.a.len() != pair.b.len() || pair.a.is_empty() {
                return bad(format!("pair {i} sides differ in length or are empty"));
            }
            for (j, w) in pair.a.iter().enumerate() {
                add(w, Target::Pair(i, false, j), &mut phrases)?;
            }
            for (j, w) in pair.b.iter().enumerate() {
                add(w, Target::Pair(i, true, j), &mut phrases)?;
            }
            let ctx = match &pair.followed_by {
                Some(p) => Some(Regex::new(&format!("(?i){p}")).map_err(|e| AntonymError::Invalid(e.to_string()))?),
                None => None,
            };
            contexts.push(ctx);
        }
        for (i, ow) in spec.one_way.iter().enumerate() {
            add(&ow.from, Target::OneWay(i), &mut phrases)?;
        }
        if spec.rhythm_classes.len() < 2 {
            return bad("at least two rhythm classes are needed".into());
        }
        for (i, c) in spec.rhythm_classes.iter().enumerate() {
            add(c, Target::Rhythm(i), &mut phrases)?;
        }
        for (alias, class) in &spec.rhythm_aliases {
            let Some(i) = spec.rhythm_classes.iter().position(|c| norm(c) == norm(class)) else {
                return bad(format!("alias `{alias}` points at unknown class `{class}`"));
            };
            add(alias, Target::Rhythm(i), &mut phrases)?;
        }
        let mut sorted: Vec<&String> = phrases.iter().map(|(p, _)| p).collect();
        sorted.sort_by_key(|p| std::cmp::Reverse(p.len()));
        let alternation = sorted
            .iter()
            .map(|p| p.split(' ').map(regex::escape).collect::<Vec<_>>().join(r"\s+"))
            .collect::<Vec<_>>()
            .join("|");
        let matcher = Regex::new(&format!(r"(?i)\b(?:{alternation})\b")).map_err(|e| AntonymError::Invalid(e.to_string()))?;
        Ok(Self { spec, phrases, matcher, contexts })
    }

    pub fn spec(&self) -> &AntonymSpec {
        &self.spec
    }

    fn target(&self, phrase: &str) -> Option<Target> {
        let p = norm(phrase);
        self.phrases.iter().find(|(q, _)| *q == p).map(|(_, t)| *t)
    }

    /// Flippable descriptor occurrences in `text` as byte ranges.
    fn occurrences(&self, text: &str) -> Vec<(usize, usize, Target)> {
        self.matcher
            .find_iter(text)
            .filter_map(|m| {
                let t = self.target(m.as_str())?;
                if let Target::Pair(i, _, _) = t {
                    if let Some(ctx) = &self.contexts[i] {
                        if !ctx.is_match(&text[m.end()..]) {
                            return None;
                        }
                    }
                }
                Some((m.start(), m.end(), t))
            })
            .collect()
    }

    fn replacement(&self, t: Target, rng: &mut ChaCha8Rng) -> String {
        match t {
            Target::Pair(i, side, j) => {
                let p = &self.spec.pairs[i];
                if side { p.a[j].clone() } else { p.b[j].clone() }
            }
            Target::OneWay(i) => self.spec.one_way[i].to.clone(),
            Target::Rhythm(i) => {
                let n = self.spec.rhythm_classes.len();
                let k = rng.gen_range(0..n - 1);
                let k = if k >= i { k + 1 } else { k };
                self.spec.rhythm_classes[k].clone()
            }
        }
    }

    /// A different rhythm class, chosen uniformly with `rng`.
    pub fn other_rhythm_class(current: RhythmClass, rng: &mut ChaCha8Rng) -> RhythmClass {
        let others: Vec<RhythmClass> = RhythmClass::ALL.into_iter().filter(|c| *c != current).collect();
        *others.choose(rng).expect("at least one other class")
    }
}

fn match_case(original: &str, replacement: &str) -> String {
    let letters: Vec<char> = original.chars().filter(|c| c.is_alphabetic()).collect();
    if letters.len() > 1 && letters.iter().all(|c| c.is_uppercase()) {
        return replacement.to_uppercase();
    }
    let words: Vec<&str> = original.split_whitespace().collect();
    let title = |w: &str| {
        let mut cs = w.chars();
        cs.next().map(|f| f.to_uppercase().chain(cs).collect::<String>()).unwrap_or_default()
    };
    let starts_upper = |w: &str| w.chars().next().is_some_and(char::is_uppercase);
    if words.len() > 1 && words.iter().all(|w| starts_upper(w)) {
        return replacement.split(' ').map(title).collect::<Vec<_>>().join(" ");
    }
    if original.chars().next().is_some_and(char::is_uppercase) {
        return title(replacement);
    }
    replacement.to_string()
}

/// Things that can be adversarially flipped.
pub trait Adversarial: Sized {
    fn mutate(&self, map: &AntonymMap, seed: u64, mode: FlipMode) -> (Self, Vec<Flip>);
}

/// Flip descriptors in `input`; returns the mutated value and the flips applied.
pub fn mutate_adversarial<T: Adversarial>(input: &T, map: &AntonymMap, seed: u64, mode: FlipMode) -> (T, Vec<Flip>) {
    input.mutate(map, seed, mode)
}

impl Adversarial for String {
    fn mutate(&self, map: &AntonymMap, seed: u64, mode: FlipMode) -> (Self, Vec<Flip>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut occ = map.occurrences(self);
        if occ.is_empty() {
            return (self.clone(), Vec::new());
        }
        if mode == FlipMode::One {
            let pick = rng.gen_range(0..occ.len());
            occ = vec![occ[pick]];
        }
        let mut out = String::with_capacity(self.len());
        let mut flips = Vec::with_capacity(occ.len());
        let mut last = 0;
        for (a, b, t) in occ {
            let original = &self[a..b];
            let to = match_case(original, &map.replacement(t, &mut rng));
            out.push_str(&self[last..a]);
            out.push_str(&to);
            flips.push(Flip { from: original.to_string(), to });
            last = b;
        }
        out.push_str(&self[last..]);
        (out, flips)
    }
}

impl Adversarial for Claim {
    /// Comparators flip to their complement and the lead quantifier to its
    /// dual, so the flipped claim holds exactly when the original fails.
    fn mutate(&self, _map: &AntonymMap, seed: u64, _mode: FlipMode) -> (Self, Vec<Flip>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = self.clone();
        let flip = |from: &dyn std::fmt::Debug, to: &dyn std::fmt::Debug| Flip { from: format!("{from:?}"), to: format!("{to:?}") };
        let mut flips = Vec::new();
        if let Some(c) = self.direction.complement() {
            out.direction = c;
            out.leads = self.leads.dual();
            flips.push(flip(&self.direction, &c));
            if out.leads != self.leads {
                flips.push(flip(&self.leads, &out.leads));
            }
            return (out, flips);
        }
        let swapped = match self.direction {
            Direction::Inverted => Some(Direction::Upright),
            Direction::Upright => Some(Direction::Inverted),
            Direction::Absent => Some(Direction::Present),
            Direction::Present if !matches!(self.feature, Feature::Rhythm(_)) => Some(Direction::Absent),
            Direction::Left => Some(Direction::Right),
            Direction::Right => Some(Direction::Left),
            Direction::AboveNormal => Some(Direction::BelowNormal),
            Direction::BelowNormal => Some(Direction::AboveNormal),
            _ => None,
        };
        if let Some(d) = swapped {
            out.direction = d;
            flips.push(flip(&self.direction, &d));
            return (out, flips);
        }
        if let Feature::Rhythm(r) = self.feature {
            let to = match r {
                RhythmFeature::Regular => RhythmFeature::Irregular,
                RhythmFeature::Irregular => RhythmFeature::Regular,
                RhythmFeature::IrregularlyIrregular => RhythmFeature::Regular,
                RhythmFeature::Class(c) => RhythmFeature::Class(AntonymMap::other_rhythm_class(c, &mut rng)),
            };
            out.feature = Feature::Rhythm(to);
            flips.push(flip(&r, &to));
        }
        (out, flips)
    }
}

impl Adversarial for Finding {
    fn mutate(&self, map: &AntonymMap, seed: u64, mode: FlipMode) -> (Self, Vec<Flip>) {
        let (claim, flips) = self.claim.mutate(map, seed, mode);
        (Finding { claim, ..self.clone() }, flips)
    }
}

impl Adversarial for Vec<Finding> {
    /// `All` flips every finding; `One` flips a single seeded choice.
    fn mutate(&self, map: &AntonymMap, seed: u64, mode: FlipMode) -> (Self, Vec<Flip>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let chosen: Option<usize> = match mode {
            FlipMode::All => None,
            FlipMode::One if self.is_empty() => return (Vec::new(), Vec::new()),
            FlipMode::One => Some(rng.gen_range(0..self.len())),
        };
        let mut flips = Vec::new();
        let out = self
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let sub_seed: u64 = rng.gen();
                if chosen.is_some_and(|c| c != i) {
                    return f.clone();
                }
                let (g, fl) = f.mutate(map, sub_seed, mode);
                flips.extend(fl);
                g
            })
            .collect();
        (out, flips)
    }
}
