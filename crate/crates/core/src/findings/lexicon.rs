//! Pattern-lexicon extraction of findings from free text.

use std::collections::BTreeSet;
use std::sync::LazyLock;

use regex::{Captures, Regex};
use serde::{Deserialize, Serialize};

use super::canonical::parse_canonical;
use super::model::*;
use crate::limits::NormalLimits;
use crate::signal::Lead;

const BUILTIN_LEXICON: &str = include_str!("../../assets/lexicon.json");

const OPS: &str = r"(?:>=|=>|≥|<=|=<|≤|>|<|greater\s+than\s+or\s+equal\s+to|less\s+than\s+or\s+equal\s+to|at\s+least|no\s+less\s+than|at\s+most|no\s+more\s+than|greater\s+than|more\s+than|higher\s+than|longer\s+than|exceeding|exceeds|over|above|less\s+than|lower\s+than|shorter\s+than|under|below)";
const NUM: &str = r"[-+−]?\d+(?:\.\d+)?";
const UNITS: &str = r"(?:°|/min\b|(?:ms|msec|milliseconds?|sec|seconds?|s|mv|millivolts?|mm|millimet(?:er|re)s?|bpm|beats\s+per\s+minute|beats/min|degrees?|deg)\b)";

fn cmp_fragment(required: bool) -> String {
    let link = r"(?:\s*(?:of|is|are|was|at|:|=|measuring|measures|measured\s+at)\b)?";
    let body = format!(
        r"{link}\s*(?:(?P<op>{OPS})\s*(?P<value>{NUM})\s*(?P<unit>{UNITS})?|(?P<value2>{NUM})\s*(?P<unit2>{UNITS}))"
    );
    if required {
        format!("(?:{body})")
    } else {
        format!("(?:{body})?")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DefaultThreshold {
    Literal { value: f64, unit: Unit },
    Limit { limit: String, unit: Unit },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DefaultScope {
    #[default]
    Any,
    All,
}

fn yes() -> bool {
    true
}

/// One lexicon row as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LexiconEntry {
    #[serde(default)]
    pub id: String,
    /// Regular expression, case-insensitive. `{CMP}` / `{CMPR}` expand to an
    /// optional / required comparator-value-unit tail.
    pub pattern: String,
    pub kind: String,
    /// Feature name for the kind; `$class` takes the rhythm class from the
    /// `class` capture group.
    pub feature: String,
    pub direction: Direction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default_threshold: Option<DefaultThreshold>,
    #[serde(default = "yes")]
    pub lead_group_expansion: bool,
    /// Explicit values are depths below baseline (ST depression of 1 mm is
    /// a deviation of -1 mm).
    #[serde(default)]
    pub mirror: bool,
    #[serde(default = "yes")]
    pub negatable: bool,
    #[serde(default)]
    pub default_scope: DefaultScope,
}

#[derive(Debug, thiserror::Error)]
pub enum LexiconError {
    #[error("lexicon JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("lexicon entry {index} ({id}): {message}")]
    Entry { index: usize, id: String, message: String },
}

#[derive(Debug, Clone)]
struct Compiled {
    entry: LexiconEntry,
    regex: Regex,
    feature: Option<Feature>,
    default: Option<Threshold>,
}

#[derive(Debug, Clone)]
pub struct Lexicon {
    entries: Vec<Compiled>,
}

/// A piece of text that was recognized but deliberately not verified.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcludedSpan {
    pub quote: String,
    pub reason: UnverifiableReason,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Extraction {
    pub findings: Vec<Finding>,
    pub excluded: Vec<ExcludedSpan>,
    /// Sentences that produced no finding.
    pub residual: Vec<String>,
}

static NONSPECIFIC: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\b(?:artifacts?|artefacts?|noise|noisy|baseline\s+wander|wandering\s+baseline|interference|lead\s+misplacement|poor\s+signal\s+quality)\b").unwrap()
});
static PACEMAKER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\b(?:pacemakers?|paced|pacing|pacer|pacing\s+spikes?)\b").unwrap());
static DIAGNOSIS: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?i)\b(?:sinus\s+(?:rhythm|bradycardia|tachycardia|arrhythmia)|atrial\s+(?:fibrillation|flutter)|afib|a-fib|junctional|tachycardia|bradycardia|infarct(?:ion)?|ischemi[ac]|ischaemi[ac]|hypertrophy|bundle\s+branch\s+block|[lr]bbb|av\s+block|heart\s+block|fascicular\s+block|pre-?excitation|wolff|wpw|pericarditis|hyperkalemia|hypokalemia|enlargement|STEMI|NSTEMI|abnormal\s+ecg|normal\s+ecg|fibrillation|flutter)\b",
    )
    .unwrap()
});
static NEGATION: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\b(?:no|without|not|absence\s+of|negative\s+for)\s+(?:(?:significant|obvious|definite|clear|acute|any)\s+)?$").unwrap()
});
static LEAD_TRIGGER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)(?:\b(?:in|on|across|involving|within|throughout)\s+(?:the\s+)?(?:leads?\s+)?|\bleads?\s+)").unwrap()
});
static ALL_LEADS: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^\s*(?:in\s+|across\s+)?(?:all|every|each)\s+leads?\b").unwrap());
static LEAD_TOKEN: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?i)^(?:(?P<rng>V(?P<a>[1-6])\s*(?:-|–|to|through)\s*V?(?P<b>[1-6]))|(?P<group>high\s+lateral|low\s+lateral|right\s+precordial|left\s+precordial|anteroseptal|anterolateral|inferolateral|inferior|lateral|anterior|septal|precordial|chest|limb)(?:\s+leads?)?|(?P<lead>aVR|aVL|aVF|V[1-6]|III|II|I))\b",
    )
    .unwrap()
});
static LEAD_SEP: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^(?:\s*,\s*(?:and\s+|or\s+)?|\s*/\s*|\s*&\s*|\s+and\s+|\s+or\s+)").unwrap());

fn lead_group(name: &str) -> &'static [Lead] {
    use Lead::*;
    match name.to_ascii_lowercase().split_whitespace().collect::<Vec<_>>().join(" ").as_str() {
        "inferior" => &[II, III, AVF],
        "lateral" => &[I, AVL, V5, V6],
        "high lateral" => &[I, AVL],
        "low lateral" | "left precordial" => &[V5, V6],
        "anterior" => &[V3, V4],
        "septal" | "right precordial" => &[V1, V2],
        "anteroseptal" => &[V1, V2, V3, V4],
        "anterolateral" => &[V3, V4, V5, V6],
        "inferolateral" => &[II, III, AVF, V5, V6],
        "precordial" | "chest" => &[V1, V2, V3, V4, V5, V6],
        "limb" => &[I, II, III, AVR, AVL, AVF],
        _ => &[],
    }
}

/// Parse a lead list at the start of `text`. Returns the scope and the
/// number of bytes consumed.
fn parse_lead_list(text: &str) -> Option<(LeadScope, usize)> {
    let mut pos = 0;
    let mut leads = BTreeSet::new();
    let mut saw_or = false;
    loop {
        let caps = LEAD_TOKEN.captures(&text[pos..])?;
        let m = caps.get(0)?;
        if caps.name("rng").is_some() {
            let a: u8 = caps["a"].parse().ok()?;
            let b: u8 = caps["b"].parse().ok()?;
            let (a, b) = (a.min(b), a.max(b));
            for i in a..=b {
                leads.insert(format!("V{i}").parse::<Lead>().ok()?);
            }
        } else if let Some(g) = caps.name("group") {
            leads.extend(lead_group(g.as_str()).iter().copied());
        } else {
            leads.insert(caps["lead"].parse::<Lead>().ok()?);
        }
        pos += m.end();
        match LEAD_SEP.find(&text[pos..]) {
            Some(sep) if LEAD_TOKEN.is_match(&text[pos + sep.end()..]) => {
                saw_or |= sep.as_str().to_ascii_lowercase().contains("or");
                pos += sep.end();
            }
            _ => break,
        }
    }
    let scope = if saw_or { LeadScope::AnyOf(leads).normalized() } else { LeadScope::Set(leads) };
    Some((scope, pos))
}

/// Find a lead specification in `window` (text following a match).
fn find_leads(window: &str) -> Option<(LeadScope, usize)> {
    if let Some(m) = ALL_LEADS.find(window) {
        return Some((LeadScope::All, m.end()));
    }
    // Unambiguous lead names directly after the match, e.g. "ST elevation V1-V3".
    let trimmed = window.trim_start();
    let offset = window.len() - trimmed.len();
    if offset <= 2 && (trimmed.to_ascii_lowercase().starts_with('v') || trimmed.to_ascii_lowercase().starts_with("av")) {
        if let Some((scope, used)) = parse_lead_list(trimmed) {
            return Some((scope, offset + used));
        }
    }
    for trig in LEAD_TRIGGER.find_iter(window) {
        if let Some((scope, used)) = parse_lead_list(&window[trig.end()..]) {
            return Some((scope, trig.end() + used));
        }
    }
    None
}

fn parse_op(op: &str) -> Option<Direction> {
    let norm = op.to_ascii_lowercase().split_whitespace().collect::<Vec<_>>().join(" ");
    Some(match norm.as_str() {
        ">" | "greater than" | "more than" | "higher than" | "longer than" | "exceeding" | "exceeds" | "over" | "above" => Direction::Gt,
        ">=" | "=>" | "≥" | "at least" | "no less than" | "greater than or equal to" => Direction::Ge,
        "<" | "less than" | "lower than" | "shorter than" | "under" | "below" => Direction::Lt,
        "<=" | "=<" | "≤" | "at most" | "no more than" | "less than or equal to" => Direction::Le,
        _ => return None,
    })
}

fn parse_unit(text: &str, value: f64) -> Option<(f64, Unit)> {
    let u = text.to_ascii_lowercase().split_whitespace().collect::<Vec<_>>().join(" ");
    Some(match u.as_str() {
        "ms" | "msec" | "millisecond" | "milliseconds" => (value, Unit::Ms),
        "s" | "sec" | "second" | "seconds" => (value * 1000.0, Unit::Ms),
        "mv" | "millivolt" | "millivolts" => (value, Unit::MV),
        "mm" | "millimeter" | "millimeters" | "millimetre" | "millimetres" => (value, Unit::Mm),
        "bpm" | "beats per minute" | "beats/min" | "/min" => (value, Unit::Bpm),
        "°" | "deg" | "degree" | "degrees" => (value, Unit::Deg),
        _ => return None,
    })
}

struct Candidate {
    start: usize,
    end: usize,
    entry: usize,
    claim: Claim,
}

impl Lexicon {
    pub fn builtin(limits: &NormalLimits) -> Self {
        Self::from_json(BUILTIN_LEXICON, limits).expect("builtin lexicon is valid")
    }

    pub fn from_json(text: &str, limits: &NormalLimits) -> Result<Self, LexiconError> {
        let rows: Vec<LexiconEntry> = serde_json::from_str(text)?;
        Self::from_entries(rows, limits)
    }

    pub fn from_entries(rows: Vec<LexiconEntry>, limits: &NormalLimits) -> Result<Self, LexiconError> {
        let mut entries = Vec::with_capacity(rows.len());
        for (index, entry) in rows.into_iter().enumerate() {
            let fail = |message: String| LexiconError::Entry { index, id: entry.id.clone(), message };
            let pattern = entry
                .pattern
                .replace("{CMPR}", &cmp_fragment(true))
                .replace("{CMP}", &cmp_fragment(false));
            let regex = Regex::new(&format!("(?i){pattern}")).map_err(|e| fail(e.to_string()))?;
            let feature = if entry.feature == "$class" {
                if regex.capture_names().flatten().all(|n| n != "class") {
                    return Err(fail("`$class` feature needs a `class` capture group".into()));
                }
                None
            } else {
                let v = serde_json::json!({"kind": entry.kind, "feature": entry.feature});
                Some(serde_json::from_value::<Feature>(v).map_err(|e| fail(e.to_string()))?)
            };
            let default = match &entry.default_threshold {
                None => None,
                Some(DefaultThreshold::Literal { value, unit }) => Some(Threshold::new(*value, *unit)),
                Some(DefaultThreshold::Limit { limit, unit }) => {
                    let v = limits.by_name(limit).ok_or_else(|| fail(format!("unknown limit `{limit}`")))?;
                    Some(Threshold::new(v, *unit))
                }
            };
            if let (Some(f), Some(t)) = (feature, default) {
                if !f.allowed_units().contains(&t.unit) {
                    return Err(fail(format!("default unit {} does not fit {}", t.unit, entry.kind)));
                }
            }
            entries.push(Compiled { entry, regex, feature, default });
        }
        Ok(Self { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn claim_from(&self, idx: usize, caps: &Captures, negated: bool) -> Option<Claim> {
        let c = &self.entries[idx];
        let feature = match c.feature {
            Some(f) => f,
            None => {
                let name = caps.name("class")?.as_str().split_whitespace().collect::<Vec<_>>().join(" ");
                Feature::Rhythm(RhythmFeature::Class(RhythmClass::from_title(&name)?))
            }
        };
        let explicit = match (caps.name("op"), caps.name("value"), caps.name("value2")) {
            (Some(op), Some(v), _) => Some((Some(parse_op(op.as_str())?), v.as_str(), caps.name("unit"))),
            (_, _, Some(v)) => Some((None, v.as_str(), caps.name("unit2"))),
            _ => None,
        };
        let (mut direction, mut threshold) = match explicit {
            Some((op, value, unit)) => {
                let value: f64 = value.replace('−', "-").parse().ok()?;
                let (value, unit) = match unit {
                    Some(u) => parse_unit(u.as_str(), value)?,
                    None => (value, feature.default_unit()?),
                };
                if !feature.allowed_units().contains(&unit) {
                    return None;
                }
                let direction = match op {
                    Some(op) => op,
                    None if c.entry.direction.is_comparator() && c.default.is_some() => c.entry.direction,
                    None => return None,
                };
                if c.entry.mirror && op.is_some() {
                    (direction.mirror()?, Some(Threshold::new(-value, unit)))
                } else if c.entry.mirror {
                    (direction, Some(Threshold::new(-value.abs(), unit)))
                } else {
                    (direction, Some(Threshold::new(value, unit)))
                }
            }
            None if c.entry.direction.is_comparator() => (c.entry.direction, Some(c.default?)),
            None => (c.entry.direction, None),
        };
        if negated {
            if !c.entry.negatable {
                return None;
            }
            direction = match direction {
                d if d.is_comparator() => d.complement()?,
                Direction::Present => Direction::Absent,
                Direction::Absent => Direction::Present,
                Direction::Inverted => Direction::Upright,
                Direction::Upright => Direction::Inverted,
                _ => return None,
            };
            if !direction.is_comparator() {
                threshold = None;
            }
        }
        let leads = match c.entry.default_scope {
            DefaultScope::Any => LeadScope::Any,
            DefaultScope::All => LeadScope::All,
        };
        let claim = Claim::new(feature, direction, threshold, leads);
        claim.validate().ok()?;
        Some(claim)
    }

    /// Extract findings from one sentence. Offsets are relative to `text`,
    /// and `base` is added so quotes index into the full trace.
    fn extract_sentence(&self, sentence: &str) -> Vec<(usize, usize, Claim)> {
        let mut cands: Vec<Candidate> = Vec::new();
        for (idx, c) in self.entries.iter().enumerate() {
            for caps in c.regex.captures_iter(sentence) {
                let m = caps.get(0).unwrap();
                if m.start() == m.end() {
                    continue;
                }
                let neg = NEGATION.find(&sentence[..m.start()]);
                let start = neg.map_or(m.start(), |n| n.start());
                if let Some(claim) = self.claim_from(idx, &caps, neg.is_some()) {
                    cands.push(Candidate { start, end: m.end(), entry: idx, claim });
                }
            }
        }
        cands.sort_by(|a, b| a.start.cmp(&b.start).then(b.end.cmp(&a.end)).then(a.entry.cmp(&b.entry)));
        let mut chosen: Vec<Candidate> = Vec::new();
        for c in cands {
            if chosen.last().is_none_or(|p| c.start >= p.end) {
                chosen.push(c);
            }
        }
        let starts: Vec<usize> = chosen.iter().map(|c| c.start).collect();
        chosen
            .into_iter()
            .enumerate()
            .map(|(i, mut c)| {
                let limit = starts.get(i + 1).copied().unwrap_or(sentence.len());
                let window = &sentence[c.end..limit];
                if let Some((scope, used)) = find_leads(window) {
                    if self.entries[c.entry].entry.lead_group_expansion {
                        c.claim.leads = scope;
                    }
                    c.end += used;
                }
                (c.start, c.end, c.claim)
            })
            .collect()
    }

    /// Split a trace into sentences and extract findings from each.
    pub fn extract(&self, trace: &str) -> Extraction {
        let mut out = Extraction::default();
        for (start, end) in sentence_spans(trace) {
            let sentence = &trace[start..end];
            if sentence.trim().is_empty() {
                continue;
            }
            if NONSPECIFIC.is_match(sentence) || PACEMAKER.is_match(sentence) {
                let reason = if PACEMAKER.is_match(sentence) {
                    UnverifiableReason::Pacemaker
                } else {
                    UnverifiableReason::NonSpecific
                };
                out.excluded.push(ExcludedSpan { quote: sentence.trim().to_string(), reason });
                continue;
            }
            let found = self.extract_sentence(sentence);
            if found.is_empty() {
                out.residual.push(sentence.trim().to_string());
            }
            for (a, b, claim) in found {
                let quote = trace[start + a..start + b].trim().to_string();
                let finding_id = format!("f{}", out.findings.len() + 1);
                out.findings.push(Finding { finding_id, claim, quotes: vec![quote] });
            }
        }
        out
    }

    /// Parse a single finding: the canonical template first, then the
    /// lexicon. Text without a verifiable claim yields the reason.
    pub fn parse_finding(&self, text: &str) -> Parsed {
        if let Some(claim) = parse_canonical(text) {
            return Parsed::Finding(Finding { finding_id: "f1".into(), claim, quotes: vec![text.trim().to_string()] });
        }
        let ex = self.extract(text);
        if let Some(f) = ex.findings.into_iter().next() {
            return Parsed::Finding(f);
        }
        if let Some(e) = ex.excluded.first() {
            return Parsed::Unverifiable(e.reason);
        }
        if DIAGNOSIS.is_match(text) {
            return Parsed::Unverifiable(UnverifiableReason::Diagnosis);
        }
        Parsed::Unverifiable(UnverifiableReason::Unrecognized)
    }
}

/// Byte spans of sentences: split after `.`, `!`, `?`, `;` or a newline,
/// but not inside decimals such as `0.1`.
pub fn sentence_spans(text: &str) -> Vec<(usize, usize)> {
    let bytes = text.as_bytes();
    let mut spans = Vec::new();
    let mut start = 0;
    for (i, ch) in text.char_indices() {
        let end = i + ch.len_utf8();
        let boundary = match ch {
            '\n' | ';' | '!' | '?' => true,
            '.' => bytes.get(end).is_none_or(|b| b.is_ascii_whitespace()),
            _ => false,
        };
        if boundary {
            spans.push((start, end));
            start = end;
        }
    }
    if start < text.len() {
        spans.push((start, text.len()));
    }
    spans
}
