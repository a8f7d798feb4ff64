//! Finding grammar, extraction from free text, adversarial flipping and censoring.

mod adversarial;
mod canonical;
mod censor;
mod lexicon;
mod model;

pub use adversarial::{mutate_adversarial, Adversarial, AntonymError, AntonymMap, AntonymPair, AntonymSpec, Flip, FlipMode, OneWay};
pub use canonical::{canonicalize, parse_canonical};
pub use censor::{censor_label, censor_regex};
pub use lexicon::{sentence_spans, DefaultScope, DefaultThreshold, ExcludedSpan, Extraction, Lexicon, LexiconEntry, LexiconError};
pub use model::*;
