use std::sync::LazyLock;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use regex::RegexBuilder;
use reasoneval_core::findings::*;
use reasoneval_core::limits::NormalLimits;
use reasoneval_core::synthetic::random_claim;

static LEXICON: LazyLock<Lexicon> = LazyLock::new(|| Lexicon::builtin(&NormalLimits::default()));
static MAP: LazyLock<AntonymMap> = LazyLock::new(AntonymMap::builtin);

const FRAGMENTS: &[&str] = &[
    "Sinus rhythm at 72 bpm.",
    "Wide QRS of 130 ms in V1 and V2",
    "ST elevation > 2 mm in inferior leads;",
    "no P waves",
    "T wave inversion in lateral leads.",
    "PR interval is 220 ms",
    "irregularly irregular rhythm",
    "left axis deviation",
    "Findings suggest atrial fibrillation.",
    "low QRS voltage",
    "baseline wander noted",
    "paced rhythm",
    "QTc 480 ms",
    "heart rate above 100",
    "\n",
    "  ",
    "frequent PVCs",
    "flat T waves in V5, V6",
];

fn trace_strategy() -> impl Strategy<Value = String> {
    proptest::collection::vec((0..FRAGMENTS.len(), "[a-z ,.]{0,12}"), 0..10)
        .prop_map(|parts| parts.into_iter().map(|(i, filler)| format!("{} {filler}", FRAGMENTS[i])).collect::<String>())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 512, ..ProptestConfig::default() })]

    #[test]
    fn canonical_round_trip(seed in any::<u64>()) {
        let c = random_claim(&mut ChaCha8Rng::seed_from_u64(seed));
        let text = canonicalize(&c);
        prop_assert_eq!(parse_canonical(&text), Some(c.clone()), "{}", text);
        let lex = &*LEXICON;
        match lex.parse_finding(&text) {
            Parsed::Finding(f) => prop_assert_eq!(f.claim, c),
            other => prop_assert!(false, "{text} parsed as {other:?}"),
        }
    }

    #[test]
    fn binary_flips_are_involutions_on_canonical_text(seed in any::<u64>(), flip_seed in any::<u64>()) {
        let c = random_claim(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assume!(!matches!(c.feature, Feature::Rhythm(RhythmFeature::Class(_) | RhythmFeature::IrregularlyIrregular)));
        let map = &*MAP;
        let text = canonicalize(&c);
        let (once, _) = mutate_adversarial(&text, map, flip_seed, FlipMode::All);
        let (twice, _) = mutate_adversarial(&once, map, flip_seed, FlipMode::All);
        prop_assert_eq!(twice, text);
    }

    #[test]
    fn claim_flip_inverts_twice_to_identity(seed in any::<u64>()) {
        let c = random_claim(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assume!(!matches!(c.feature, Feature::Rhythm(_)));
        let map = &*MAP;
        let (f, _) = mutate_adversarial(&c, map, 0, FlipMode::All);
        let (g, _) = mutate_adversarial(&f, map, 0, FlipMode::All);
        f.validate().unwrap();
        prop_assert_eq!(g, c);
    }

    #[test]
    fn extracted_quotes_are_verbatim(trace in trace_strategy()) {
        let lex = &*LEXICON;
        let ex = lex.extract(&trace);
        for f in &ex.findings {
            prop_assert!(!f.quotes.is_empty());
            for q in &f.quotes {
                prop_assert!(trace.contains(q.as_str()), "{q:?} not in {trace:?}");
            }
            f.claim.validate().unwrap();
        }
        for e in &ex.excluded {
            prop_assert!(trace.contains(e.quote.as_str()));
        }
    }

    #[test]
    fn censoring_leaves_no_mentions(
        words in proptest::collection::vec("[a-zA-Z]{1,6}", 0..20),
        label in "[a-z]{2,6}( [a-z]{2,6}){0,2}",
        synonyms in proptest::collection::vec("[a-zA-Z]{1,4}", 0..4),
        inserts in proptest::collection::vec((any::<prop::sample::Index>(), 0usize..5, any::<bool>()), 0..6),
    ) {
        let terms: Vec<String> = std::iter::once(label.clone()).chain(synonyms.iter().cloned()).collect();
        let mut parts = words.clone();
        for (at, which, upper) in inserts {
            let t = &terms[which % terms.len()];
            let t = if upper { t.to_uppercase() } else { t.clone() };
            parts.insert(at.index(parts.len() + 1), t.replace(' ', "  \n"));
        }
        let trace = parts.join(" ");
        let out = censor_label(&trace, &label, &synonyms);
        for t in &terms {
            let pat = format!(r"\b{}\b", t.split_whitespace().map(regex::escape).collect::<Vec<_>>().join(r"\s+"));
            let re = RegexBuilder::new(&pat).case_insensitive(true).build().unwrap();
            prop_assert!(!re.is_match(&out), "{t:?} survives in {out:?}");
        }
    }
}
