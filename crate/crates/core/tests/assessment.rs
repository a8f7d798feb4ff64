use reasoneval_core::delineation::DelineatorConfig;
use reasoneval_core::findings::{AntonymMap, FlipMode, Lexicon};
use reasoneval_core::limits::NormalLimits;
use reasoneval_core::perception::{run_adversarial_assessment, run_supporting_assessment, NoteCase, Status};
use reasoneval_core::synthetic::{synthetic_case, SyntheticCase};

fn corpus(n: u64) -> Vec<SyntheticCase> {
    let cfg = DelineatorConfig::default();
    (0..n).map(|s| synthetic_case(1000 + s, &cfg).unwrap()).collect()
}

#[test]
fn constructed_notes_separate_supporting_from_adversarial() {
    let cases = corpus(40);
    let limits = NormalLimits::default();
    let lex = Lexicon::builtin(&limits);
    let nc: Vec<NoteCase> = cases
        .iter()
        .map(|c| NoteCase { trace_id: &c.trace_id, text: &c.note, record: &c.record, features: &c.features })
        .collect();
    let sup = run_supporting_assessment(&nc, &lex, &limits);
    for e in &sup.evaluations {
        for r in &e.results {
            assert_eq!(r.status, Status::Verified, "{}: {r:?}\n{}", e.trace_id, cases.iter().find(|c| c.trace_id == e.trace_id).unwrap().note);
        }
    }
    assert_eq!(sup.summary.acc_at_thresh_100.value, Some(1.0));
    assert_eq!(sup.summary.n_zero_verifiable, 0);
    let map = AntonymMap::builtin();
    let adv = run_adversarial_assessment(&nc, &lex, &map, 7, FlipMode::All, &limits);
    assert_eq!(adv.summary.acc_at_thresh_100.value, Some(0.0));
    assert_eq!(adv.summary.global_accuracy.value, Some(0.0));
    let one = run_adversarial_assessment(&nc, &lex, &map, 7, FlipMode::One, &limits);
    assert_eq!(one.summary.acc_at_thresh_100.value, Some(0.0));
    assert!(one.summary.acc_at_thresh_50.value.unwrap() > 0.5);
}
