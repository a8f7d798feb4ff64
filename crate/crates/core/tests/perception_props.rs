use std::collections::BTreeMap;
use std::sync::LazyLock;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use reasoneval_core::findings::*;
use reasoneval_core::limits::{tolerance, NormalLimits};
use reasoneval_core::perception::*;
use reasoneval_core::signal::{EcgRecord, FeatureTable, Lead, LeadFeatures};

static MAP: LazyLock<AntonymMap> = LazyLock::new(AntonymMap::builtin);

fn eval_from_counts(id: usize, verified: usize, refuted: usize, unverifiable: usize) -> TraceEvaluation {
    let mut results = Vec::new();
    for (status, n) in [(Status::Verified, verified), (Status::Refuted, refuted), (Status::Unverifiable, unverifiable)] {
        for _ in 0..n {
            results.push(VerificationResult {
                finding_id: format!("f{}", results.len()),
                status,
                measured: None,
                rule_id: "x".into(),
                reason: None,
                quote: String::new(),
            });
        }
    }
    TraceEvaluation::from_results(format!("t{id}"), results)
}

fn evals() -> impl Strategy<Value = Vec<TraceEvaluation>> {
    prop::collection::vec((0usize..6, 0usize..6, 0usize..3), 0..25)
        .prop_map(|v| v.into_iter().enumerate().map(|(i, (a, b, c))| eval_from_counts(i, a, b, c)).collect())
}

// Rational comparison so the oracle shares no float path with the metric.
fn oracle_acc(evals: &[TraceEvaluation], p: u32) -> Option<f64> {
    let incl: Vec<_> = evals.iter().filter(|e| e.n_verifiable > 0).collect();
    if incl.is_empty() {
        return None;
    }
    let hit = incl.iter().filter(|e| e.n_verified as u64 * 100 >= u64::from(p) * e.n_verifiable as u64).count();
    Some(hit as f64 / incl.len() as f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn threshold_accuracy_matches_oracle_and_is_monotone(ev in evals()) {
        let mut last: Option<f64> = None;
        for p in 1..=100u32 {
            let m = metric_acc_at_threshold(&ev, f64::from(p)).unwrap();
            prop_assert_eq!(m.value, oracle_acc(&ev, p));
            prop_assert_eq!(m.n_included + m.n_excluded, ev.len());
            if let (Some(prev), Some(cur)) = (last, m.value) {
                prop_assert!(cur <= prev);
            }
            if let Some(v) = m.value {
                prop_assert!((0.0..=1.0).contains(&v));
            }
            last = m.value;
        }
    }

    #[test]
    fn global_accuracy_is_bounded_by_trace_fractions(ev in evals()) {
        let g = metric_global_accuracy(&ev);
        let mac = metric_global_accuracy_macro(&ev);
        let fr: Vec<f64> = ev.iter().filter_map(|e| e.verified_fraction).collect();
        match g.value {
            None => prop_assert!(fr.is_empty() && mac.value.is_none()),
            Some(v) => {
                let lo = fr.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = fr.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
                let m = mac.value.unwrap();
                prop_assert!(m >= lo - 1e-12 && m <= hi + 1e-12);
            }
        }
    }
}

fn numeric_features() -> Vec<Feature> {
    use AmplitudeFeature as A;
    use IntervalFeature as I;
    let mut v: Vec<Feature> =
        [I::PR, I::QRS, I::QT, I::QTc, I::RR, I::StSegment].into_iter().map(Feature::Interval).collect();
    v.extend([A::P, A::R, A::T, A::StDeviation].into_iter().map(Feature::Amplitude));
    v.push(Feature::Rate(RateFeature::HeartRate));
    v
}

fn set_value(lf: &mut LeadFeatures, feature: Feature, x: Option<f64>) {
    use AmplitudeFeature as A;
    use IntervalFeature as I;
    let slot = match feature {
        Feature::Interval(I::PR) => &mut lf.avg_pr_interval_ms,
        Feature::Interval(I::QRS) => &mut lf.avg_qrs_interval_ms,
        Feature::Interval(I::QT) => &mut lf.avg_qt_interval_ms,
        Feature::Interval(I::QTc) => &mut lf.avg_qtc_interval_ms,
        Feature::Interval(I::RR) => &mut lf.avg_rr_interval_ms,
        Feature::Interval(I::StSegment) => &mut lf.avg_st_segment_ms,
        Feature::Amplitude(A::P) => &mut lf.avg_p_peak_amp_mv,
        Feature::Amplitude(A::R) => &mut lf.avg_qrs_max_amp_mv,
        Feature::Amplitude(A::T) => &mut lf.avg_t_peak_amp_mv,
        Feature::Amplitude(A::StDeviation) => &mut lf.avg_st_deviation_mv,
        Feature::Rate(_) => &mut lf.avg_heart_rate_bpm,
        _ => unreachable!(),
    };
    *slot = x;
}

fn tol(feature: Feature) -> f64 {
    match feature {
        Feature::Interval(_) => tolerance::INTERVAL_MS,
        Feature::Amplitude(_) => tolerance::AMPLITUDE_MV,
        _ => tolerance::RATE_BPM,
    }
}

fn build(feature: Feature, values: &[Option<f64>]) -> (FeatureTable, EcgRecord) {
    let mut leads = BTreeMap::new();
    let mut sig = BTreeMap::new();
    for (l, x) in Lead::ALL.iter().zip(values) {
        let mut lf = LeadFeatures { r_peak_idxs: vec![1, 2, 3], ..Default::default() };
        set_value(&mut lf, feature, *x);
        leads.insert(*l, lf);
        sig.insert(*l, vec![0.0f32; 8]);
    }
    (FeatureTable { leads, frontal_axis_deg: None }, EcgRecord::new("p", 500.0, sig).unwrap())
}

fn scope_strategy() -> impl Strategy<Value = LeadScope> {
    let leads = prop::sample::subsequence(Lead::ALL.to_vec(), 1..=6);
    prop_oneof![
        Just(LeadScope::Any),
        Just(LeadScope::All),
        leads.clone().prop_map(LeadScope::set),
        leads.prop_map(|l| LeadScope::AnyOf(l.into_iter().collect()).normalized()),
    ]
}

fn direction_strategy() -> impl Strategy<Value = Direction> {
    prop::sample::select(vec![Direction::Gt, Direction::Ge, Direction::Lt, Direction::Le])
}

fn finding(claim: Claim) -> Finding {
    Finding { finding_id: "f".into(), claim, quotes: vec![] }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn flip_inverts_verdict_beyond_tolerance(
        fi in 0usize..11,
        dir in direction_strategy(),
        scope in scope_strategy(),
        t in -50.0f64..500.0,
        offsets in prop::collection::vec((any::<bool>(), 1.001f64..20.0), 12),
        seed in any::<u64>(),
    ) {
        let feature = numeric_features()[fi];
        let unit = feature.default_unit().unwrap();
        let th = Threshold::new(t, unit);
        let base = th.canonical_value();
        let values: Vec<Option<f64>> =
            offsets.iter().map(|(up, k)| Some(if *up { base + k * tol(feature) } else { base - k * tol(feature) })).collect();
        let (ft, rec) = build(feature, &values);
        let limits = NormalLimits::default();
        let f = finding(Claim::new(feature, dir, Some(th), scope));
        let (g, flips) = mutate_adversarial(&f, &MAP, seed, FlipMode::All);
        prop_assert!(!flips.is_empty());
        let a = verify_finding(&f, &ft, &rec, &limits).status;
        let b = verify_finding(&g, &ft, &rec, &limits).status;
        prop_assert!(a != Status::Unverifiable && b != Status::Unverifiable);
        prop_assert!((a == Status::Verified) ^ (b == Status::Verified), "{:?} / {:?}", f.claim, g.claim);
    }

    #[test]
    fn explicit_scopes_combine_singletons(
        fi in 0usize..10,
        dir in direction_strategy(),
        t in 0.0f64..300.0,
        values in prop::collection::vec(prop::option::weighted(0.8, -100.0f64..400.0), 12),
        leads in prop::sample::subsequence(Lead::ALL.to_vec(), 1..=6),
    ) {
        let feature = numeric_features()[fi];
        let th = Threshold::new(t, feature.default_unit().unwrap());
        let (ft, rec) = build(feature, &values);
        let limits = NormalLimits::default();
        let status = |scope: LeadScope| verify_finding(&finding(Claim::new(feature, dir, Some(th), scope)), &ft, &rec, &limits).status;
        let singles: Vec<Status> = leads.iter().map(|l| status(LeadScope::set([*l]))).collect();

        let and = if singles.contains(&Status::Refuted) {
            Status::Refuted
        } else if singles.contains(&Status::Unverifiable) {
            Status::Unverifiable
        } else {
            Status::Verified
        };
        let or = if singles.contains(&Status::Verified) {
            Status::Verified
        } else if singles.contains(&Status::Unverifiable) {
            Status::Unverifiable
        } else {
            Status::Refuted
        };
        prop_assert_eq!(status(LeadScope::set(leads.iter().copied())), and);
        prop_assert_eq!(status(LeadScope::AnyOf(leads.iter().copied().collect()).normalized()), or);

        let measured: Vec<Status> = Lead::ALL.iter().zip(&values).filter(|(_, v)| v.is_some()).map(|(l, _)| status(LeadScope::set([*l]))).collect();
        let any = if measured.is_empty() {
            Status::Unverifiable
        } else if measured.contains(&Status::Verified) {
            Status::Verified
        } else {
            Status::Refuted
        };
        let all = if measured.is_empty() {
            Status::Unverifiable
        } else if measured.contains(&Status::Refuted) {
            Status::Refuted
        } else {
            Status::Verified
        };
        prop_assert_eq!(status(LeadScope::Any), any);
        prop_assert_eq!(status(LeadScope::All), all);
    }

    #[test]
    fn statuses_ignore_evaluation_order(
        fi in 0usize..11,
        values in prop::collection::vec(prop::option::weighted(0.8, -100.0f64..400.0), 12),
        claims in prop::collection::vec((direction_strategy(), 0.0f64..300.0, scope_strategy()), 1..12),
        shuffle_seed in any::<u64>(),
    ) {
        let feature = numeric_features()[fi];
        let (ft, rec) = build(feature, &values);
        let limits = NormalLimits::default();
        let findings: Vec<Finding> = claims
            .into_iter()
            .enumerate()
            .map(|(i, (d, t, s))| Finding {
                finding_id: format!("f{i}"),
                claim: Claim::new(feature, d, Some(Threshold::new(t, feature.default_unit().unwrap())), s),
                quotes: vec![],
            })
            .collect();
        let mut shuffled = findings.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle_seed));
        let by_id = |e: TraceEvaluation| e.results.into_iter().map(|r| (r.finding_id.clone(), r)).collect::<BTreeMap<_, _>>();
        let a = verify_trace("t", &findings, &ft, &rec, &limits);
        let b = verify_trace("t", &shuffled, &ft, &rec, &limits);
        prop_assert_eq!(a.n_verified, b.n_verified);
        prop_assert_eq!(a.n_verifiable, b.n_verifiable);
        prop_assert_eq!(by_id(a), by_id(b));
    }
}

#[test]
fn decided_results_carry_measurements_and_unknowns_carry_reasons() {
    let feature = Feature::Interval(IntervalFeature::QRS);
    let mut values = vec![Some(130.0); 12];
    values[3] = None;
    let (ft, rec) = build(feature, &values);
    let th = Some(Threshold::new(120.0, Unit::Ms));
    for scope in [LeadScope::Any, LeadScope::All, LeadScope::set([Lead::AVR]), LeadScope::set([Lead::I])] {
        let r = verify_finding(&finding(Claim::new(feature, Direction::Gt, th, scope)), &ft, &rec, &NormalLimits::default());
        match r.status {
            Status::Unverifiable => assert!(r.reason.is_some()),
            _ => assert!(r.measured.is_some()),
        }
    }
}
