use std::collections::BTreeMap;

use proptest::prelude::*;
use reasoneval_core::delineation::{analyze_record, export_delineation, import_delineation, DelineatorConfig};
use reasoneval_core::signal::*;

fn record_strategy() -> impl Strategy<Value = EcgRecord> {
    (1usize..4, 1usize..200, prop_oneof![Just(250.0), Just(500.0), Just(1000.0)]).prop_flat_map(|(n_leads, n, fs)| {
        proptest::collection::vec(proptest::collection::vec(-5.0f32..5.0, n), n_leads).prop_map(move |rows| {
            let leads: BTreeMap<Lead, Vec<f32>> = Lead::ALL.iter().copied().zip(rows).collect();
            EcgRecord::new("prop", fs, leads).unwrap()
        })
    })
}

/// Beats laid out left to right so every invariant holds by construction.
fn delineation_strategy() -> impl Strategy<Value = (usize, LeadDelineation)> {
    proptest::collection::vec((any::<bool>(), any::<bool>(), 2usize..30, 2usize..40, 2usize..60, 1usize..30), 0..12).prop_map(|beats| {
        let mut d = LeadDelineation::default();
        let mut t = 0usize;
        for (has_p, has_t, p_len, qrs_len, t_len, gap) in beats {
            if has_p {
                d.p_on_idxs.push(t);
                d.p_off_idxs.push(t + p_len);
                t += p_len + 1;
            }
            d.qrs_on_idxs.push(t);
            d.r_peak_idxs.push(t + qrs_len / 2);
            d.qrs_off_idxs.push(t + qrs_len);
            t += qrs_len + 1;
            if has_t {
                d.t_on_idxs.push(t);
                d.t_off_idxs.push(t + t_len);
                t += t_len + 1;
            }
            t += gap;
        }
        (t + 1, d)
    })
}

proptest! {
    #[test]
    fn record_round_trips(rec in record_strategy()) {
        let dir = tempfile::tempdir().unwrap();
        let bin = dir.path().join("r.bin");
        save_record(&rec, &bin, RecordFormat::Rawbin).unwrap();
        prop_assert_eq!(&load_record(&bin, RecordFormat::Rawbin).unwrap(), &rec);
        let csv = dir.path().join("r.csv");
        save_record(&rec, &csv, RecordFormat::Csv).unwrap();
        let back = load_record(&csv, RecordFormat::Csv).unwrap();
        prop_assert_eq!(back.n_samples(), rec.n_samples());
        for (l, x) in rec.leads() {
            let y = back.lead(*l).unwrap();
            for (a, b) in x.iter().zip(y) {
                prop_assert!((f64::from(*a) - f64::from(*b)).abs() <= 1e-6 + 1e-7 * f64::from(a.abs()));
            }
        }
    }

    #[test]
    fn generated_delineations_validate_and_round_trip((n, lead) in delineation_strategy()) {
        lead.validate(Lead::II, n).unwrap();
        let rec = EcgRecord::new("x", 500.0, [(Lead::II, vec![0.0f32; n])].into_iter().collect()).unwrap();
        let d = Delineation { record_id: "x".into(), fs_hz: 500.0, leads: [(Lead::II, lead)].into_iter().collect() };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.json");
        export_delineation(&d, &p).unwrap();
        prop_assert_eq!(import_delineation(&p, &rec).unwrap(), d);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn synthetic_truth_is_valid_and_rate_matches(seed in 0u64..10_000) {
        let spec = reasoneval_core::synthetic::random_spec(seed);
        let (rec, truth) = synthesize_ecg(&spec).unwrap();
        truth.validate(rec.n_samples()).unwrap();
        let (found, ft) = analyze_record(&rec, None, &DelineatorConfig::default()).unwrap();
        found.validate(rec.n_samples()).unwrap();
        for lf in ft.leads.values() {
            if let (Some(hr), Some(rr)) = (lf.avg_heart_rate_bpm, lf.avg_rr_interval_ms) {
                prop_assert!((hr * rr / 60_000.0 - 1.0).abs() <= 1e-3);
            }
        }
        let again = analyze_record(&rec, None, &DelineatorConfig::default()).unwrap();
        prop_assert_eq!(again.0, found);
    }
}
