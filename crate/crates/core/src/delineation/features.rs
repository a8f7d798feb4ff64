//! Feature extraction from a validated delineation.

use std::collections::BTreeMap;

use super::filters::{lowpass, mean, median};
use super::QtcFormula;
use crate::signal::{Delineation, EcgRecord, FeatureTable, Lead, LeadDelineation, LeadFeatures, Wave};

/// One QRS complex with the P and T waves attributed to it.
#[derive(Debug, Clone, Copy)]
struct Beat {
    r: usize,
    qrs: (usize, usize),
    p: Option<(usize, usize)>,
    t: Option<(usize, usize)>,
}

fn group_beats(d: &LeadDelineation) -> Vec<Beat> {
    let qrs: Vec<(usize, usize)> = d.pairs(Wave::Qrs).collect();
    let ps: Vec<(usize, usize)> = d.pairs(Wave::P).collect();
    let ts: Vec<(usize, usize)> = d.pairs(Wave::T).collect();
    qrs.iter()
        .enumerate()
        .filter_map(|(j, &(on, off))| {
            let r = *d.r_peak_idxs.iter().find(|&&r| on <= r && r <= off)?;
            let prev_off = if j > 0 { Some(qrs[j - 1].1) } else { None };
            let next_on = qrs.get(j + 1).map(|q| q.0);
            let p = ps
                .iter()
                .rev()
                .find(|&&(a, b)| b < on && prev_off.is_none_or(|po| a > po))
                .copied();
            let t = ts
                .iter()
                .find(|&&(a, b)| a > off && next_on.is_none_or(|no| b < no))
                .copied();
            Some(Beat { r, qrs: (on, off), p, t })
        })
        .collect()
}

fn ms(samples: f64, fs: f64) -> f64 {
    samples * 1000.0 / fs
}

fn signed_extreme(x: &[f64], base: f64) -> Option<f64> {
    x.iter()
        .map(|v| v - base)
        .max_by(|a, b| a.abs().total_cmp(&b.abs()))
}

/// Mean of per-beat values, skipping the first and last beat when at least
/// three beats carry the value.
fn beat_average(values: &[(usize, f64)], n_beats: usize) -> Option<f64> {
    let interior: Vec<f64> = if n_beats >= 3 {
        values.iter().filter(|(k, _)| *k > 0 && *k + 1 < n_beats).map(|(_, v)| *v).collect()
    } else {
        Vec::new()
    };
    if !interior.is_empty() {
        return mean(&interior);
    }
    mean(&values.iter().map(|(_, v)| *v).collect::<Vec<_>>())
}

fn beat_baseline(x: &[f64], beats: &[Beat], k: usize, fs: f64, lead_median: f64) -> f64 {
    let b = &beats[k];
    let min_len = ((0.008 * fs).round() as usize).max(2);
    let prev_t_off = if k > 0 { beats[k - 1].t.map(|t| t.1) } else { None };
    let tp_end = b.p.map(|p| p.0).or_else(|| b.qrs.0.checked_sub((0.02 * fs).round() as usize));
    if let (Some(start), Some(end)) = (prev_t_off, tp_end) {
        if end > start + min_len {
            if let Some(m) = mean(&x[start + 1..end]) {
                return m;
            }
        }
    }
    if let Some((_, p_off)) = b.p {
        if b.qrs.0 > p_off + min_len {
            if let Some(m) = mean(&x[p_off + 1..b.qrs.0]) {
                return m;
            }
        }
    }
    lead_median
}

fn lead_features(x: &[f64], fs: f64, d: &LeadDelineation, qtc: QtcFormula) -> (LeadFeatures, Option<f64>) {
    let mut f = LeadFeatures {
        r_peak_idxs: d.r_peak_idxs.clone(),
        p_on_idxs: d.p_on_idxs.clone(),
        p_off_idxs: d.p_off_idxs.clone(),
        qrs_on_idxs: d.qrs_on_idxs.clone(),
        qrs_off_idxs: d.qrs_off_idxs.clone(),
        t_on_idxs: d.t_on_idxs.clone(),
        t_off_idxs: d.t_off_idxs.clone(),
        ..Default::default()
    };
    f.rr_intervals_ms = d.r_peak_idxs.windows(2).map(|w| ms((w[1] - w[0]) as f64, fs)).collect();
    f.avg_rr_interval_ms = mean(&f.rr_intervals_ms);
    f.avg_heart_rate_bpm = f.avg_rr_interval_ms.filter(|rr| *rr > 0.0).map(|rr| 60_000.0 / rr);

    let beats = group_beats(d);
    let n = beats.len();
    if n == 0 {
        return (f, None);
    }
    let lead_median = median(x).unwrap_or(0.0);
    let j40 = (0.04 * fs).round() as usize;

    let mut pr = Vec::new();
    let mut qrs = Vec::new();
    let mut qt = Vec::new();
    let mut st_seg = Vec::new();
    let mut p_amp = Vec::new();
    let mut r_amp = Vec::new();
    let mut t_amp = Vec::new();
    let mut st_dev = Vec::new();
    let mut q_max = Vec::new();
    let mut q_min = Vec::new();
    let mut area = Vec::new();

    for (k, b) in beats.iter().enumerate() {
        let base = beat_baseline(x, &beats, k, fs, lead_median);
        let (on, off) = b.qrs;
        qrs.push((k, ms((off - on) as f64, fs)));
        r_amp.push((k, x[b.r] - base));
        let seg = &x[on..=off];
        q_max.push((k, seg.iter().fold(f64::NEG_INFINITY, |m, v| m.max(v - base))));
        q_min.push((k, seg.iter().fold(f64::INFINITY, |m, v| m.min(v - base))));
        area.push((k, seg.iter().map(|v| v - base).sum::<f64>() / fs));
        if let Some((p_on, p_off)) = b.p {
            pr.push((k, ms((on - p_on) as f64, fs)));
            if let Some(a) = signed_extreme(&x[p_on..=p_off], base) {
                p_amp.push((k, a));
            }
        }
        let st_window = match b.t {
            Some((t_on, t_off)) => {
                qt.push((k, ms((t_off - on) as f64, fs)));
                st_seg.push((k, ms((t_on - off) as f64, fs)));
                if let Some(a) = signed_extreme(&x[t_on..=t_off], base) {
                    t_amp.push((k, a));
                }
                if off + j40 < t_on { (off + j40, t_on) } else { (off, t_on) }
            }
            None => {
                let limit = beats.get(k + 1).map_or(x.len(), |nb| nb.qrs.0);
                (off + j40, (off + 2 * j40).min(limit))
            }
        };
        if st_window.0 < st_window.1 && st_window.1 <= x.len() {
            if let Some(m) = mean(&x[st_window.0..st_window.1]) {
                st_dev.push((k, m - base));
            }
        }
    }

    f.avg_pr_interval_ms = beat_average(&pr, n);
    f.avg_qrs_interval_ms = beat_average(&qrs, n);
    f.avg_qt_interval_ms = beat_average(&qt, n);
    f.avg_st_segment_ms = beat_average(&st_seg, n);
    f.avg_p_peak_amp_mv = beat_average(&p_amp, n);
    f.avg_qrs_peak_amp_mv = beat_average(&r_amp, n);
    f.avg_t_peak_amp_mv = beat_average(&t_amp, n);
    f.avg_st_deviation_mv = beat_average(&st_dev, n);
    f.avg_qrs_max_amp_mv = beat_average(&q_max, n);
    f.avg_qrs_min_amp_mv = beat_average(&q_min, n);
    f.p_wave_ratio = Some(beats.iter().filter(|b| b.p.is_some()).count() as f64 / n as f64);
    f.avg_qtc_interval_ms = match (f.avg_qt_interval_ms, f.avg_rr_interval_ms) {
        (Some(q), Some(rr)) if rr > 0.0 => Some(qtc.correct(q, rr)),
        _ => None,
    };
    (f, beat_average(&area, n))
}

/// Compute per-lead features and the frontal axis from a delineation.
pub fn compute_features(rec: &EcgRecord, delin: &Delineation, qtc: QtcFormula) -> FeatureTable {
    let fs = rec.sampling_rate_hz();
    let mut leads = BTreeMap::new();
    let mut areas = BTreeMap::new();
    for (&lead, d) in &delin.leads {
        let Some(raw) = rec.lead_f64(lead) else { continue };
        let x = lowpass(&raw, 40.0_f64.min(0.45 * fs), fs);
        let (features, area) = lead_features(&x, fs, d, qtc);
        leads.insert(lead, features);
        if let Some(a) = area {
            areas.insert(lead, a);
        }
    }
    let frontal_axis_deg = match (areas.get(&Lead::I), areas.get(&Lead::AVF)) {
        (Some(&i), Some(&f)) if i != 0.0 || f != 0.0 => Some(f.atan2(i).to_degrees()),
        _ => None,
    };
    FeatureTable { leads, frontal_axis_deg }
}
