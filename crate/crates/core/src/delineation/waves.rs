//! Per-beat P, QRS and T boundary estimation.
//!
//! Boundaries are placed where the local slope falls below a fraction of
//! the wave's own maximum slope for a sustained run of samples. Waves that
//! cannot be found are left out rather than guessed.

use std::collections::BTreeMap;

use super::filters::{central_derivative, lowpass, mean};
use crate::signal::{Delineation, EcgRecord, Lead, LeadDelineation};

const QRS_SLOPE_FRACTION: f64 = 0.1;
const PT_SLOPE_FRACTION: f64 = 0.2;
const P_MIN_MV: f64 = 0.05;
const T_MIN_MV: f64 = 0.05;

struct Ms(f64);

impl Ms {
    fn at(&self, fs: f64) -> usize {
        (self.0 / 1000.0 * fs).round() as usize
    }
}

/// Walk from `start` in direction `step` until `quiet` consecutive samples
/// have slope below `thr`. Returns the last active sample before the quiet
/// run, bounded by `limit`.
fn walk_to_quiet(d: &[f64], start: usize, limit: usize, thr: f64, quiet: usize, forward: bool) -> usize {
    let mut last_active = start;
    let mut run = 0;
    let mut i = start;
    loop {
        if i == limit {
            return if run >= 1 { last_active } else { limit };
        }
        i = if forward { i + 1 } else { i - 1 };
        if d[i].abs() >= thr {
            last_active = i;
            run = 0;
        } else {
            run += 1;
            if run >= quiet {
                return last_active;
            }
        }
    }
}

fn argmax_by<F: Fn(usize) -> f64>(a: usize, b: usize, f: F) -> Option<usize> {
    (a..b).max_by(|&i, &j| f(i).total_cmp(&f(j)))
}

struct LeadSignals {
    fast: Vec<f64>,
    dqrs: Vec<f64>,
    slow: Vec<f64>,
    dslow: Vec<f64>,
}

impl LeadSignals {
    fn new(x: &[f64], fs: f64) -> Self {
        let qrs = lowpass(x, 40.0_f64.min(0.45 * fs), fs);
        let slow = lowpass(x, 25.0_f64.min(0.45 * fs), fs);
        let dqrs = central_derivative(&qrs, fs).into_iter().map(f64::abs).collect();
        let dslow = central_derivative(&slow, fs);
        Self { fast: qrs, dqrs, slow, dslow }
    }
}

fn baseline_before(x: &[f64], q_on: usize, fs: f64) -> f64 {
    let a = q_on.saturating_sub(Ms(14.0).at(fs));
    let b = q_on.saturating_sub(Ms(4.0).at(fs)).max(a + 1);
    mean(&x[a..b]).unwrap_or(0.0)
}

/// Largest deviation from `base` in `[lo, hi)` that stands out as a hump:
/// at least `min_mv` high, away from the window edges, and falling back by
/// a quarter of its height (or half of `min_mv`) on both sides.
fn isolated_peak(x: &[f64], base: f64, lo: usize, hi: usize, min_mv: f64) -> Option<usize> {
    let dev = |i: usize| x[i] - base;
    let pk = argmax_by(lo, hi, |i| dev(i).abs())?;
    let h = dev(pk);
    if h.abs() < min_mv || pk == lo || pk + 1 >= hi {
        return None;
    }
    let need = (0.25 * h.abs()).max(0.5 * min_mv);
    let drops = |r: std::ops::Range<usize>| r.into_iter().any(|i| h.abs() - dev(i) * h.signum() >= need);
    (drops(lo..pk) && drops(pk + 1..hi)).then_some(pk)
}

/// Onset and offset of a slow wave (P or T) whose extreme is at `peak`.
fn slow_wave_bounds(s: &LeadSignals, peak: usize, lo: usize, hi: usize, fs: f64) -> Option<(usize, usize)> {
    let reach = Ms(120.0).at(fs);
    let quiet = Ms(8.0).at(fs).max(2);
    let left = argmax_by(peak.saturating_sub(reach).max(lo), peak, |i| s.dslow[i].abs())?;
    let right = argmax_by(peak + 1, (peak + reach + 1).min(hi + 1), |i| s.dslow[i].abs())?;
    let thr = PT_SLOPE_FRACTION * s.dslow[left].abs().max(s.dslow[right].abs());
    if thr <= 0.0 {
        return None;
    }
    let on = walk_to_quiet(&s.dslow, left, lo, thr, quiet, false);
    let off = walk_to_quiet(&s.dslow, right, hi, thr, quiet, true);
    (on < peak && peak < off).then_some((on, off))
}

/// Delineate one lead given its R peaks, using only that lead's slope for
/// QRS boundaries.
pub fn delineate_lead(x: &[f64], fs: f64, r_peaks: &[usize]) -> LeadDelineation {
    delineate_lead_with(x, fs, r_peaks, None)
}

fn slope_magnitude(x: &[f64], fs: f64) -> Vec<f64> {
    central_derivative(&lowpass(x, 40.0_f64.min(0.45 * fs), fs), fs).into_iter().map(f64::abs).collect()
}

/// `qrs_slope` optionally replaces the lead's own slope magnitude when
/// locating QRS boundaries (e.g. a summed multi-lead envelope).
fn delineate_lead_with(x: &[f64], fs: f64, r_peaks: &[usize], qrs_slope: Option<&[f64]>) -> LeadDelineation {
    let n = x.len();
    let mut out = LeadDelineation::default();
    let mut peaks: Vec<usize> = r_peaks.iter().copied().filter(|&r| r > 0 && r + 1 < n).collect();
    peaks.sort_unstable();
    peaks.dedup();
    out.r_peak_idxs = peaks.clone();
    if peaks.is_empty() {
        return out;
    }
    let s = LeadSignals::new(x, fs);
    let dq: &[f64] = qrs_slope.unwrap_or(&s.dqrs);
    let quiet = Ms(10.0).at(fs).max(2);

    // QRS boundaries for every beat first; P and T windows depend on them.
    let mut qrs: Vec<Option<(usize, usize)>> = Vec::with_capacity(peaks.len());
    for (k, &r) in peaks.iter().enumerate() {
        let rr_prev = if k > 0 { r - peaks[k - 1] } else { peaks.get(1).map_or(n, |&p| p - r) };
        let rr_next = peaks.get(k + 1).map_or(rr_prev, |&p| p - r);
        let lo = r.saturating_sub(Ms(150.0).at(fs).min((0.45 * rr_prev as f64) as usize));
        let hi = (r + Ms(170.0).at(fs).min((0.45 * rr_next as f64) as usize)).min(n - 1);
        let near_lo = r.saturating_sub(Ms(100.0).at(fs)).max(lo);
        let near_hi = (r + Ms(100.0).at(fs)).min(hi);
        let max_slope = dq[near_lo..=near_hi].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if max_slope <= 1e-6 || lo >= r || hi <= r {
            qrs.push(None);
            continue;
        }
        let thr = QRS_SLOPE_FRACTION * max_slope;
        let on = walk_to_quiet(dq, r, lo, thr, quiet, false).min(r - 1);
        let off = walk_to_quiet(dq, r, hi, thr, quiet, true).max(r + 1);
        qrs.push(Some((on, off)));
    }

    let mut prev_t_off: Option<usize> = None;
    let mut prev_qrs_off: Option<usize> = None;
    for (k, &r) in peaks.iter().enumerate() {
        let Some((q_on, q_off)) = qrs[k] else {
            prev_t_off = None;
            prev_qrs_off = None;
            continue;
        };

        // P wave: between the previous T (or midway from the previous QRS) and this QRS.
        let p_hi = q_on.saturating_sub(Ms(16.0).at(fs));
        let p_lo = {
            let floor = q_on.saturating_sub(Ms(300.0).at(fs));
            let after_prev = match (prev_t_off, prev_qrs_off) {
                (Some(t), _) => t + Ms(10.0).at(fs),
                (None, Some(o)) => o + (q_on.saturating_sub(o)) / 2,
                (None, None) => 0,
            };
            floor.max(after_prev)
        };
        if p_hi > p_lo + Ms(40.0).at(fs) {
            let base = baseline_before(&s.fast, q_on, fs);
            if let Some(pk) = isolated_peak(&s.slow, base, p_lo, p_hi, P_MIN_MV) {
                if let Some((on, off)) = slow_wave_bounds(&s, pk, p_lo, p_hi, fs) {
                    if off - on >= Ms(30.0).at(fs) && off < q_on {
                        out.p_on_idxs.push(on);
                        out.p_off_idxs.push(off);
                    }
                }
            }
        }

        out.qrs_on_idxs.push(q_on);
        out.qrs_off_idxs.push(q_off);

        // T wave: after this QRS, ending well before the next one.
        let t_lo = q_off + Ms(40.0).at(fs);
        let t_hi = match peaks.get(k + 1) {
            Some(&nr) => {
                let rr = nr - r;
                let mut end = nr.saturating_sub((0.35 * rr as f64) as usize);
                if let Some((next_on, _)) = qrs[k + 1] {
                    end = end.min(next_on.saturating_sub(Ms(10.0).at(fs)));
                }
                end
            }
            None => {
                let rr = if k > 0 { r - peaks[k - 1] } else { Ms(1000.0).at(fs) };
                (r + (0.65 * rr as f64) as usize).min(n - 1)
            }
        };
        prev_qrs_off = Some(q_off);
        prev_t_off = None;
        if t_hi <= t_lo + Ms(60.0).at(fs) {
            continue;
        }
        let base = baseline_before(&s.fast, q_on, fs);
        let Some(pk) = isolated_peak(&s.slow, base, t_lo, t_hi, T_MIN_MV) else {
            continue;
        };
        let t_floor = q_off + 1;
        if let Some((on, off)) = slow_wave_bounds(&s, pk, t_floor, t_hi, fs) {
            if on > q_off && off - on >= Ms(40.0).at(fs) {
                out.t_on_idxs.push(on);
                out.t_off_idxs.push(off);
                prev_t_off = Some(off);
            }
        }
    }
    sanitize(&mut out);
    out
}

fn drop_overlaps(on: &mut Vec<usize>, off: &mut Vec<usize>) {
    let mut keep_on = Vec::with_capacity(on.len());
    let mut keep_off = Vec::with_capacity(off.len());
    for (&a, &b) in on.iter().zip(off.iter()) {
        if a >= b {
            continue;
        }
        if keep_off.last().is_some_and(|&prev| a <= prev) {
            continue;
        }
        keep_on.push(a);
        keep_off.push(b);
    }
    *on = keep_on;
    *off = keep_off;
}

fn sanitize(d: &mut LeadDelineation) {
    drop_overlaps(&mut d.p_on_idxs, &mut d.p_off_idxs);
    drop_overlaps(&mut d.qrs_on_idxs, &mut d.qrs_off_idxs);
    drop_overlaps(&mut d.t_on_idxs, &mut d.t_off_idxs);
}

/// Delineate every lead in the record with the supplied per-lead R peaks.
///
/// QRS boundaries come from the slope envelope summed over all leads, so a
/// lead whose terminal deflection is tiny still gets the full QRS extent.
pub fn delineate_waves(rec: &EcgRecord, r_peaks: &BTreeMap<Lead, Vec<usize>>) -> Delineation {
    let fs = rec.sampling_rate_hz();
    let signals: BTreeMap<Lead, Vec<f64>> = rec.lead_names().filter_map(|l| Some((l, rec.lead_f64(l)?))).collect();
    let mut envelope = vec![0.0; rec.n_samples()];
    for x in signals.values() {
        for (e, d) in envelope.iter_mut().zip(slope_magnitude(x, fs)) {
            *e += d;
        }
    }
    let leads = signals
        .iter()
        .map(|(&lead, x)| {
            let peaks = r_peaks.get(&lead).map(Vec::as_slice).unwrap_or(&[]);
            (lead, delineate_lead_with(x, fs, peaks, Some(&envelope)))
        })
        .collect();
    Delineation { record_id: rec.record_id().to_string(), fs_hz: fs, leads }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{synthesize_ecg, SynthSpec, TPolarity};

    fn mean_abs_err(a: &[usize], b: &[usize]) -> f64 {
        assert_eq!(a.len(), b.len(), "{a:?} vs {b:?}");
        a.iter().zip(b).map(|(x, y)| x.abs_diff(*y) as f64).sum::<f64>() / a.len() as f64
    }

    fn check(spec: SynthSpec, lead: Lead) -> (LeadDelineation, LeadDelineation) {
        let (rec, gt) = synthesize_ecg(&spec).unwrap();
        let g = gt.lead(lead).unwrap().clone();
        let found = delineate_lead(&rec.lead_f64(lead).unwrap(), 500.0, &g.r_peak_idxs);
        found.validate(lead, rec.n_samples()).unwrap();
        (found, g)
    }

    #[test]
    fn qrs_and_p_boundaries_match_ground_truth() {
        let (found, gt) = check(SynthSpec::default(), Lead::II);
        assert!(mean_abs_err(&found.qrs_on_idxs, &gt.qrs_on_idxs) <= 5.0);
        assert!(mean_abs_err(&found.qrs_off_idxs, &gt.qrs_off_idxs) <= 5.0);
        assert!(mean_abs_err(&found.p_on_idxs, &gt.p_on_idxs) <= 7.5);
        assert!(mean_abs_err(&found.t_off_idxs, &gt.t_off_idxs) <= 15.0);
    }

    #[test]
    fn missing_p_is_not_fabricated() {
        let spec = SynthSpec { p_present: false, ..Default::default() };
        let (found, _) = check(spec, Lead::II);
        assert!(found.p_on_idxs.is_empty());
        assert_eq!(found.qrs_on_idxs.len(), 10);
    }

    #[test]
    fn flat_t_is_not_fabricated() {
        let spec = SynthSpec { t_polarity: TPolarity::Flat, ..Default::default() };
        let (found, _) = check(spec, Lead::V5);
        assert!(found.t_on_idxs.is_empty());
    }

    #[test]
    fn wide_fast_complexes_stay_valid() {
        let spec = SynthSpec { hr_bpm: 150.0, qrs_width_ms: 150.0, qt_ms: 260.0, pr_ms: 120.0, noise_mv: 0.01, seed: 9, ..Default::default() };
        let (rec, gt) = synthesize_ecg(&spec).unwrap();
        for lead in Lead::ALL {
            let g = gt.lead(lead).unwrap();
            let found = delineate_lead(&rec.lead_f64(lead).unwrap(), 500.0, &g.r_peak_idxs);
            found.validate(lead, rec.n_samples()).unwrap();
        }
    }
}
