//! Synthetic 12-lead ECG with exact ground-truth wave boundaries.
//!
//! Each wave is a raised-cosine bump with compact support, so onset and
//! offset are known exactly. The QRS is a Q-R-S triple of bumps; limb lead
//! amplitudes follow the projection of the frontal axis on each lead.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Delineation, EcgRecord, Lead, LeadDelineation, SignalError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RrJitter {
    #[default]
    None,
    /// Short-long alternation of RR intervals by `fraction` of the base RR.
    Alternating { fraction: f64 },
    /// Independent gaussian RR perturbation with coefficient of variation `cv`.
    Random { cv: f64 },
    /// Every `every`-th beat arrives early at `ratio` of the base RR,
    /// followed by a compensatory pause.
    Premature { every: usize, ratio: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TPolarity {
    #[default]
    Upright,
    Inverted,
    Flat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub hr_bpm: f64,
    pub rr_jitter: RrJitter,
    pub qrs_width_ms: f64,
    pub pr_ms: f64,
    pub qt_ms: f64,
    pub st_offset_mv: BTreeMap<Lead, f64>,
    pub p_present: bool,
    pub t_polarity: TPolarity,
    pub duration_s: f64,
    pub fs_hz: f64,
    pub seed: u64,
    pub axis_deg: f64,
    /// Multiplier on every QRS amplitude.
    pub qrs_scale: f64,
    pub noise_mv: f64,
    pub leads: Vec<Lead>,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            hr_bpm: 60.0,
            rr_jitter: RrJitter::None,
            qrs_width_ms: 90.0,
            pr_ms: 160.0,
            qt_ms: 400.0,
            st_offset_mv: BTreeMap::new(),
            p_present: true,
            t_polarity: TPolarity::Upright,
            duration_s: 10.0,
            fs_hz: 500.0,
            seed: 0,
            axis_deg: 60.0,
            qrs_scale: 1.0,
            noise_mv: 0.0,
            leads: Lead::ALL.to_vec(),
        }
    }
}

/// Minimum TP gap between a T offset and the next P onset.
const MIN_TP_GAP_MS: f64 = 10.0;
const P_AXIS_DEG: f64 = 60.0;
const T_AXIS_DEG: f64 = 45.0;
/// Waves smaller than this in a lead are not listed in its ground truth.
const MIN_GT_AMPLITUDE_MV: f64 = 0.03;

#[derive(Debug, Clone, Copy)]
struct LeadShape {
    q: f64,
    r: f64,
    s: f64,
    p: f64,
    t: f64,
}

fn lead_shape(lead: Lead, spec: &SynthSpec) -> LeadShape {
    let t_sign = match spec.t_polarity {
        TPolarity::Upright => 1.0,
        TPolarity::Inverted => -1.0,
        TPolarity::Flat => 0.0,
    };
    let (q, r, s, p, t) = match lead.frontal_angle_deg() {
        Some(theta) => {
            let c = (spec.axis_deg - theta).to_radians().cos();
            let pc = (P_AXIS_DEG - theta).to_radians().cos();
            let tc = (T_AXIS_DEG - theta).to_radians().cos();
            (0.15, 1.2 * c.max(0.0) + 0.15, 1.2 * (-c).max(0.0) + 0.15, 0.15 * pc, 0.35 * tc)
        }
        None => {
            let (r, s, t) = match lead {
                Lead::V1 => (0.2, 1.0, 0.1),
                Lead::V2 => (0.4, 1.2, 0.3),
                Lead::V3 => (0.8, 0.8, 0.45),
                Lead::V4 => (1.3, 0.5, 0.45),
                Lead::V5 => (1.5, 0.3, 0.35),
                _ => (1.2, 0.2, 0.3),
            };
            (0.12, r, s, 0.1, t)
        }
    };
    LeadShape {
        q: q * spec.qrs_scale,
        r: r * spec.qrs_scale,
        s: s * spec.qrs_scale,
        p: if spec.p_present { p } else { 0.0 },
        t: t * t_sign,
    }
}

/// Timing of one beat, seconds.
#[derive(Debug, Clone, Copy)]
struct Beat {
    qrs_on: f64,
}

struct Geometry {
    qrs_w: f64,
    pr: f64,
    p_w: f64,
    qt: f64,
    t_w: f64,
}

impl Geometry {
    fn from_spec(spec: &SynthSpec) -> Self {
        let qrs_w = spec.qrs_width_ms / 1000.0;
        let pr = spec.pr_ms / 1000.0;
        let qt = spec.qt_ms / 1000.0;
        Self {
            qrs_w,
            pr,
            p_w: (0.6 * pr).min(0.100),
            qt,
            t_w: (0.6 * (qt - qrs_w)).min(0.180),
        }
    }

    fn r_time(&self, b: &Beat) -> f64 {
        b.qrs_on + 0.4 * self.qrs_w
    }
}

fn rr_sequence(spec: &SynthSpec, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let base = 60.0 / spec.hr_bpm;
    let n = (spec.duration_s / base).ceil() as usize + 2;
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    (0..n)
        .map(|k| match spec.rr_jitter {
            RrJitter::None => base,
            RrJitter::Alternating { fraction } => {
                if k % 2 == 0 {
                    base * (1.0 - fraction)
                } else {
                    base * (1.0 + fraction)
                }
            }
            RrJitter::Random { cv } => {
                let z: f64 = normal.sample(rng);
                base * (1.0 + cv * z.clamp(-2.5, 2.5))
            }
            RrJitter::Premature { every, ratio } => {
                let every = every.max(2);
                match k % every {
                    x if x == every - 2 => base * ratio,
                    x if x == every - 1 => base * (2.0 - ratio),
                    _ => base,
                }
            }
        })
        .collect()
}

fn validate(spec: &SynthSpec) -> Result<(), SignalError> {
    let bad = |m: String| Err(SignalError::Synthesis(m));
    if !(20.0..=300.0).contains(&spec.hr_bpm) {
        return bad(format!("heart rate {} bpm outside 20-300", spec.hr_bpm));
    }
    if !(spec.fs_hz > 0.0 && spec.duration_s > 0.0) {
        return bad("sampling rate and duration must be positive".into());
    }
    if spec.qrs_width_ms <= 20.0 || spec.pr_ms <= 0.0 || spec.qt_ms <= 0.0 {
        return bad("wave widths must be positive".into());
    }
    if spec.qt_ms - spec.qrs_width_ms < 60.0 {
        return bad(format!(
            "QT {} ms leaves no room for ST and T after a {} ms QRS",
            spec.qt_ms, spec.qrs_width_ms
        ));
    }
    if spec.leads.is_empty() {
        return bad("no leads requested".into());
    }
    Ok(())
}

/// Generate a record and its exact delineation.
pub fn synthesize_ecg(spec: &SynthSpec) -> Result<(EcgRecord, Delineation), SignalError> {
    validate(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let geo = Geometry::from_spec(spec);
    let rr = rr_sequence(spec, &mut rng);

    let beat_span = if spec.p_present { geo.pr + geo.qt } else { geo.qt };
    if let Some(min_rr) = rr.iter().copied().reduce(f64::min) {
        if min_rr * 1000.0 < beat_span * 1000.0 + MIN_TP_GAP_MS {
            return Err(SignalError::Synthesis(format!(
                "infeasible timing: PR + QT = {:.0} ms does not fit in RR = {:.0} ms",
                beat_span * 1000.0,
                min_rr * 1000.0
            )));
        }
    }

    let fs = spec.fs_hz;
    let n = (spec.duration_s * fs).round() as usize;
    let mut beats = Vec::new();
    let mut r_t = rr[0] / 2.0;
    for interval in rr.iter().skip(1) {
        if r_t >= spec.duration_s {
            break;
        }
        beats.push(Beat { qrs_on: r_t - 0.4 * geo.qrs_w });
        r_t += interval;
    }

    let noise = if spec.noise_mv > 0.0 {
        Some(Normal::new(0.0, spec.noise_mv).expect("noise sigma is positive"))
    } else {
        None
    };

    let mut leads = BTreeMap::new();
    let mut truth = BTreeMap::new();
    let mut lead_list = spec.leads.clone();
    lead_list.sort();
    lead_list.dedup();
    for lead in lead_list {
        let shape = lead_shape(lead, spec);
        let st = spec.st_offset_mv.get(&lead).copied().unwrap_or(0.0);
        let mut buf = vec![0.0f64; n];
        let mut gt = LeadDelineation::default();
        for b in &beats {
            let q = b.qrs_on;
            let w = geo.qrs_w;
            let p_on = q - geo.pr;
            let t_off = q + geo.qt;
            let t_on = t_off - geo.t_w;

            add_bump(&mut buf, fs, p_on, p_on + geo.p_w, shape.p);
            add_bump(&mut buf, fs, q, q + 0.25 * w, -shape.q);
            add_bump(&mut buf, fs, q + 0.1 * w, q + 0.7 * w, shape.r);
            add_bump(&mut buf, fs, q + 0.55 * w, q + w, -shape.s);
            add_bump(&mut buf, fs, t_on, t_off, shape.t);
            if st != 0.0 {
                add_plateau(&mut buf, fs, [q + 0.55 * w, q + w, t_on, t_off], st);
            }

            let inside = |a: f64, z: f64| a >= 0.0 && (z * fs).round() < n as f64;
            if !inside(q, q + w) {
                continue;
            }
            if shape.p.abs() >= MIN_GT_AMPLITUDE_MV && inside(p_on, p_on + geo.p_w) {
                gt.p_on_idxs.push(idx(p_on, fs));
                gt.p_off_idxs.push(idx(p_on + geo.p_w, fs));
            }
            gt.qrs_on_idxs.push(idx(q, fs));
            gt.qrs_off_idxs.push(idx(q + w, fs));
            gt.r_peak_idxs.push(idx(geo.r_time(b), fs));
            if shape.t.abs() >= MIN_GT_AMPLITUDE_MV && inside(t_on, t_off) {
                gt.t_on_idxs.push(idx(t_on, fs));
                gt.t_off_idxs.push(idx(t_off, fs));
            }
        }
        if let Some(dist) = &noise {
            for v in buf.iter_mut() {
                *v += dist.sample(&mut rng);
            }
        }
        leads.insert(lead, buf.into_iter().map(|v| v as f32).collect::<Vec<f32>>());
        truth.insert(lead, gt);
    }

    let record_id = format!("synth-{}", spec.seed);
    let record = EcgRecord::new(record_id.clone(), fs, leads)?;
    let delineation = Delineation { record_id, fs_hz: fs, leads: truth };
    debug_assert!(delineation.validate(n).is_ok());
    Ok((record, delineation))
}

fn idx(t: f64, fs: f64) -> usize {
    (t * fs).round().max(0.0) as usize
}

fn sample_range(start: f64, end: f64, fs: f64, n: usize) -> std::ops::Range<usize> {
    let a = (start * fs).ceil().max(0.0) as usize;
    let b = ((end * fs).floor() + 1.0).max(0.0) as usize;
    a.min(n)..b.min(n)
}

/// Raised-cosine bump on [start, end].
fn add_bump(buf: &mut [f64], fs: f64, start: f64, end: f64, amp: f64) {
    if amp == 0.0 || end <= start {
        return;
    }
    let width = end - start;
    for i in sample_range(start, end, fs, buf.len()) {
        let x = (i as f64 / fs - start) / width;
        let s = (std::f64::consts::PI * x).sin();
        buf[i] += amp * s * s;
    }
}

/// Trapezoid with cosine ramps: rises over [k0, k1], flat to k2, falls by k3.
fn add_plateau(buf: &mut [f64], fs: f64, knots: [f64; 4], amp: f64) {
    let [k0, k1, k2, k3] = knots;
    let ramp = |x: f64| 0.5 * (1.0 - (std::f64::consts::PI * x).cos());
    for i in sample_range(k0, k3, fs, buf.len()) {
        let t = i as f64 / fs;
        let level = if t < k1 {
            ramp((t - k0) / (k1 - k0))
        } else if t <= k2 {
            1.0
        } else {
            ramp((k3 - t) / (k3 - k2))
        };
        buf[i] += amp * level;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sixty_bpm_ten_seconds_has_ten_beats() {
        let (rec, gt) = synthesize_ecg(&SynthSpec::default()).unwrap();
        assert_eq!(rec.n_samples(), 5000);
        let ii = gt.lead(Lead::II).unwrap();
        assert_eq!(ii.r_peak_idxs.len(), 10);
        for w in ii.r_peak_idxs.windows(2) {
            assert_eq!(w[1] - w[0], 500, "RR must be exactly 1000 ms");
        }
        gt.validate(rec.n_samples()).unwrap();
    }

    #[test]
    fn st_offset_raises_st_window() {
        let mut spec = SynthSpec::default();
        spec.st_offset_mv.insert(Lead::V1, 0.2);
        let (rec, gt) = synthesize_ecg(&spec).unwrap();
        let v1 = rec.lead_f64(Lead::V1).unwrap();
        let d = gt.lead(Lead::V1).unwrap();
        let forty_ms = 20;
        // The TP segment is the isoelectric reference.
        for (beat, (&qrs_off, &t_on)) in d.qrs_off_idxs.iter().zip(&d.t_on_idxs).enumerate() {
            let window = &v1[qrs_off + forty_ms..t_on];
            let mean = window.iter().sum::<f64>() / window.len() as f64;
            let tp_start = d.t_off_idxs[beat] + 1;
            let tp_end = d.p_on_idxs.get(beat + 1).copied().unwrap_or(tp_start + 1);
            let base = v1[tp_start..tp_end].iter().sum::<f64>() / (tp_end - tp_start) as f64;
            assert!((mean - base - 0.2).abs() <= 0.02, "beat {beat}: {}", mean - base);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = SynthSpec {
            seed: 7,
            noise_mv: 0.01,
            rr_jitter: RrJitter::Random { cv: 0.2 },
            ..Default::default()
        };
        let a = synthesize_ecg(&spec).unwrap();
        let b = synthesize_ecg(&spec).unwrap();
        let bytes = |r: &EcgRecord| -> Vec<u8> {
            r.leads().values().flatten().flat_map(|v| v.to_le_bytes()).collect()
        };
        assert_eq!(bytes(&a.0), bytes(&b.0));
        assert_eq!(a.1, b.1);
    }

    #[test]
    fn rejects_infeasible_timing() {
        let spec = SynthSpec { hr_bpm: 180.0, pr_ms: 200.0, qt_ms: 400.0, ..Default::default() };
        assert!(matches!(synthesize_ecg(&spec), Err(SignalError::Synthesis(_))));
        let spec = SynthSpec { hr_bpm: 400.0, ..Default::default() };
        assert!(synthesize_ecg(&spec).is_err());
    }

    #[test]
    fn absent_p_waves_leave_no_ground_truth_p() {
        let spec = SynthSpec { p_present: false, ..Default::default() };
        let (_, gt) = synthesize_ecg(&spec).unwrap();
        assert!(gt.leads.values().all(|d| d.p_on_idxs.is_empty()));
    }
}
