//! Pan-Tompkins style QRS detection.
//!
//! Chain: zero-phase band-pass, five-point derivative, squaring, centered
//! moving-window integration, then adaptive signal/noise peak thresholds
//! with a refractory period, T-wave slope discrimination and search-back.

use super::filters::{bandpass, five_point_derivative, lowpass, median, moving_average};
use super::{DelineatorConfig, DetectError};

/// Energy trace and the slope magnitude it was built from.
pub(crate) struct Energy {
    pub integrated: Vec<f64>,
    pub slope: Vec<f64>,
}

pub(crate) fn lead_energy(samples: &[f64], fs: f64, cfg: &DelineatorConfig) -> Energy {
    let filtered = bandpass(samples, cfg.bandpass_low_hz, cfg.bandpass_high_hz, fs);
    let slope: Vec<f64> = five_point_derivative(&filtered, fs).into_iter().map(f64::abs).collect();
    let squared: Vec<f64> = slope.iter().map(|d| d * d).collect();
    let window = ((cfg.integration_window_ms / 1000.0) * fs).round().max(1.0) as usize;
    Energy { integrated: moving_average(&squared, window), slope }
}

fn ms_to_samples(ms: f64, fs: f64) -> usize {
    (ms / 1000.0 * fs).round() as usize
}

/// Detect R peaks in one lead.
pub fn detect_r_peaks(samples: &[f64], fs_hz: f64, cfg: &DelineatorConfig) -> Result<Vec<usize>, DetectError> {
    cfg.validate(fs_hz)?;
    if (samples.len() as f64) < 2.0 * fs_hz {
        return Err(DetectError::SignalTooShort { seconds: samples.len() as f64 / fs_hz });
    }
    let energy = lead_energy(samples, fs_hz, cfg);
    let beats = energy_peaks(&energy, fs_hz, cfg);
    Ok(refine_peaks(samples, &beats, fs_hz, cfg))
}

/// Locate QRS complexes on an integrated energy trace. Returned indices
/// are energy maxima, roughly the QRS centers.
pub(crate) fn energy_peaks(energy: &Energy, fs: f64, cfg: &DelineatorConfig) -> Vec<usize> {
    let mwi = &energy.integrated;
    let n = mwi.len();
    let global_max = mwi.iter().copied().fold(0.0, f64::max);
    if n < 3 || global_max <= 1e-12 {
        return Vec::new();
    }

    let refractory = ms_to_samples(cfg.refractory_ms, fs);
    let t_wave_window = ms_to_samples(360.0, fs);
    let slope_half = ms_to_samples(cfg.integration_window_ms / 2.0, fs);
    let learn = (2.0 * fs) as usize;
    let learn_max = mwi[..learn.min(n)].iter().copied().fold(0.0, f64::max);
    let learn_mean = mwi[..learn.min(n)].iter().sum::<f64>() / learn.min(n) as f64;
    let mut spki = learn_max / 3.0;
    let mut npki = learn_mean / 2.0;
    let decay = cfg.threshold_decay;

    let max_slope_near = |i: usize| -> f64 {
        let a = i.saturating_sub(slope_half);
        let b = (i + slope_half + 1).min(n);
        energy.slope[a..b].iter().copied().fold(0.0, f64::max)
    };

    let candidates: Vec<usize> = (1..n - 1)
        .filter(|&i| mwi[i] > mwi[i - 1] && mwi[i] >= mwi[i + 1])
        .collect();

    let mut peaks: Vec<usize> = Vec::new();
    let mut noise: Vec<usize> = Vec::new();

    let rr_average = |peaks: &[usize]| -> Option<f64> {
        if peaks.len() < 2 {
            return None;
        }
        let tail = &peaks[peaks.len().saturating_sub(9)..];
        Some((tail[tail.len() - 1] - tail[0]) as f64 / (tail.len() - 1) as f64)
    };

    let search_back = |peaks: &mut Vec<usize>, noise: &[usize], until: usize, spki: &mut f64, npki: f64| {
        let (Some(&last), Some(rr)) = (peaks.last(), rr_average(peaks)) else {
            return;
        };
        if (until - last) as f64 <= 1.66 * rr {
            return;
        }
        let thr2 = 0.5 * (npki + 0.25 * (*spki - npki));
        let best = noise
            .iter()
            .copied()
            .filter(|&c| c > last + refractory && c + refractory < until && mwi[c] > thr2)
            .max_by(|&a, &b| mwi[a].total_cmp(&mwi[b]));
        if let Some(c) = best {
            peaks.push(c);
            *spki = 0.25 * mwi[c] + 0.75 * *spki;
        }
    };

    for &i in &candidates {
        if cfg.search_back {
            search_back(&mut peaks, &noise, i, &mut spki, npki);
        }
        let v = mwi[i];
        let thr1 = npki + 0.25 * (spki - npki);
        if v > thr1 {
            if let Some(&last) = peaks.last() {
                if i - last < refractory {
                    if v > mwi[last] {
                        *peaks.last_mut().unwrap() = i;
                        spki = decay * spki + (1.0 - decay) * v;
                    }
                    continue;
                }
                if i - last < t_wave_window && max_slope_near(i) < 0.5 * max_slope_near(last) {
                    npki = decay * npki + (1.0 - decay) * v;
                    noise.push(i);
                    continue;
                }
            }
            peaks.push(i);
            spki = decay * spki + (1.0 - decay) * v;
        } else {
            npki = decay * npki + (1.0 - decay) * v;
            noise.push(i);
        }
    }
    if cfg.search_back {
        search_back(&mut peaks, &noise, n, &mut spki, npki);
    }
    peaks
}

/// Move each energy peak onto the dominant deflection of the lead.
///
/// The positive extreme wins unless the negative one is clearly larger,
/// which keeps R (not S) as the fiducial in leads with an rS pattern of
/// comparable size.
pub(crate) fn refine_peaks(samples: &[f64], centers: &[usize], fs: f64, cfg: &DelineatorConfig) -> Vec<usize> {
    let n = samples.len();
    if n == 0 {
        return Vec::new();
    }
    let smooth = lowpass(samples, 40.0_f64.min(0.45 * fs), fs);
    let half = ms_to_samples(cfg.integration_window_ms * 0.6, fs).max(1);
    let context = ms_to_samples(300.0, fs);
    let refractory = ms_to_samples(cfg.refractory_ms, fs);

    let mut out: Vec<(usize, f64)> = Vec::with_capacity(centers.len());
    for &c in centers {
        let a = c.saturating_sub(half);
        let b = (c + half + 1).min(n);
        let base = median(&smooth[c.saturating_sub(context)..(c + context).min(n)]).unwrap_or(0.0);
        let (mut hi, mut lo) = (a, a);
        for i in a..b {
            if smooth[i] > smooth[hi] {
                hi = i;
            }
            if smooth[i] < smooth[lo] {
                lo = i;
            }
        }
        let up = smooth[hi] - base;
        let down = base - smooth[lo];
        let (idx, mag) = if up >= 0.5 * down { (hi, up) } else { (lo, down) };
        match out.last_mut() {
            Some(prev) if idx <= prev.0 || idx - prev.0 < refractory => {
                if mag > prev.1 {
                    *prev = (idx.max(prev.0), mag);
                }
            }
            _ => out.push((idx, mag)),
        }
    }
    out.into_iter().map(|(i, _)| i).collect()
}
