//! Zero-phase IIR filtering and the small kernels the detectors need.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Second-order section in direct form I, normalized so `a0 == 1`.
#[derive(Debug, Clone, Copy)]
pub struct Biquad {
    b: [f64; 3],
    a: [f64; 2],
}

impl Biquad {
    /// Butterworth low-pass (Q = 1/sqrt 2) via the bilinear transform.
    pub fn lowpass(cutoff_hz: f64, fs_hz: f64) -> Self {
        let w0 = 2.0 * PI * cutoff_hz / fs_hz;
        let (sin, cos) = w0.sin_cos();
        let alpha = sin / (2.0 * FRAC_1_SQRT_2);
        let a0 = 1.0 + alpha;
        let b1 = (1.0 - cos) / a0;
        Self {
            b: [b1 / 2.0, b1, b1 / 2.0],
            a: [-2.0 * cos / a0, (1.0 - alpha) / a0],
        }
    }

    pub fn highpass(cutoff_hz: f64, fs_hz: f64) -> Self {
        let w0 = 2.0 * PI * cutoff_hz / fs_hz;
        let (sin, cos) = w0.sin_cos();
        let alpha = sin / (2.0 * FRAC_1_SQRT_2);
        let a0 = 1.0 + alpha;
        let b0 = (1.0 + cos) / 2.0 / a0;
        Self {
            b: [b0, -2.0 * b0, b0],
            a: [-2.0 * cos / a0, (1.0 - alpha) / a0],
        }
    }

    fn run(&self, x: &[f64]) -> Vec<f64> {
        let mut y = Vec::with_capacity(x.len());
        let (mut x1, mut x2, mut y1, mut y2) = (0.0, 0.0, 0.0, 0.0);
        for &x0 in x {
            let y0 = self.b[0] * x0 + self.b[1] * x1 + self.b[2] * x2 - self.a[0] * y1 - self.a[1] * y2;
            x2 = x1;
            x1 = x0;
            y2 = y1;
            y1 = y0;
            y.push(y0);
        }
        y
    }

    /// Forward-backward filtering with odd reflection padding at both ends,
    /// which cancels the phase shift and keeps the edges free of steps.
    pub fn filtfilt(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        if n < 2 {
            return x.to_vec();
        }
        let pad = (3 * 64).min(n - 1);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        for i in (1..=pad).rev() {
            ext.push(2.0 * x[0] - x[i]);
        }
        ext.extend_from_slice(x);
        for i in 1..=pad {
            ext.push(2.0 * x[n - 1] - x[n - 1 - i]);
        }
        let mut y = self.run(&ext);
        y.reverse();
        let mut y = self.run(&y);
        y.reverse();
        y[pad..pad + n].to_vec()
    }
}

pub fn bandpass(x: &[f64], low_hz: f64, high_hz: f64, fs_hz: f64) -> Vec<f64> {
    let hp = Biquad::highpass(low_hz, fs_hz).filtfilt(x);
    Biquad::lowpass(high_hz, fs_hz).filtfilt(&hp)
}

pub fn lowpass(x: &[f64], cutoff_hz: f64, fs_hz: f64) -> Vec<f64> {
    Biquad::lowpass(cutoff_hz, fs_hz).filtfilt(x)
}

/// Five-point derivative, units per second.
pub fn five_point_derivative(x: &[f64], fs_hz: f64) -> Vec<f64> {
    let n = x.len();
    let at = |i: isize| x[i.clamp(0, n as isize - 1) as usize];
    (0..n as isize)
        .map(|i| (-at(i - 2) - 2.0 * at(i - 1) + 2.0 * at(i + 1) + at(i + 2)) * fs_hz / 8.0)
        .collect()
}

/// Central difference derivative, units per second.
pub fn central_derivative(x: &[f64], fs_hz: f64) -> Vec<f64> {
    let n = x.len();
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|i| {
            let a = x[i.saturating_sub(1)];
            let b = x[(i + 1).min(n - 1)];
            let span = ((i + 1).min(n - 1) - i.saturating_sub(1)) as f64;
            (b - a) * fs_hz / span
        })
        .collect()
}

/// Centered moving average over `window` samples; shrinks at the edges.
pub fn moving_average(x: &[f64], window: usize) -> Vec<f64> {
    let n = x.len();
    let window = window.max(1);
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for v in x {
        prefix.push(prefix.last().unwrap() + v);
    }
    let half_lo = window / 2;
    let half_hi = window - half_lo;
    (0..n)
        .map(|i| {
            let a = i.saturating_sub(half_lo);
            let b = (i + half_hi).min(n);
            (prefix[b] - prefix[a]) / (b - a) as f64
        })
        .collect()
}

pub fn mean(x: &[f64]) -> Option<f64> {
    if x.is_empty() {
        None
    } else {
        Some(x.iter().sum::<f64>() / x.len() as f64)
    }
}

pub fn median(x: &[f64]) -> Option<f64> {
    if x.is_empty() {
        return None;
    }
    let mut v = x.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(freq: f64, fs: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| (2.0 * PI * freq * i as f64 / fs).sin()).collect()
    }

    fn rms(x: &[f64]) -> f64 {
        (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
    }

    #[test]
    fn bandpass_keeps_passband_and_rejects_drift() {
        let fs = 500.0;
        let pass = bandpass(&tone(10.0, fs, 5000), 5.0, 15.0, fs);
        let drift = bandpass(&tone(0.3, fs, 5000), 5.0, 15.0, fs);
        let hum = bandpass(&tone(60.0, fs, 5000), 5.0, 15.0, fs);
        assert!(rms(&pass[500..4500]) > 0.5);
        assert!(rms(&drift[500..4500]) < 0.01);
        assert!(rms(&hum[500..4500]) < 0.05);
    }

    #[test]
    fn filtfilt_has_no_lag() {
        let fs = 500.0;
        let x = tone(2.0, fs, 5000);
        let y = lowpass(&x, 40.0, fs);
        let peak_x = (1000..1250).max_by(|&a, &b| x[a].total_cmp(&x[b])).unwrap();
        let peak_y = (1000..1250).max_by(|&a, &b| y[a].total_cmp(&y[b])).unwrap();
        assert!((peak_x as i64 - peak_y as i64).abs() <= 1);
    }

    #[test]
    fn derivative_of_ramp_is_slope() {
        let x: Vec<f64> = (0..100).map(|i| 0.5 * i as f64 / 500.0).collect();
        for d in &five_point_derivative(&x, 500.0)[2..98] {
            assert!((d - 0.5).abs() < 1e-9);
        }
        for d in &central_derivative(&x, 500.0)[1..99] {
            assert!((d - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn moving_average_and_stats() {
        assert_eq!(moving_average(&[1.0, 2.0, 3.0, 4.0], 2), vec![1.0, 1.5, 2.5, 3.5]);
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(mean(&[]), None);
    }
}
