use std::collections::BTreeMap;

use super::{EcgRecord, SignalError};

/// Standard processing rate; delineation parameters are tuned for it.
pub const TARGET_RATE_HZ: f64 = 500.0;

/// Linear-interpolation resampling. Output sample `j` sits at time
/// `j / target_hz`; points past the last input sample extrapolate from the
/// final segment.
pub fn resample_record(rec: &EcgRecord, target_hz: f64) -> Result<EcgRecord, SignalError> {
    if !(target_hz.is_finite() && target_hz > 0.0) {
        return Err(SignalError::InvalidSamplingRate(target_hz));
    }
    let source_hz = rec.sampling_rate_hz();
    if target_hz == source_hz {
        return Ok(rec.clone());
    }
    let n_in = rec.n_samples();
    let n_out = ((n_in as f64) * target_hz / source_hz).round().max(1.0) as usize;
    let step = source_hz / target_hz;

    let leads: BTreeMap<_, _> = rec
        .leads()
        .iter()
        .map(|(lead, samples)| (*lead, resample_linear(samples, n_out, step)))
        .collect();
    EcgRecord::new(rec.record_id(), target_hz, leads)
}

fn resample_linear(samples: &[f32], n_out: usize, step: f64) -> Vec<f32> {
    let n_in = samples.len();
    if n_in == 1 {
        return vec![samples[0]; n_out];
    }
    (0..n_out)
        .map(|j| {
            let pos = j as f64 * step;
            let i0 = (pos.floor() as usize).min(n_in - 2);
            let frac = pos - i0 as f64;
            let a = samples[i0] as f64;
            let b = samples[i0 + 1] as f64;
            (a + (b - a) * frac) as f32
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::Lead;
    use std::f64::consts::PI;

    fn sine_record(fs: f64, n: usize) -> EcgRecord {
        let s: Vec<f32> = (0..n).map(|i| (2.0 * PI * i as f64 / fs).sin() as f32).collect();
        EcgRecord::new("s", fs, [(Lead::II, s)].into_iter().collect()).unwrap()
    }

    #[test]
    fn doubles_length() {
        let out = resample_record(&sine_record(250.0, 2500), 500.0).unwrap();
        assert_eq!(out.n_samples(), 5000);
        assert_eq!(out.sampling_rate_hz(), 500.0);
    }

    #[test]
    fn identity_is_bitwise() {
        let rec = sine_record(500.0, 1234);
        let out = resample_record(&rec, 500.0).unwrap();
        assert_eq!(out, rec);
    }

    #[test]
    fn sinusoid_tracks_analytic_signal() {
        let out = resample_record(&sine_record(250.0, 2500), 500.0).unwrap();
        let max_dev = out
            .lead(Lead::II)
            .unwrap()
            .iter()
            .enumerate()
            .map(|(j, &v)| (v as f64 - (2.0 * PI * j as f64 / 500.0).sin()).abs())
            .fold(0.0, f64::max);
        assert!(max_dev < 1e-3, "max deviation {max_dev}");
    }

    #[test]
    fn duration_preserved_within_one_period() {
        for (fs, n, target) in [(360.0, 3600, 500.0), (1000.0, 7777, 500.0), (128.0, 1280, 500.0)] {
            let rec = sine_record(fs, n);
            let out = resample_record(&rec, target).unwrap();
            assert!((out.duration_seconds() - rec.duration_seconds()).abs() <= 1.0 / target);
        }
    }

    #[test]
    fn rejects_bad_rate() {
        assert!(resample_record(&sine_record(250.0, 10), 0.0).is_err());
        assert!(resample_record(&sine_record(250.0, 10), f64::NAN).is_err());
    }
}
