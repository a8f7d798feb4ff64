//! Seeded validation/test splits.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::manifest::ManifestRow;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("split ratio must lie strictly between 0 and 1, got {0}")]
pub struct SplitError(pub f64);

/// Split rows into (val, test). Rows sharing a `patient_id` stay together;
/// each output keeps the manifest order.
pub fn split_dataset(rows: &[ManifestRow], ratio: f64, seed: u64) -> Result<(Vec<ManifestRow>, Vec<ManifestRow>), SplitError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(SplitError(ratio));
    }
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, r) in rows.iter().enumerate() {
        let key = match &r.patient_id {
            Some(p) => format!("p:{p}"),
            None => format!("t:{}", r.trace_id),
        };
        let g = groups.entry(key.clone()).or_default();
        if g.is_empty() {
            order.push(key);
        }
        g.push(i);
    }
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let target = (ratio * rows.len() as f64).round() as usize;
    let mut in_val = vec![false; rows.len()];
    let mut n_val = 0usize;
    for key in &order {
        let g = &groups[key];
        if n_val < target && (n_val + g.len()).abs_diff(target) <= n_val.abs_diff(target) {
            n_val += g.len();
            for &i in g {
                in_val[i] = true;
            }
        }
    }
    let (val, test): (Vec<_>, Vec<_>) = rows.iter().zip(in_val).partition(|(_, v)| *v);
    Ok((val.into_iter().map(|(r, _)| r.clone()).collect(), test.into_iter().map(|(r, _)| r.clone()).collect()))
}
