//! Synthetic datasets with known ground truth, for smoke runs and fixtures.

use std::path::{Path, PathBuf};

use reasoneval_core::delineation::DelineatorConfig;
use reasoneval_core::signal::{save_record, RecordFormat, SynthSpec};
use reasoneval_core::synthetic::{synthetic_case, SyntheticError};

use crate::manifest::{Manifest, ManifestRow};

pub const MODEL_TAGS: [&str; 3] = ["model-a", "model-b", "model-c"];
pub const SYNTH_TASK: &str = "ecgqa_rhythm";

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error(transparent)]
    Case(#[from] SyntheticError),
    #[error("cannot write {path}: {msg}")]
    Write { path: PathBuf, msg: String },
}

/// Rhythm label implied by a spec.
pub fn rhythm_label(spec: &SynthSpec) -> &'static str {
    if !spec.p_present {
        "none"
    } else if spec.hr_bpm > 100.0 {
        "sinus tachycardia"
    } else if spec.hr_bpm < 60.0 {
        "sinus bradycardia"
    } else {
        "sinus rhythm"
    }
}

/// Answer given by each synthetic model: model-a is always right, model-b
/// is right on even rows, model-c always answers atrial fibrillation.
fn prediction(tag: &str, i: usize, gt: &str) -> String {
    match tag {
        "model-a" => gt.to_string(),
        "model-b" if i % 2 == 0 => gt.to_string(),
        "model-b" => "atrial flutter".to_string(),
        _ => "atrial fibrillation".to_string(),
    }
}

/// Write `n` synthetic records under `dir/records` and a manifest at
/// `dir/manifest.jsonl`. Returns the manifest path.
pub fn write_synthetic_dataset(dir: &Path, n: usize, seed: u64) -> Result<PathBuf, SynthError> {
    let cfg = DelineatorConfig::default();
    let rec_dir = dir.join("records");
    std::fs::create_dir_all(&rec_dir).map_err(|e| SynthError::Write { path: rec_dir.clone(), msg: e.to_string() })?;
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let case = synthetic_case(seed.wrapping_add(i as u64), &cfg)?;
        let rel = PathBuf::from("records").join(format!("{}.bin", case.trace_id));
        let path = dir.join(&rel);
        save_record(&case.record, &path, RecordFormat::Rawbin).map_err(|e| SynthError::Write { path, msg: e.to_string() })?;
        let gt = rhythm_label(&case.spec);
        let tag = MODEL_TAGS[i % MODEL_TAGS.len()];
        let predicted = prediction(tag, i / MODEL_TAGS.len(), gt);
        rows.push(ManifestRow {
            trace_id: case.trace_id.clone(),
            record_path: rel,
            gt_labels: vec![gt.to_string()],
            reasoning_trace: format!("{} Final answer: {predicted}.", case.note),
            predicted_label: Some(predicted),
            model_tag: tag.to_string(),
            delineation_path: None,
            patient_id: Some(format!("p{:03}", i / 2)),
            task: Some(SYNTH_TASK.to_string()),
        });
    }
    let path = dir.join("manifest.jsonl");
    std::fs::write(&path, Manifest::to_jsonl(&rows)).map_err(|e| SynthError::Write { path: path.clone(), msg: e.to_string() })?;
    Ok(path)
}
