//! Parallel evaluation of manifest rows.

use rayon::prelude::*;
use reasoneval_core::deduction::evaluate_deduction;
use reasoneval_core::delineation::{analyze_record, import_delineation};
use reasoneval_core::kb::{Embedder, KnowledgeBase};
use reasoneval_core::perception::{evaluate_adversarial, evaluate_supporting, verify_trace, NoteCase};
use reasoneval_core::signal::{load_record, resample_record, EcgRecord, FeatureTable, RecordFormat, TARGET_RATE_HZ};

use crate::config::{Assets, Config};
use crate::manifest::{Manifest, ManifestRow};
use crate::report::*;

/// The knowledge base and embedder used for deduction scoring.
pub struct Retrieval<'a> {
    pub kb: &'a KnowledgeBase,
    pub embedder: &'a dyn Embedder,
}

pub struct Runner<'a> {
    pub config: &'a Config,
    pub assets: &'a Assets,
    pub retrieval: Option<Retrieval<'a>>,
    pub workers: usize,
}

fn fail(stage: Stage, e: impl ToString) -> RowFailure {
    RowFailure { stage, message: e.to_string() }
}

impl Runner<'_> {
    /// Load the row's record and measure it. Records at other rates are
    /// resampled first unless the row brings its own delineation.
    pub fn measure(&self, manifest: &Manifest, row: &ManifestRow) -> Result<(EcgRecord, FeatureTable), RowFailure> {
        let path = manifest.resolve(&row.record_path);
        let format = RecordFormat::infer(&path)
            .ok_or_else(|| fail(Stage::Record, format!("cannot tell the format of {}", path.display())))?;
        let rec = load_record(&path, format).map_err(|e| fail(Stage::Record, format!("{}: {e}", path.display())))?;
        match &row.delineation_path {
            Some(d) => {
                let delin = import_delineation(&manifest.resolve(d), &rec).map_err(|e| fail(Stage::Delineation, e))?;
                let (_, ft) = analyze_record(&rec, Some(&delin), &self.config.delineator).map_err(|e| fail(Stage::Delineation, e))?;
                Ok((rec, ft))
            }
            None => {
                let rec = if (rec.sampling_rate_hz() - TARGET_RATE_HZ).abs() > f64::EPSILON {
                    resample_record(&rec, TARGET_RATE_HZ).map_err(|e| fail(Stage::Record, e))?
                } else {
                    rec
                };
                let (_, ft) = analyze_record(&rec, None, &self.config.delineator).map_err(|e| fail(Stage::Delineation, e))?;
                Ok((rec, ft))
            }
        }
    }

    fn blank(row: &ManifestRow) -> TraceEntry {
        TraceEntry {
            trace_id: row.trace_id.clone(),
            model_tag: row.model_tag.clone(),
            task: row.task().to_string(),
            gt_labels: row.gt_labels.clone(),
            predicted_labels: row.predicted_labels(),
            perception: None,
            flips: Vec::new(),
            deduction: None,
            final_correct: None,
            failure: None,
        }
    }

    fn eval_row(&self, mode: RunMode, manifest: &Manifest, row: &ManifestRow) -> TraceEntry {
        let mut entry = Self::blank(row);
        let (rec, ft) = match self.measure(manifest, row) {
            Ok(m) => m,
            Err(f) => {
                entry.failure = Some(f);
                return entry;
            }
        };
        let case = NoteCase { trace_id: &row.trace_id, text: &row.reasoning_trace, record: &rec, features: &ft };
        let (lex, limits) = (&self.assets.lexicon, &self.config.limits);
        match mode {
            RunMode::AssessSupporting => entry.perception = Some(evaluate_supporting(&case, lex, limits)),
            RunMode::AssessAdversarial => {
                let (ev, adv) = evaluate_adversarial(&case, lex, &self.assets.antonyms, self.config.seed, self.config.flip, limits);
                entry.perception = Some(ev);
                entry.flips = adv.flips;
            }
            RunMode::Eval => {
                let ex = lex.extract(&row.reasoning_trace);
                entry.perception = Some(verify_trace(&row.trace_id, &ex.findings, &ft, &rec, limits));
                entry.final_correct = entry.predicted_labels.as_ref().map(|p| final_answer_correct(p, &row.gt_labels));
                if let Some(r) = &self.retrieval {
                    let predicted = entry.predicted_labels.clone().unwrap_or_default();
                    match evaluate_deduction(
                        &row.trace_id,
                        &row.reasoning_trace,
                        &predicted,
                        &row.gt_labels,
                        r.kb,
                        r.embedder,
                        &self.assets.synonyms,
                        &self.config.ks,
                    ) {
                        Ok(d) => entry.deduction = Some(d),
                        Err(e) => entry.failure = Some(fail(Stage::Deduction, e)),
                    }
                }
            }
        }
        entry
    }

    pub fn echo(&self) -> ConfigEcho {
        ConfigEcho {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            limits: self.config.limits.clone(),
            seed: self.config.seed,
            ks: self.config.ks.clone(),
            flip: None,
            embedder_fingerprint: self.retrieval.as_ref().map(|r| r.embedder.fingerprint()),
            kb_entries: self.retrieval.as_ref().map(|r| r.kb.len()),
            lexicon_entries: self.assets.lexicon.len(),
        }
    }

    /// Evaluate every row on a pool of `workers` threads. Results are
    /// ordered by trace id, so the report does not depend on scheduling.
    pub fn run(&self, mode: RunMode, manifest: &Manifest) -> RunReport {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(self.workers.max(1)).build().expect("thread pool");
        let traces: Vec<TraceEntry> =
            pool.install(|| manifest.rows.par_iter().map(|row| self.eval_row(mode, manifest, row)).collect());
        for t in &traces {
            if let Some(f) = &t.failure {
                log::warn!("{} failed at {:?}: {}", t.trace_id, f.stage, f.message);
            }
        }
        let mut echo = self.echo();
        if mode == RunMode::AssessAdversarial {
            echo.flip = Some(self.config.flip);
        }
        RunReport::assemble(mode, echo, traces)
    }
}
