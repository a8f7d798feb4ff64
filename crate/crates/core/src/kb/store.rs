//! The embedded criteria index and its on-disk form.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::embed::Embedder;
use super::entry::CriteriaEntry;
use super::KbError;

pub const ENTRIES_FILE: &str = "entries.jsonl";
pub const VECTORS_FILE: &str = "vectors.bin";
pub const VECTORS_META_FILE: &str = "vectors.meta.json";

const NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct VectorHeader {
    n: usize,
    dim: usize,
    dtype: String,
    embedder_fingerprint: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeBase {
    entries: Vec<CriteriaEntry>,
    /// Row-major, `entries.len() * dim`.
    vectors: Vec<f32>,
    dim: usize,
    embedder_fingerprint: String,
}

impl KnowledgeBase {
    /// Assemble from parts, checking alignment and row norms.
    pub fn from_parts(
        entries: Vec<CriteriaEntry>,
        vectors: Vec<f32>,
        dim: usize,
        embedder_fingerprint: String,
    ) -> Result<Self, KbError> {
        if entries.is_empty() {
            return Err(KbError::Empty);
        }
        if dim == 0 || vectors.len() != entries.len() * dim {
            return Err(KbError::Corrupt(format!(
                "{} values do not form {} rows of {dim}",
                vectors.len(),
                entries.len()
            )));
        }
        let mut ids = std::collections::BTreeSet::new();
        for (i, e) in entries.iter().enumerate() {
            e.validate().map_err(KbError::Corrupt)?;
            if !ids.insert(e.entry_id) {
                return Err(KbError::Corrupt(format!("duplicate entry_id {}", e.entry_id)));
            }
            let row = &vectors[i * dim..(i + 1) * dim];
            let norm = row.iter().map(|x| f64::from(*x).powi(2)).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > NORM_TOLERANCE {
                return Err(KbError::Corrupt(format!("row {i} has norm {norm}")));
            }
        }
        Ok(Self { entries, vectors, dim, embedder_fingerprint })
    }

    pub fn entries(&self) -> &[CriteriaEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn embedder_fingerprint(&self) -> &str {
        &self.embedder_fingerprint
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = (&CriteriaEntry, &[f32])> {
        self.entries.iter().zip(self.vectors.chunks_exact(self.dim))
    }

    pub fn save(&self, dir: &Path) -> Result<(), KbError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |e| KbError::Io { path: path.clone(), source: e }
        };
        fs::create_dir_all(dir).map_err(io(dir))?;
        let ep = dir.join(ENTRIES_FILE);
        let mut f = std::io::BufWriter::new(fs::File::create(&ep).map_err(io(&ep))?);
        for e in &self.entries {
            let line = serde_json::to_string(e).expect("entry serializes");
            writeln!(f, "{line}").map_err(io(&ep))?;
        }
        f.flush().map_err(io(&ep))?;
        let header = VectorHeader {
            n: self.entries.len(),
            dim: self.dim,
            dtype: "f32le".into(),
            embedder_fingerprint: self.embedder_fingerprint.clone(),
        };
        let mp = dir.join(VECTORS_META_FILE);
        fs::write(&mp, serde_json::to_string_pretty(&header).expect("header serializes")).map_err(io(&mp))?;
        let bytes: Vec<u8> = self.vectors.iter().flat_map(|x| x.to_le_bytes()).collect();
        let vp = dir.join(VECTORS_FILE);
        fs::write(&vp, bytes).map_err(io(&vp))?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, KbError> {
        let ep = dir.join(ENTRIES_FILE);
        let file = fs::File::open(&ep).map_err(|e| KbError::Io { path: ep.clone(), source: e })?;
        let mut entries = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| KbError::Io { path: ep.clone(), source: e })?;
            if line.trim().is_empty() {
                continue;
            }
            let e: CriteriaEntry =
                serde_json::from_str(&line).map_err(|e| KbError::Corrupt(format!("{}:{}: {e}", ep.display(), i + 1)))?;
            entries.push(e);
        }
        let mp = dir.join(VECTORS_META_FILE);
        let text = fs::read_to_string(&mp).map_err(|e| KbError::Io { path: mp.clone(), source: e })?;
        let header: VectorHeader = serde_json::from_str(&text).map_err(|e| KbError::Corrupt(format!("{}: {e}", mp.display())))?;
        if header.dtype != "f32le" {
            return Err(KbError::Corrupt(format!("unsupported dtype `{}`", header.dtype)));
        }
        if header.n != entries.len() {
            return Err(KbError::Corrupt(format!("header says {} rows, found {} entries", header.n, entries.len())));
        }
        let vp = dir.join(VECTORS_FILE);
        let bytes = fs::read(&vp).map_err(|e| KbError::Io { path: vp.clone(), source: e })?;
        if bytes.len() != header.n * header.dim * 4 {
            return Err(KbError::Corrupt(format!("vector payload is {} bytes, expected {}", bytes.len(), header.n * header.dim * 4)));
        }
        let vectors = bytes.chunks_exact(4).map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]])).collect();
        Self::from_parts(entries, vectors, header.dim, header.embedder_fingerprint)
    }
}

/// Embed every entry's combined text.
pub fn build_index(entries: Vec<CriteriaEntry>, embedder: &dyn Embedder) -> Result<KnowledgeBase, KbError> {
    if entries.is_empty() {
        return Err(KbError::Empty);
    }
    let dim = embedder.dim();
    let mut vectors = Vec::with_capacity(entries.len() * dim);
    for e in &entries {
        let emb = embedder.embed(&e.combined_text)?;
        if emb.vector.len() != dim {
            return Err(KbError::Embed(super::EmbedError::Dimension { expected: dim, got: emb.vector.len() }));
        }
        if !emb.valid {
            return Err(KbError::Corrupt(format!("entry {} has no embeddable text", e.entry_id)));
        }
        vectors.extend(emb.vector);
    }
    KnowledgeBase::from_parts(entries, vectors, dim, embedder.fingerprint())
}
