//! Text embedders. The builtin one hashes a bag of words into a fixed
//! number of signed buckets.

use serde::{Deserialize, Serialize};

use crate::util::fnv1a64;

pub const BUILTIN_DIM: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub vector: Vec<f32>,
    /// False when the text carried no tokens; such vectors cannot be used for retrieval.
    pub valid: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum EmbedError {
    #[error("embedder returned {got} dimensions, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("embedding provider failed: {0}")]
    Provider(String),
}

pub trait Embedder: Send + Sync {
    fn dim(&self) -> usize;
    fn fingerprint(&self) -> String;
    fn embed(&self, text: &str) -> Result<Embedding, EmbedError>;
}

/// Scale `v` to unit length; a zero vector stays zero and is reported invalid.
pub fn normalize(v: &[f64]) -> Embedding {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm <= 0.0 || !norm.is_finite() {
        return Embedding { vector: vec![0.0; v.len()], valid: false };
    }
    Embedding { vector: v.iter().map(|x| (x / norm) as f32).collect(), valid: true }
}

pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(x, y)| f64::from(*x) * f64::from(*y)).sum()
}

/// Lowercased alphanumeric tokens; punctuation separates tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuiltinEmbedder {
    pub dim: usize,
    /// Weight repeated tokens by 1 + ln(tf) instead of raw counts.
    pub log_tf: bool,
}

impl Default for BuiltinEmbedder {
    fn default() -> Self {
        Self { dim: BUILTIN_DIM, log_tf: true }
    }
}

impl BuiltinEmbedder {
    /// Bucket and sign for a token.
    pub fn slot(&self, token: &str) -> (usize, f64) {
        let h = fnv1a64(token.as_bytes());
        let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
        ((h % self.dim as u64) as usize, sign)
    }

    fn raw(&self, text: &str) -> Vec<f64> {
        let mut counts = std::collections::BTreeMap::<String, usize>::new();
        for t in tokenize(text) {
            *counts.entry(t).or_default() += 1;
        }
        let mut v = vec![0.0; self.dim];
        for (tok, tf) in counts {
            let (i, sign) = self.slot(&tok);
            let w = if self.log_tf { 1.0 + (tf as f64).ln() } else { tf as f64 };
            v[i] += sign * w;
        }
        v
    }
}

impl Embedder for BuiltinEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn fingerprint(&self) -> String {
        format!("builtin-fnv1a-{}-{}", self.dim, if self.log_tf { "logtf" } else { "tf" })
    }

    fn embed(&self, text: &str) -> Result<Embedding, EmbedError> {
        Ok(normalize(&self.raw(text)))
    }
}

/// Convenience wrapper around the default builtin embedder.
pub fn embed_builtin(text: &str) -> Embedding {
    normalize(&BuiltinEmbedder::default().raw(text))
}
