//! Labeled diagnostic-criteria knowledge base.

mod clean;
mod embed;
mod entry;
mod ingest;
mod store;
mod vocab;

use std::path::PathBuf;

pub use clean::*;
pub use embed::*;
pub use entry::*;
pub use ingest::*;
pub use store::*;
pub use vocab::*;

#[derive(Debug, thiserror::Error)]
pub enum KbError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("label `{0}` is not in the vocabulary")]
    UnknownLabel(String),
    #[error("knowledge base has no entries")]
    Empty,
    #[error("knowledge base is inconsistent: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Embed(#[from] EmbedError),
}
