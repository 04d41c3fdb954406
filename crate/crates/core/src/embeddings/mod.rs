//! Pluggable embedding providers.
//!
//! A provider turns a tokenized dialogue set into an optional per-token
//! matrix (needed for EOE) and a pooled sequence vector (stored in the
//! buffer and used for IDD). Providers are built by name through
//! [`ProviderRegistry`].

mod file;
mod hash;
mod http;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use self::file::{EmbeddingRecord, FileEmbedder};
pub use self::hash::{deterministic_test_embed, HashEmbedder};
pub use self::http::HttpEmbedder;
use crate::error::{Error, Result};
use crate::http::HttpSettings;
use crate::metrics::{TokenMatrix, TokenSequence};
use crate::types::Embedding;

/// Matches the 4096-wide hidden state the bin size was derived from.
pub const DEFAULT_DIM: usize = 4096;

#[derive(Debug, Clone, Copy)]
pub struct EmbedRequest<'a> {
    pub id: &'a str,
    pub text: &'a str,
    pub tokens: &'a TokenSequence,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbedOutput {
    /// Absent when the source only has a pooled vector; EOE is then 0.
    pub token_vectors: Option<TokenMatrix>,
    pub pooled: Embedding,
}

pub trait EmbeddingProvider: Send + Sync {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    fn is_deterministic(&self) -> bool;

    fn embed(&self, req: &EmbedRequest<'_>) -> Result<EmbedOutput>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderSpec {
    pub kind: String,
    pub dim: Option<usize>,
    pub seed: u64,
    pub path: Option<PathBuf>,
    pub url: Option<String>,
    #[serde(flatten)]
    pub http: HttpSettings,
}

impl Default for ProviderSpec {
    fn default() -> Self {
        ProviderSpec {
            kind: "hash".into(),
            dim: None,
            seed: 0,
            path: None,
            url: None,
            http: HttpSettings::default(),
        }
    }
}

pub type ProviderFactory = fn(&ProviderSpec) -> Result<Arc<dyn EmbeddingProvider>>;

pub struct ProviderRegistry {
    factories: BTreeMap<String, ProviderFactory>,
}

impl ProviderRegistry {
    pub fn empty() -> Self {
        ProviderRegistry {
            factories: BTreeMap::new(),
        }
    }

    /// Registry holding `hash`, `file` and `http`.
    pub fn with_builtins() -> Self {
        let mut reg = Self::empty();
        reg.register("hash", |spec| {
            Ok(Arc::new(HashEmbedder::new(
                spec.dim.unwrap_or(DEFAULT_DIM),
                spec.seed,
            )?))
        });
        reg.register("file", |spec| {
            let path = spec
                .path
                .as_ref()
                .ok_or_else(|| Error::Config("file provider needs `path`".into()))?;
            let p = FileEmbedder::load(path)?;
            if let Some(d) = spec.dim {
                if d != p.dim() {
                    return Err(Error::Config(format!(
                        "{} holds {}-dimensional vectors but dim = {d} was configured",
                        path.display(),
                        p.dim()
                    )));
                }
            }
            Ok(Arc::new(p))
        });
        reg.register("http", |spec| {
            let url = spec
                .url
                .clone()
                .ok_or_else(|| Error::Config("http provider needs `url`".into()))?;
            Ok(Arc::new(HttpEmbedder::new(
                url,
                spec.dim.unwrap_or(DEFAULT_DIM),
                spec.http.clone(),
            )?))
        });
        reg
    }

    pub fn register(&mut self, name: impl Into<String>, factory: ProviderFactory) {
        self.factories.insert(name.into(), factory);
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }

    pub fn build(&self, spec: &ProviderSpec) -> Result<Arc<dyn EmbeddingProvider>> {
        let factory = self.factories.get(&spec.kind).ok_or_else(|| {
            Error::Config(format!(
                "unknown embedding provider `{}` (known: {})",
                spec.kind,
                self.names().collect::<Vec<_>>().join(", ")
            ))
        })?;
        factory(spec)
    }
}

impl Default for ProviderRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}
