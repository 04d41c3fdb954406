use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EmbedOutput, EmbedRequest, EmbeddingProvider};
use crate::error::{Error, Result};
use crate::metrics::TokenMatrix;
use crate::types::Embedding;

/// One line of an embeddings file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub id: String,
    pub pooled: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_vectors: Option<Vec<Vec<f64>>>,
}

/// Serves precomputed vectors keyed by dialogue id.
#[derive(Debug, Clone)]
pub struct FileEmbedder {
    dim: usize,
    entries: HashMap<String, EmbedOutput>,
}

impl FileEmbedder {
    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| {
            Error::Config(format!("cannot open embeddings {}: {e}", path.display()))
        })?;
        let mut records = Vec::new();
        for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: EmbeddingRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                column: e.column(),
                msg: e.to_string(),
            })?;
            records.push(rec);
        }
        Self::from_records(records).map_err(|e| match e {
            Error::InvalidInput(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn from_records(records: impl IntoIterator<Item = EmbeddingRecord>) -> Result<Self> {
        let mut dim = None;
        let mut entries = HashMap::new();
        for rec in records {
            let pooled = Embedding::new(rec.pooled)
                .map_err(|e| Error::invalid(format!("record `{}`: {e}", rec.id)))?;
            let d = *dim.get_or_insert(pooled.dim());
            if pooled.dim() != d {
                return Err(Error::invalid(format!(
                    "record `{}` has dimension {} but earlier records have {d}",
                    rec.id,
                    pooled.dim()
                )));
            }
            let token_vectors = match rec.token_vectors {
                Some(rows) => {
                    let m = TokenMatrix::from_rows(rows)?;
                    if m.n_rows() > 0 && m.dim() != d {
                        return Err(Error::invalid(format!(
                            "record `{}` has {}-wide token vectors but a {d}-wide pooled vector",
                            rec.id,
                            m.dim()
                        )));
                    }
                    Some(m).filter(|m| m.n_rows() > 0)
                }
                None => None,
            };
            if entries
                .insert(rec.id.clone(), EmbedOutput { token_vectors, pooled })
                .is_some()
            {
                return Err(Error::invalid(format!("duplicate embedding id `{}`", rec.id)));
            }
        }
        let dim = dim.ok_or_else(|| Error::invalid("embeddings file is empty"))?;
        Ok(FileEmbedder { dim, entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl EmbeddingProvider for FileEmbedder {
    fn name(&self) -> &str {
        "file"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn is_deterministic(&self) -> bool {
        true
    }

    fn embed(&self, req: &EmbedRequest<'_>) -> Result<EmbedOutput> {
        self.entries
            .get(req.id)
            .cloned()
            .ok_or_else(|| Error::Lookup(format!("no embedding stored for `{}`", req.id)))
    }
}
