use serde::{Deserialize, Serialize};

use super::{EmbedOutput, EmbedRequest, EmbeddingProvider};
use crate::error::{Error, Result};
use crate::http::{HttpSettings, JsonClient};
use crate::metrics::TokenMatrix;
use crate::types::Embedding;

#[derive(Serialize)]
struct EmbedBody<'a> {
    text: &'a str,
}

#[derive(Deserialize)]
struct EmbedReply {
    #[serde(default)]
    token_vectors: Option<Vec<Vec<f64>>>,
    pooled: Vec<f64>,
}

/// Remote model behind `POST {"text"} -> {"token_vectors", "pooled"}`.
#[derive(Debug)]
pub struct HttpEmbedder {
    dim: usize,
    client: JsonClient,
}

impl HttpEmbedder {
    pub fn new(url: impl Into<String>, dim: usize, settings: HttpSettings) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("embedding dimension must be positive".into()));
        }
        Ok(HttpEmbedder {
            dim,
            client: JsonClient::new(url, settings).map_err(Error::Config)?,
        })
    }
}

impl EmbeddingProvider for HttpEmbedder {
    fn name(&self) -> &str {
        "http"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn is_deterministic(&self) -> bool {
        false
    }

    fn embed(&self, req: &EmbedRequest<'_>) -> Result<EmbedOutput> {
        let reply: EmbedReply = self
            .client
            .post(&EmbedBody { text: req.text })
            .map_err(Error::Provider)?;
        if reply.pooled.len() != self.dim {
            return Err(Error::InvalidResponse(format!(
                "pooled vector has dimension {}, expected {}",
                reply.pooled.len(),
                self.dim
            )));
        }
        let pooled = Embedding::new(reply.pooled)
            .map_err(|e| Error::InvalidResponse(e.to_string()))?;
        let token_vectors = match reply.token_vectors {
            Some(rows) if !rows.is_empty() => {
                let m = TokenMatrix::from_rows(rows)
                    .map_err(|e| Error::InvalidResponse(e.to_string()))?;
                if m.dim() != self.dim {
                    return Err(Error::InvalidResponse(format!(
                        "token vectors have dimension {}, expected {}",
                        m.dim(),
                        self.dim
                    )));
                }
                Some(m)
            }
            _ => None,
        };
        Ok(EmbedOutput {
            token_vectors,
            pooled,
        })
    }
}
