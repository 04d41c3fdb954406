//! Self-supervised quality metrics for a dialogue set.
//!
//! * **EOE** (entropy of embedding): normalised Shannon entropy of the
//!   distribution of per-token embedding mass, `p_i = ‖e_i‖ / Σ_j ‖e_j‖`,
//!   divided by `ln n`.
//! * **DSS** (domain specific score): mean over domains of the fraction of
//!   tokens found in that domain's lexicon.
//! * **Dominant domain**: the domain with the largest token overlap; ties go
//!   to the domain listed first in the lexicon store.
//! * **IDD** (in-domain dissimilarity): mean cosine distance between a set's
//!   embedding and the buffered embeddings sharing its dominant domain. With
//!   no such entries the value is 1.0.

use crate::embeddings::{EmbedRequest, EmbeddingProvider};
use crate::error::{Error, Result};
use crate::lexicon::LexiconStore;
use crate::types::{DialogueSet, Embedding, QualityScores};

/// IDD assigned when the buffer holds no entry of the same dominant domain.
pub const IDD_NO_PEERS: f64 = 1.0;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenSequence {
    tokens: Vec<String>,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

impl<S: Into<String>> FromIterator<S> for TokenSequence {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        TokenSequence {
            tokens: iter.into_iter().map(Into::into).collect(),
        }
    }
}

/// Whitespace tokenizer: strips leading and trailing non-alphanumeric
/// characters from each word, lowercases, and drops empty tokens.
pub fn tokenize(text: &str) -> TokenSequence {
    text.split_whitespace()
        .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Row-major `n × d` matrix of per-token embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl TokenMatrix {
    pub fn empty(dim: usize) -> Self {
        TokenMatrix { dim, data: Vec::new() }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        if let Some(bad) = rows.iter().position(|r| r.len() != dim) {
            return Err(Error::invalid(format!(
                "token row {bad} has length {} but row 0 has {dim}",
                rows[bad].len()
            )));
        }
        Ok(TokenMatrix {
            dim,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn push_row(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.dim {
            return Err(Error::invalid(format!(
                "token row has length {} but matrix dimension is {}",
                row.len(),
                self.dim
            )));
        }
        self.data.extend_from_slice(row);
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim.max(1))
    }

    /// Component-wise mean of the rows; zeros for an empty matrix.
    pub fn mean_row(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.dim];
        let n = self.n_rows();
        if n == 0 {
            return mean;
        }
        for row in self.rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        mean
    }
}

pub fn eoe(token_embeddings: &TokenMatrix) -> Result<f64> {
    let n = token_embeddings.n_rows();
    if n == 0 {
        return Err(Error::invalid("EOE needs at least one token"));
    }
    if token_embeddings.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("token embeddings contain non-finite values"));
    }
    if n == 1 {
        return Ok(0.0);
    }
    let norms: Vec<f64> = token_embeddings
        .rows()
        .map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    let total: f64 = norms.iter().sum();
    if total == 0.0 {
        return Ok(0.0);
    }
    let entropy: f64 = norms
        .iter()
        .map(|w| w / total)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum();
    Ok((entropy / (n as f64).ln()).clamp(0.0, 1.0))
}

pub fn dss(tokens: &TokenSequence, store: &LexiconStore) -> Result<f64> {
    let n = tokens.len();
    if n == 0 {
        return Err(Error::invalid("DSS needs at least one token"));
    }
    let total: usize = store.overlap_counts(tokens.tokens()).into_iter().sum();
    // (1/m) Σ c_i / n, evaluated as one rounding of an exact integer ratio so
    // equal rationals always compare equal.
    Ok(total as f64 / (store.len() * n) as f64)
}

/// Index (store order) and id of the domain with the most overlapping tokens.
pub fn dominant_domain<'s>(tokens: &TokenSequence, store: &'s LexiconStore) -> (usize, &'s str) {
    let counts = store.overlap_counts(tokens.tokens());
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    (best, store.domains()[best].id())
}

pub fn cosine_slices(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "dimension mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}

pub fn cosine(a: &Embedding, b: &Embedding) -> Result<f64> {
    cosine_slices(a.as_slice(), b.as_slice())
}

pub fn idd<'a, I>(e: &Embedding, domain: &str, buffer_view: I) -> Result<f64>
where
    I: IntoIterator<Item = (&'a Embedding, &'a str)>,
{
    let mut sum = 0.0;
    let mut peers = 0usize;
    for (other, other_domain) in buffer_view {
        if other_domain != domain {
            continue;
        }
        sum += 1.0 - cosine(e, other)?;
        peers += 1;
    }
    if peers == 0 {
        return Ok(IDD_NO_PEERS);
    }
    Ok((sum / peers as f64).clamp(0.0, 2.0))
}

/// Scores one dialogue set against a snapshot of the buffer.
///
/// When the provider supplies only a pooled vector, EOE is reported as 0.
pub fn score_dialogue<'a, I>(
    dialogue: &DialogueSet,
    provider: &dyn EmbeddingProvider,
    store: &LexiconStore,
    buffer_view: I,
) -> Result<(QualityScores, Embedding)>
where
    I: IntoIterator<Item = (&'a Embedding, &'a str)>,
{
    let wrap = |source: Error| Error::Scoring {
        id: dialogue.id.clone(),
        source: Box::new(source),
    };
    let text = dialogue.scoring_text();
    let tokens = tokenize(&text);
    let out = provider
        .embed(&EmbedRequest {
            id: &dialogue.id,
            text: &text,
            tokens: &tokens,
        })
        .map_err(wrap)?;
    if out.pooled.dim() != provider.dim() {
        return Err(wrap(Error::InvalidResponse(format!(
            "pooled vector has dimension {} but provider `{}` declares {}",
            out.pooled.dim(),
            provider.name(),
            provider.dim()
        ))));
    }

    let eoe = match &out.token_vectors {
        Some(m) => eoe(m).map_err(wrap)?,
        None => {
            log::warn!(
                "no per-token embeddings for `{}`; EOE set to 0",
                dialogue.id
            );
            0.0
        }
    };
    let dss = dss(&tokens, store).map_err(wrap)?;
    let (_, domain) = dominant_domain(&tokens, store);
    let idd = idd(&out.pooled, domain, buffer_view).map_err(wrap)?;
    Ok((
        QualityScores {
            eoe,
            dss,
            idd,
            dominant_domain: domain.to_string(),
        },
        out.pooled,
    ))
}
