//! Value types shared across the selection pipeline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::tokenize;

/// One question/response pair, the atomic unit of selection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogueSet {
    pub id: String,
    pub question: String,
    pub response: String,
    /// Set once the response has been replaced by a user-preferred answer.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub annotated: bool,
}

impl DialogueSet {
    pub fn new(
        id: impl Into<String>,
        question: impl Into<String>,
        response: impl Into<String>,
    ) -> Result<Self> {
        let set = DialogueSet {
            id: id.into(),
            question: question.into(),
            response: response.into(),
            annotated: false,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        if tokenize(&self.question).is_empty() {
            return Err(Error::invalid(format!(
                "dialogue `{}` has an empty question",
                self.id
            )));
        }
        Ok(())
    }

    /// Text the quality metrics are computed over: question and response
    /// joined by a single space.
    pub fn scoring_text(&self) -> String {
        format!("{} {}", self.question, self.response)
    }

    /// Caps each side at `max_words` whitespace-separated words.
    pub fn truncated(&self, max_words: usize) -> DialogueSet {
        DialogueSet {
            id: self.id.clone(),
            question: truncate_words(&self.question, max_words),
            response: truncate_words(&self.response, max_words),
            annotated: self.annotated,
        }
    }
}

/// Keeps the first `max_words` words of `text`. Text already within the
/// limit is returned unchanged; otherwise the kept words are re-joined with
/// single spaces.
pub fn truncate_words(text: &str, max_words: usize) -> String {
    if text.split_whitespace().nth(max_words).is_none() {
        return text.to_string();
    }
    text.split_whitespace()
        .take(max_words)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Sequence-level embedding vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Embedding(Vec<f64>);

impl Embedding {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("embedding dimension must be positive"));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "embedding entry {pos} is not finite"
            )));
        }
        Ok(Embedding(values))
    }

    pub fn zeros(dim: usize) -> Self {
        Embedding(vec![0.0; dim.max(1)])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl TryFrom<Vec<f64>> for Embedding {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Embedding::new(values)
    }
}

impl From<Embedding> for Vec<f64> {
    fn from(e: Embedding) -> Self {
        e.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityScores {
    pub eoe: f64,
    pub dss: f64,
    pub idd: f64,
    pub dominant_domain: String,
}

impl QualityScores {
    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, v: f64, hi: f64| {
            if (0.0..=hi).contains(&v) {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} = {v} outside [0, {hi}]")))
            }
        };
        check("eoe", self.eoe, 1.0)?;
        check("dss", self.dss, 1.0)?;
        check("idd", self.idd, 2.0)
    }
}

/// Fixed part of a bin record: four u32 length prefixes (id, question,
/// response, domain), the annotated flag, three f32 scores, the u64 arrival
/// index and the u32 embedding dimension.
pub const BIN_RECORD_OVERHEAD: usize = 4 * 4 + 1 + 3 * 4 + 8 + 4;

/// Bytes per stored embedding component (f32 on device).
pub const BIN_BYTES_PER_COMPONENT: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct BufferEntry {
    pub dialogue: DialogueSet,
    pub embedding: Embedding,
    pub scores: QualityScores,
    pub arrival_index: u64,
}

impl BufferEntry {
    /// Size of this entry in the on-device bin layout: length-prefixed UTF-8
    /// strings, f32 scores and an f32 embedding.
    pub fn byte_size(&self) -> usize {
        BIN_RECORD_OVERHEAD
            + self.dialogue.id.len()
            + self.dialogue.question.len()
            + self.dialogue.response.len()
            + self.scores.dominant_domain.len()
            + BIN_BYTES_PER_COMPONENT * self.embedding.dim()
    }

    pub fn id(&self) -> &str {
        &self.dialogue.id
    }

    pub fn domain(&self) -> &str {
        &self.scores.dominant_domain
    }

    /// The (embedding, domain) pair used for in-domain dissimilarity queries.
    pub fn view(&self) -> (&Embedding, &str) {
        (&self.embedding, &self.scores.dominant_domain)
    }
}

/// Flat JSONL form of a [`BufferEntry`], used for buffer state dumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BufferRecord {
    pub id: String,
    pub question: String,
    pub response: String,
    pub domain: String,
    pub eoe: f64,
    pub dss: f64,
    pub idd: f64,
    pub arrival_index: u64,
    pub embedding: Vec<f64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub annotated: bool,
}

impl From<&BufferEntry> for BufferRecord {
    fn from(e: &BufferEntry) -> Self {
        BufferRecord {
            id: e.dialogue.id.clone(),
            question: e.dialogue.question.clone(),
            response: e.dialogue.response.clone(),
            domain: e.scores.dominant_domain.clone(),
            eoe: e.scores.eoe,
            dss: e.scores.dss,
            idd: e.scores.idd,
            arrival_index: e.arrival_index,
            embedding: e.embedding.as_slice().to_vec(),
            annotated: e.dialogue.annotated,
        }
    }
}

impl TryFrom<BufferRecord> for BufferEntry {
    type Error = Error;

    fn try_from(r: BufferRecord) -> Result<Self> {
        let scores = QualityScores {
            eoe: r.eoe,
            dss: r.dss,
            idd: r.idd,
            dominant_domain: r.domain,
        };
        scores.validate()?;
        Ok(BufferEntry {
            dialogue: DialogueSet {
                id: r.id,
                question: r.question,
                response: r.response,
                annotated: r.annotated,
            },
            embedding: Embedding::new(r.embedding)?,
            scores,
            arrival_index: r.arrival_index,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Original,
    Synthesized,
}

/// One instruction-tuning pair written to a training batch file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub input: String,
    pub output: String,
    pub origin: Origin,
    pub parent_id: String,
}
