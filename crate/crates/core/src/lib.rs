//! Streaming selection of user–LLM dialogue sets into a small fixed-capacity
//! buffer, scored by three self-supervised quality metrics, with synthesis
//! of extra training pairs from the selected data.
//!
//! The main pieces:
//!
//! * [`metrics`]: entropy of embedding, domain specific score, dominant
//!   domain and in-domain dissimilarity.
//! * [`buffer`]: the bin-structured buffer and its replacement policies,
//!   selectable by name through [`buffer::PolicyRegistry`].
//! * [`synthesis`]: prompt construction, bracket extraction and the ROUGE-1
//!   sanity filter over a pluggable [`synthesis::Generator`].
//! * [`embeddings`]: pluggable [`embeddings::EmbeddingProvider`]s.
//! * [`harness`]: the replay simulator that ties these together and writes
//!   training batches and reports.

pub mod buffer;
pub mod embeddings;
pub mod error;
pub mod harness;
pub mod http;
pub mod lexicon;
pub mod metrics;
pub mod rouge;
pub mod synthesis;
pub mod types;

pub use error::{Error, Result};
pub use types::{BufferEntry, DialogueSet, Embedding, Origin, QualityScores, TrainingExample};
