//! Per-domain lexicon dictionaries.
//!
//! The on-disk format is a single JSON document:
//!
//! ```json
//! {"domains": [{"id": "medical", "tokens": ["dose", "vial", "arm"]},
//!              {"id": "emotion", "tokens": ["happy"]}]}
//! ```
//!
//! Array order is significant: it is the tie-break precedence when two
//! domains match a token sequence equally well.

use std::collections::HashSet;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

#[derive(Debug, Deserialize)]
struct LexiconFile {
    domains: Vec<DomainRecord>,
}

#[derive(Debug, Deserialize)]
struct DomainRecord {
    id: String,
    tokens: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Lexicon {
    id: String,
    tokens: HashSet<String>,
}

impl Lexicon {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// `token` must already be case-folded.
    pub fn contains(&self, token: &str) -> bool {
        self.tokens.contains(token)
    }
}

/// Immutable collection of domain lexicons, in file order.
#[derive(Debug, Clone)]
pub struct LexiconStore {
    domains: Vec<Lexicon>,
}

impl LexiconStore {
    /// Builds a store from `(domain id, tokens)` pairs. Tokens are case-folded
    /// and deduplicated.
    pub fn new<I, S, T>(domains: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<T>)>,
        S: Into<String>,
        T: AsRef<str>,
    {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for (id, tokens) in domains {
            let id = id.into();
            if !seen.insert(id.clone()) {
                return Err(Error::Config(format!("duplicate lexicon domain `{id}`")));
            }
            let tokens: HashSet<String> = tokens
                .iter()
                .map(|t| t.as_ref().trim().to_lowercase())
                .filter(|t| !t.is_empty())
                .collect();
            if tokens.is_empty() {
                return Err(Error::Config(format!("lexicon domain `{id}` has no tokens")));
            }
            out.push(Lexicon { id, tokens });
        }
        if out.is_empty() {
            return Err(Error::Config("lexicon file defines no domains".into()));
        }
        Ok(LexiconStore { domains: out })
    }

    pub fn from_json_str(text: &str, origin: &Path) -> Result<Self> {
        let file: LexiconFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            line: e.line(),
            column: e.column(),
            msg: e.to_string(),
        })?;
        LexiconStore::new(file.domains.into_iter().map(|d| (d.id, d.tokens)))
    }

    pub fn domains(&self) -> &[Lexicon] {
        &self.domains
    }

    /// Number of domains, `m`.
    pub fn len(&self) -> usize {
        self.domains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domains.is_empty()
    }

    pub fn index_of(&self, domain_id: &str) -> Option<usize> {
        self.domains.iter().position(|d| d.id == domain_id)
    }

    pub fn contains_domain(&self, domain_id: &str) -> bool {
        self.index_of(domain_id).is_some()
    }

    /// Counts occurrences (with multiplicity) of tokens that belong to the
    /// named domain's lexicon. Matching is case-insensitive.
    pub fn overlap_count<S: AsRef<str>>(&self, tokens: &[S], domain_id: &str) -> Result<usize> {
        let idx = self
            .index_of(domain_id)
            .ok_or_else(|| Error::Lookup(format!("unknown lexicon domain `{domain_id}`")))?;
        Ok(count_in(&self.domains[idx], tokens))
    }

    /// Overlap counts for every domain, in store order.
    pub fn overlap_counts<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        self.domains.iter().map(|d| count_in(d, tokens)).collect()
    }
}

fn count_in<S: AsRef<str>>(lexicon: &Lexicon, tokens: &[S]) -> usize {
    tokens
        .iter()
        .filter(|t| {
            let t = t.as_ref();
            if t.chars().any(char::is_uppercase) {
                lexicon.contains(&t.to_lowercase())
            } else {
                lexicon.contains(t)
            }
        })
        .count()
}

pub fn load_lexicons(path: impl AsRef<Path>) -> Result<LexiconStore> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read lexicon {}: {e}", path.display())))?;
    LexiconStore::from_json_str(&text, path)
}
