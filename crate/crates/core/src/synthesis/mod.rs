//! Training-pair synthesis from a buffer snapshot.
//!
//! Each buffered question is sent to a text generator several times with a
//! fixed rewriting prompt. A rewrite is kept only when its ROUGE-1 against
//! the original question stays below the configured threshold; kept rewrites
//! are paired with the entry's (possibly annotated) response.

mod http;
mod mock;

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use self::http::HttpGenerator;
pub use self::mock::MockParaphraser;
use crate::error::{Error, Result};
use crate::http::HttpSettings;
use crate::rouge::rouge1;
use crate::types::{BufferEntry, Origin, TrainingExample};

pub const DEFAULT_PROMPT: &str = "Please refine and generate a text semantically similar to the following text block, no need to answer it, no need to explain, use [ ] to hold your generated response: ";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthesisConfig {
    /// Generations attempted per buffered entry.
    pub scale: usize,
    pub temperature: f64,
    pub rouge_threshold: f64,
    pub prompt_template: String,
    /// Keep rewrites whose ROUGE-1 is at or above the threshold instead.
    pub invert_filter: bool,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        SynthesisConfig {
            scale: 3,
            temperature: 0.5,
            rouge_threshold: 0.5,
            prompt_template: DEFAULT_PROMPT.to_string(),
            invert_filter: false,
        }
    }
}

impl SynthesisConfig {
    pub fn validate(&self) -> Result<()> {
        if self.scale == 0 {
            return Err(Error::Config("synthesis scale must be at least 1".into()));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(Error::Config(format!(
                "synthesis temperature {} must be a non-negative number",
                self.temperature
            )));
        }
        if !(0.0..=1.0).contains(&self.rouge_threshold) {
            return Err(Error::Config(format!(
                "ROUGE threshold {} outside [0, 1]",
                self.rouge_threshold
            )));
        }
        Ok(())
    }

    fn keeps(&self, score: f64) -> bool {
        if self.invert_filter {
            score >= self.rouge_threshold
        } else {
            score < self.rouge_threshold
        }
    }
}

/// Text generator used to produce rewrites.
pub trait Generator: Send + Sync {
    fn name(&self) -> &str;

    /// True when output depends only on (prompt, temperature, sample).
    fn is_deterministic(&self) -> bool;

    /// `sample` numbers the repeated calls for one prompt, starting at 0.
    /// Deterministic generators use it to vary their output; remote ones may
    /// ignore it.
    fn generate(&self, prompt: &str, temperature: f64, sample: u32) -> Result<String>;
}

pub fn build_prompt(question: &str, template: &str) -> String {
    format!("{template}{question}")
}

/// Contents of the first balanced `[...]` span, trimmed; the whole input
/// trimmed when there is none.
pub fn extract_bracketed(raw: &str) -> String {
    let mut depth = 0usize;
    let mut start = None;
    for (i, c) in raw.char_indices() {
        match c {
            '[' => {
                if depth == 0 {
                    start = Some(i + 1);
                }
                depth += 1;
            }
            ']' if depth > 0 => {
                depth -= 1;
                if depth == 0 {
                    if let Some(s) = start {
                        return raw[s..i].trim().to_string();
                    }
                }
            }
            _ => {}
        }
    }
    raw.trim().to_string()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SynthesisOutcome {
    /// Originals and kept rewrites, ordered by parent arrival index, then
    /// original before rewrites, then sample number.
    pub examples: Vec<TrainingExample>,
    pub kept: usize,
    pub discarded: usize,
    pub failed_calls: usize,
    /// Set when every generation call failed; `examples` then holds only the
    /// originals.
    pub unavailable: Option<String>,
}

struct EntryResult {
    examples: Vec<TrainingExample>,
    kept: usize,
    discarded: usize,
    failed: usize,
    last_error: Option<String>,
}

fn synthesize_entry(
    entry: &BufferEntry,
    generator: &dyn Generator,
    cfg: &SynthesisConfig,
) -> EntryResult {
    let question = &entry.dialogue.question;
    let prompt = build_prompt(question, &cfg.prompt_template);
    let mut out = EntryResult {
        examples: vec![TrainingExample {
            input: question.clone(),
            output: entry.dialogue.response.clone(),
            origin: Origin::Original,
            parent_id: entry.dialogue.id.clone(),
        }],
        kept: 0,
        discarded: 0,
        failed: 0,
        last_error: None,
    };
    for sample in 0..cfg.scale as u32 {
        let raw = match generator.generate(&prompt, cfg.temperature, sample) {
            Ok(raw) => raw,
            Err(e) => {
                log::debug!("generation {sample} for `{}` failed: {e}", entry.dialogue.id);
                out.failed += 1;
                out.last_error = Some(e.to_string());
                continue;
            }
        };
        let syn = extract_bracketed(&raw);
        if !syn.is_empty() && cfg.keeps(rouge1(question, &syn)) {
            out.kept += 1;
            out.examples.push(TrainingExample {
                input: syn,
                output: entry.dialogue.response.clone(),
                origin: Origin::Synthesized,
                parent_id: entry.dialogue.id.clone(),
            });
        } else {
            out.discarded += 1;
        }
    }
    out
}

/// Builds the training batch for one fine-tune event. `entries` is left
/// untouched. Failed generations skip only that candidate.
pub fn synthesize_batch(
    entries: &[BufferEntry],
    generator: &dyn Generator,
    cfg: &SynthesisConfig,
) -> SynthesisOutcome {
    let mut ordered: Vec<&BufferEntry> = entries.iter().collect();
    ordered.sort_by_key(|e| e.arrival_index);

    let results: Vec<EntryResult> = ordered
        .par_iter()
        .map(|e| synthesize_entry(e, generator, cfg))
        .collect();

    let mut outcome = SynthesisOutcome::default();
    let mut last_error = None;
    for r in results {
        outcome.examples.extend(r.examples);
        outcome.kept += r.kept;
        outcome.discarded += r.discarded;
        outcome.failed_calls += r.failed;
        last_error = r.last_error.or(last_error);
    }
    let attempted = entries.len() * cfg.scale;
    if attempted > 0 && outcome.failed_calls == attempted {
        let msg = format!(
            "generator `{}` unavailable: {}",
            generator.name(),
            last_error.unwrap_or_default()
        );
        log::warn!("{msg}; batch holds originals only");
        outcome.unavailable = Some(msg);
    }
    outcome
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorSpec {
    pub kind: String,
    pub seed: u64,
    pub url: Option<String>,
    #[serde(flatten)]
    pub http: HttpSettings,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec {
            kind: "mock".into(),
            seed: 0,
            url: None,
            http: HttpSettings::default(),
        }
    }
}

pub type GeneratorFactory = fn(&GeneratorSpec, &SynthesisConfig) -> Result<Arc<dyn Generator>>;

pub struct GeneratorRegistry {
    factories: BTreeMap<String, GeneratorFactory>,
}

impl GeneratorRegistry {
    pub fn empty() -> Self {
        GeneratorRegistry {
            factories: BTreeMap::new(),
        }
    }

    /// Registry holding `mock` and `http`.
    pub fn with_builtins() -> Self {
        let mut reg = Self::empty();
        reg.register("mock", |spec, cfg| {
            Ok(Arc::new(MockParaphraser::new(spec.seed, cfg.prompt_template.clone())))
        });
        reg.register("http", |spec, _| {
            let url = spec
                .url
                .clone()
                .ok_or_else(|| Error::Config("http generator needs `url`".into()))?;
            Ok(Arc::new(HttpGenerator::new(url, spec.http.clone())?))
        });
        reg
    }

    pub fn register(&mut self, name: impl Into<String>, factory: GeneratorFactory) {
        self.factories.insert(name.into(), factory);
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }

    pub fn build(&self, spec: &GeneratorSpec, cfg: &SynthesisConfig) -> Result<Arc<dyn Generator>> {
        let factory = self.factories.get(&spec.kind).ok_or_else(|| {
            Error::Config(format!(
                "unknown generator `{}` (known: {})",
                spec.kind,
                self.names().collect::<Vec<_>>().join(", ")
            ))
        })?;
        factory(spec, cfg)
    }
}

impl Default for GeneratorRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}
