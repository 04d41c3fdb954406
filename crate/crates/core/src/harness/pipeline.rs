use std::fs;
use std::io::BufWriter;
use std::path::Path;
use std::sync::Arc;

use super::report::{BufferStats, Counters, EventRecord, RunReport};
use super::{annotate, emit_training_file, load_dialogues, load_oracle, Oracle, RunConfig};
use crate::buffer::{Buffer, Decision, Placement, PolicyRegistry};
use crate::embeddings::{EmbeddingProvider, ProviderRegistry};
use crate::error::{Error, Result};
use crate::lexicon::{load_lexicons, LexiconStore};
use crate::metrics::score_dialogue;
use crate::synthesis::{synthesize_batch, Generator, GeneratorRegistry, SynthesisConfig, SynthesisOutcome};
use crate::types::{BufferEntry, DialogueSet, Origin, TrainingExample};

/// Name-keyed factories for every pluggable component of a run.
#[derive(Default)]
pub struct Registries {
    pub providers: ProviderRegistry,
    pub generators: GeneratorRegistry,
    pub policies: PolicyRegistry,
}

/// Everything a run reads, loaded once and shareable between runs.
#[derive(Clone)]
pub struct Inputs {
    pub store: Arc<LexiconStore>,
    pub dialogues: Arc<Vec<DialogueSet>>,
    pub oracle: Arc<Oracle>,
    pub provider: Arc<dyn EmbeddingProvider>,
    pub generator: Option<Arc<dyn Generator>>,
}

impl Inputs {
    pub fn load(cfg: &RunConfig, registries: &Registries) -> Result<Self> {
        cfg.validate()?;
        let store = load_lexicons(&cfg.lexicon)?;
        let provider = registries.providers.build(&cfg.provider)?;
        let generator = cfg
            .generator
            .as_ref()
            .map(|g| registries.generators.build(g, &cfg.synthesis))
            .transpose()?;
        let oracle = cfg.oracle.as_ref().map(load_oracle).transpose()?.unwrap_or_default();
        let dialogues = load_dialogues(&cfg.dataset)?;
        Ok(Inputs {
            store: Arc::new(store),
            dialogues: Arc::new(dialogues),
            oracle: Arc::new(oracle),
            provider,
            generator,
        })
    }
}

/// One streaming selection run: score, decide, annotate, place.
pub struct Pipeline {
    store: Arc<LexiconStore>,
    provider: Arc<dyn EmbeddingProvider>,
    generator: Option<Arc<dyn Generator>>,
    oracle: Arc<Oracle>,
    buffer: Buffer,
    synthesis: SynthesisConfig,
    rescore_on_annotation: bool,
    max_tokens_per_side: usize,
    counts: Counters,
}

impl Pipeline {
    pub fn new(cfg: &RunConfig, inputs: &Inputs, policies: &PolicyRegistry) -> Result<Self> {
        cfg.validate()?;
        let buffer = Buffer::new(cfg.buffer_config(), policies.build(&cfg.policy)?)?;
        Ok(Pipeline {
            store: Arc::clone(&inputs.store),
            provider: Arc::clone(&inputs.provider),
            generator: inputs.generator.clone(),
            oracle: Arc::clone(&inputs.oracle),
            buffer,
            synthesis: cfg.synthesis.clone(),
            rescore_on_annotation: cfg.rescore_on_annotation,
            max_tokens_per_side: cfg.max_tokens_per_side,
            counts: Counters::default(),
        })
    }

    pub fn buffer(&self) -> &Buffer {
        &self.buffer
    }

    pub fn counts(&self) -> Counters {
        self.counts
    }

    fn score(&self, dialogue: DialogueSet, arrival_index: u64) -> Result<BufferEntry> {
        let (scores, embedding) = score_dialogue(
            &dialogue,
            self.provider.as_ref(),
            &self.store,
            self.buffer.view(),
        )?;
        Ok(BufferEntry {
            dialogue,
            embedding,
            scores,
            arrival_index,
        })
    }

    /// Runs one arrival through the buffer. Admission is decided on the
    /// unannotated scores; an accepted set is then annotated and, if
    /// configured, rescored before it is stored.
    pub fn process(&mut self, dialogue: &DialogueSet) -> Result<Decision> {
        let arrival = self.counts.seen as u64;
        self.counts.seen += 1;
        let entry = self.score(dialogue.truncated(self.max_tokens_per_side), arrival)?;

        let placement = match self.buffer.decide(&entry) {
            Ok(p) => p,
            Err(Error::InvalidInput(msg)) => {
                log::warn!("skipping `{}`: {msg}", entry.id());
                self.counts.rejected += 1;
                self.counts.oversize += 1;
                return Ok(Decision::Rejected);
            }
            Err(e) => return Err(e),
        };
        if placement == Placement::Reject {
            self.counts.rejected += 1;
            return Ok(Decision::Rejected);
        }

        let annotated = annotate(&entry.dialogue, &self.oracle);
        let to_store = if !annotated.annotated {
            entry
        } else {
            self.counts.annotated += 1;
            let annotated = annotated.truncated(self.max_tokens_per_side);
            let updated = if self.rescore_on_annotation {
                self.score(annotated, arrival)?
            } else {
                BufferEntry {
                    dialogue: annotated,
                    ..entry.clone()
                }
            };
            if updated.byte_size() > self.buffer.config().bin_size_bytes {
                log::warn!("annotated `{}` does not fit a bin; storing it unannotated", entry.id());
                entry
            } else {
                updated
            }
        };
        let decision = self.buffer.commit(placement, to_store)?;
        match decision {
            Decision::AdmittedIntoEmptyBin { .. } => self.counts.admitted_empty += 1,
            Decision::Replaced { .. } => self.counts.replaced += 1,
            Decision::Rejected => self.counts.rejected += 1,
        }
        Ok(decision)
    }

    /// Builds the training batch from the current buffer. The buffer itself
    /// is left as is.
    pub fn build_batch(&self) -> SynthesisOutcome {
        let snapshot = self.buffer.snapshot();
        match &self.generator {
            Some(g) => synthesize_batch(&snapshot, g.as_ref(), &self.synthesis),
            None => {
                let mut ordered = snapshot;
                ordered.sort_by_key(|e| e.arrival_index);
                SynthesisOutcome {
                    examples: ordered
                        .into_iter()
                        .map(|e| TrainingExample {
                            input: e.dialogue.question,
                            output: e.dialogue.response,
                            origin: Origin::Original,
                            parent_id: e.dialogue.id,
                        })
                        .collect(),
                    ..SynthesisOutcome::default()
                }
            }
        }
    }

    pub fn stats(&self) -> BufferStats {
        BufferStats::compute(self.buffer.entries(), &self.store)
    }
}

/// Runs `cfg` against already-loaded inputs. Batch files, `report.json` and
/// the final `buffer.jsonl` go to `cfg.out_dir`.
pub fn run_prepared(cfg: &RunConfig, inputs: &Inputs, policies: &PolicyRegistry) -> Result<RunReport> {
    let mut pipeline = Pipeline::new(cfg, inputs, policies)?;
    fs::create_dir_all(&cfg.out_dir)?;
    let mut events = Vec::new();

    for dialogue in inputs.dialogues.iter() {
        pipeline.process(dialogue)?;
        let seen = pipeline.counts().seen;
        if seen % cfg.finetune_interval != 0 {
            continue;
        }
        let event = events.len() + 1;
        let outcome = pipeline.build_batch();
        let batch_file = format!("batch_{event}.jsonl");
        emit_training_file(&outcome.examples, cfg.out_dir.join(&batch_file))?;
        events.push(EventRecord {
            event,
            seen_count: seen,
            batch_file,
            batch_size: outcome.examples.len(),
            originals: pipeline.buffer().len(),
            synthesis_kept: outcome.kept,
            synthesis_discarded: outcome.discarded,
            generator_unavailable: outcome.unavailable.is_some(),
            counts: pipeline.counts(),
            buffer: pipeline.stats(),
        });
        log::info!(
            "event {event}: seen {seen}, batch {} ({} kept, {} discarded)",
            outcome.examples.len(),
            outcome.kept,
            outcome.discarded
        );
    }

    let report = RunReport {
        policy: pipeline.buffer().policy_name().to_string(),
        seed: cfg.seed,
        bins: cfg.bins,
        bin_size_bytes: cfg.bin_size_bytes,
        finetune_interval: cfg.finetune_interval,
        events,
        final_counts: pipeline.counts(),
        final_buffer: pipeline.stats(),
    };
    write_json(&cfg.out_dir.join("report.json"), &report)?;
    let dump = BufWriter::new(fs::File::create(cfg.out_dir.join("buffer.jsonl"))?);
    pipeline.buffer().dump_jsonl(dump)?;
    Ok(report)
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn run_stream_with(cfg: &RunConfig, registries: &Registries) -> Result<RunReport> {
    let inputs = Inputs::load(cfg, registries)?;
    run_prepared(cfg, &inputs, &registries.policies)
}

/// Replays the dataset in file order with the built-in components.
pub fn run_stream(cfg: &RunConfig) -> Result<RunReport> {
    run_stream_with(cfg, &Registries::default())
}
