//! Stream replay simulator: scoring, selection, simulated annotation and
//! periodic batch emission, plus policy comparison and dataset splitting.

mod compare;
mod config;
mod pipeline;
mod report;
mod split;

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::Deserialize;

pub use self::compare::{compare_policies, CellResult, Comparison, PolicySummary, Summary};
pub use self::config::{
    RunConfig, BIN_SWEEP, DEFAULT_FINETUNE_INTERVAL, DEFAULT_MAX_TOKENS_PER_SIDE, EMBED_URL_ENV,
    GENERATOR_URL_ENV,
};
pub use self::pipeline::{run_prepared, run_stream, run_stream_with, Inputs, Pipeline, Registries};
pub use self::report::{BufferStats, Counters, EventRecord, RunReport};
pub use self::split::{split_dataset, SplitSummary};
use crate::error::{Error, Result};
use crate::types::{DialogueSet, TrainingExample};

/// Preferred responses keyed by dialogue id.
pub type Oracle = HashMap<String, String>;

/// Replaces the response with the oracle's answer when one exists.
pub fn annotate(dialogue: &DialogueSet, oracle: &Oracle) -> DialogueSet {
    match oracle.get(&dialogue.id) {
        Some(answer) => DialogueSet {
            response: answer.clone(),
            annotated: true,
            ..dialogue.clone()
        },
        None => dialogue.clone(),
    }
}

#[derive(Deserialize)]
struct DatasetLine {
    id: String,
    question: String,
    #[serde(default)]
    response: String,
}

fn for_each_line(
    path: &Path,
    mut f: impl FnMut(usize, &str) -> Result<()>,
) -> Result<()> {
    let file = File::open(path)
        .map_err(|e| Error::Config(format!("cannot open {}: {e}", path.display())))?;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::Dataset {
            path: path.to_path_buf(),
            line: i + 1,
            msg: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        f(i + 1, &line)?;
    }
    Ok(())
}

/// Reads a dialogue JSONL file in order. Malformed lines, empty questions
/// and repeated ids are reported with their line number.
pub fn load_dialogues(path: impl AsRef<Path>) -> Result<Vec<DialogueSet>> {
    let path = path.as_ref();
    let mut out = Vec::new();
    let mut ids = HashMap::new();
    for_each_line(path, |line_no, line| {
        let err = |msg: String| Error::Dataset {
            path: path.to_path_buf(),
            line: line_no,
            msg,
        };
        let rec: DatasetLine = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        let set = DialogueSet::new(rec.id, rec.question, rec.response)
            .map_err(|e| err(e.to_string()))?;
        if let Some(first) = ids.insert(set.id.clone(), line_no) {
            return Err(err(format!("id `{}` already used on line {first}", set.id)));
        }
        out.push(set);
        Ok(())
    })?;
    Ok(out)
}

#[derive(Deserialize)]
struct OracleLine {
    id: String,
    response: String,
}

pub fn load_oracle(path: impl AsRef<Path>) -> Result<Oracle> {
    let path = path.as_ref();
    let mut out = Oracle::new();
    for_each_line(path, |line_no, line| {
        let rec: OracleLine = serde_json::from_str(line).map_err(|e| Error::Dataset {
            path: path.to_path_buf(),
            line: line_no,
            msg: e.to_string(),
        })?;
        out.insert(rec.id, rec.response);
        Ok(())
    })?;
    Ok(out)
}

/// Writes one `{"input", "output", "origin", "parent_id"}` object per line,
/// in the given order.
pub fn emit_training_file(examples: &[TrainingExample], path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path.as_ref())?);
    for ex in examples {
        serde_json::to_writer(&mut out, ex)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}
