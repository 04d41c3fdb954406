use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitSummary {
    pub stream_path: PathBuf,
    pub eval_path: PathBuf,
    pub stream_count: usize,
    pub eval_count: usize,
}

#[derive(Deserialize)]
struct IdOnly {
    id: String,
}

/// Position of `id` in [0, 1), fixed by `seed`.
fn unit_hash(seed: u64, id: &str) -> f64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(id.as_bytes());
    let digest = h.finalize();
    let word = u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"));
    (word >> 11) as f64 / (1u64 << 53) as f64
}

/// Splits a dialogue JSONL file into `<stem>.stream.jsonl` (about `fraction`
/// of the records) and `<stem>.eval.jsonl`, chosen per id by a seeded hash.
/// Lines are copied verbatim and keep their original order.
pub fn split_dataset(dataset: &Path, fraction: f64, seed: u64, out_dir: &Path) -> Result<SplitSummary> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::Config(format!("fraction {fraction} outside [0, 1]")));
    }
    let stem = dataset
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("dataset");
    std::fs::create_dir_all(out_dir)?;
    let stream_path = out_dir.join(format!("{stem}.stream.jsonl"));
    let eval_path = out_dir.join(format!("{stem}.eval.jsonl"));

    let input = File::open(dataset)
        .map_err(|e| Error::Config(format!("cannot open {}: {e}", dataset.display())))?;
    let mut stream = BufWriter::new(File::create(&stream_path)?);
    let mut eval = BufWriter::new(File::create(&eval_path)?);
    let (mut n_stream, mut n_eval) = (0, 0);
    for (i, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: IdOnly = serde_json::from_str(&line).map_err(|e| Error::Dataset {
            path: dataset.to_path_buf(),
            line: i + 1,
            msg: e.to_string(),
        })?;
        if unit_hash(seed, &rec.id) < fraction {
            writeln!(stream, "{line}")?;
            n_stream += 1;
        } else {
            writeln!(eval, "{line}")?;
            n_eval += 1;
        }
    }
    stream.flush()?;
    eval.flush()?;
    Ok(SplitSummary {
        stream_path,
        eval_path,
        stream_count: n_stream,
        eval_count: n_eval,
    })
}
