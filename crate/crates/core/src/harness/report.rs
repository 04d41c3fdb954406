use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::lexicon::LexiconStore;
use crate::metrics::idd;
use crate::types::BufferEntry;

/// Running decision counts. `admitted_empty + replaced + rejected == seen`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub seen: usize,
    pub admitted_empty: usize,
    pub replaced: usize,
    pub rejected: usize,
    /// Rejections caused by an entry not fitting in a bin.
    pub oversize: usize,
    pub annotated: usize,
}

/// Quality summary of the buffer contents at one point in time.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BufferStats {
    pub occupied: usize,
    pub mean_eoe: f64,
    pub mean_dss: f64,
    /// Mean IDD of each entry against the rest of the current buffer.
    pub mean_idd: f64,
    /// Distinct dominant domains held, divided by the number of domains.
    pub domain_coverage: f64,
    /// `(mean_eoe + mean_dss + mean_idd / 2) / 3`, in [0, 1].
    pub composite: f64,
}

impl BufferStats {
    pub fn compute(entries: &[BufferEntry], store: &LexiconStore) -> Self {
        let n = entries.len();
        if n == 0 {
            return BufferStats::default();
        }
        let mean = |f: &dyn Fn(&BufferEntry) -> f64| entries.iter().map(f).sum::<f64>() / n as f64;
        let mean_eoe = mean(&|e| e.scores.eoe);
        let mean_dss = mean(&|e| e.scores.dss);
        let mean_idd = (0..n)
            .map(|i| {
                let others = entries
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, o)| o.view());
                idd(&entries[i].embedding, entries[i].domain(), others).unwrap_or(0.0)
            })
            .sum::<f64>()
            / n as f64;
        let domains: HashSet<&str> = entries.iter().map(BufferEntry::domain).collect();
        BufferStats {
            occupied: n,
            mean_eoe,
            mean_dss,
            mean_idd,
            domain_coverage: domains.len() as f64 / store.len() as f64,
            composite: (mean_eoe + mean_dss + mean_idd / 2.0) / 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    /// 1-based event number; the batch file is `batch_<event>.jsonl`.
    pub event: usize,
    pub seen_count: usize,
    pub batch_file: String,
    pub batch_size: usize,
    pub originals: usize,
    pub synthesis_kept: usize,
    pub synthesis_discarded: usize,
    pub generator_unavailable: bool,
    pub counts: Counters,
    pub buffer: BufferStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub policy: String,
    pub seed: u64,
    pub bins: usize,
    pub bin_size_bytes: usize,
    pub finetune_interval: usize,
    pub events: Vec<EventRecord>,
    pub final_counts: Counters,
    pub final_buffer: BufferStats,
}
