//! Fixed-capacity, bin-structured selection buffer.
//!
//! Bins are filled in index order while any is empty; after that each
//! arrival goes through the configured [`ReplacementPolicy`]. A bin is never
//! emptied once filled, so the occupied bins are always `0..len`.

mod baselines;
mod dominance;
mod kcenter;
mod policy;

use std::io::{BufRead, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use self::baselines::{FifoReplace, RandomReplace};
pub use self::dominance::{DominancePolicy, MetricMask};
pub use self::kcenter::{covering_radius, euclidean, farthest_first, KCenterPolicy};
pub use self::policy::{PolicyFactory, PolicyId, PolicyRegistry, ReplacementPolicy};
use crate::error::{Error, Result};
use crate::metrics::idd;
use crate::types::{BufferEntry, BufferRecord, Embedding};

/// 22 KiB: one dialogue set of up to 1024 tokens plus a 4096-wide f32
/// embedding.
pub const DEFAULT_BIN_SIZE: usize = 22 * 1024;

pub const DEFAULT_BINS: usize = 128;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BufferConfig {
    pub capacity: usize,
    pub bin_size_bytes: usize,
    pub seed: u64,
    /// Refresh every incumbent's IDD against the current buffer before each
    /// replacement decision. Off by default: scores stay frozen at admission.
    pub recompute_idd: bool,
}

impl BufferConfig {
    pub fn new(capacity: usize) -> Self {
        BufferConfig {
            capacity,
            ..Self::default()
        }
    }

    /// Total footprint in bytes.
    pub fn total_bytes(&self) -> usize {
        self.capacity * self.bin_size_bytes
    }
}

impl Default for BufferConfig {
    fn default() -> Self {
        BufferConfig {
            capacity: DEFAULT_BINS,
            bin_size_bytes: DEFAULT_BIN_SIZE,
            seed: 0,
            recompute_idd: false,
        }
    }
}

/// Where an offered entry would go.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placement {
    EmptyBin(usize),
    Replace(usize),
    Reject,
}

impl Placement {
    pub fn is_accepted(self) -> bool {
        !matches!(self, Placement::Reject)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decision {
    AdmittedIntoEmptyBin { bin: usize },
    Replaced { bin: usize, victim_id: String },
    Rejected,
}

impl Decision {
    pub fn is_accepted(&self) -> bool {
        !matches!(self, Decision::Rejected)
    }
}

#[derive(Debug)]
pub struct Buffer {
    config: BufferConfig,
    bins: Vec<BufferEntry>,
    policy: Box<dyn ReplacementPolicy>,
    rng: ChaCha8Rng,
}

impl Buffer {
    pub fn new(config: BufferConfig, policy: Box<dyn ReplacementPolicy>) -> Result<Self> {
        if config.capacity == 0 {
            return Err(Error::Config("buffer needs at least one bin".into()));
        }
        if config.bin_size_bytes == 0 {
            return Err(Error::Config("bin size must be positive".into()));
        }
        Ok(Buffer {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            bins: Vec::with_capacity(config.capacity),
            config,
            policy,
        })
    }

    pub fn with_policy(config: BufferConfig, policy: PolicyId) -> Result<Self> {
        Self::new(config, policy.build())
    }

    pub fn config(&self) -> &BufferConfig {
        &self.config
    }

    pub fn policy_name(&self) -> &str {
        self.policy.name()
    }

    pub fn capacity(&self) -> usize {
        self.config.capacity
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.bins.len() == self.config.capacity
    }

    /// Occupied bins in bin order.
    pub fn entries(&self) -> &[BufferEntry] {
        &self.bins
    }

    /// (embedding, dominant domain) pairs for IDD queries.
    pub fn view(&self) -> impl Iterator<Item = (&Embedding, &str)> {
        self.bins.iter().map(BufferEntry::view)
    }

    /// Owned copy of the occupied bins, in bin order.
    pub fn snapshot(&self) -> Vec<BufferEntry> {
        self.bins.clone()
    }

    fn check_size(&self, entry: &BufferEntry) -> Result<()> {
        let size = entry.byte_size();
        if size > self.config.bin_size_bytes {
            return Err(Error::invalid(format!(
                "entry `{}` needs {size} bytes but bins hold {}",
                entry.id(),
                self.config.bin_size_bytes
            )));
        }
        Ok(())
    }

    fn refresh_idd(&mut self) -> Result<()> {
        let fresh: Vec<f64> = (0..self.bins.len())
            .map(|i| {
                let e = &self.bins[i];
                let others = self
                    .bins
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, o)| o.view());
                idd(&e.embedding, e.domain(), others)
            })
            .collect::<Result<_>>()?;
        for (e, v) in self.bins.iter_mut().zip(fresh) {
            e.scores.idd = v;
        }
        Ok(())
    }

    /// Decides where `candidate` would be placed without storing it. May
    /// advance the buffer's random generator.
    pub fn decide(&mut self, candidate: &BufferEntry) -> Result<Placement> {
        self.check_size(candidate)?;
        if !self.is_full() {
            return Ok(Placement::EmptyBin(self.bins.len()));
        }
        if self.config.recompute_idd {
            self.refresh_idd()?;
        }
        Ok(
            match self.policy.select_victim(&self.bins, candidate, &mut self.rng) {
                Some(bin) => Placement::Replace(bin),
                None => Placement::Reject,
            },
        )
    }

    /// Stores `entry` according to an earlier [`Buffer::decide`]. The entry
    /// may differ from the one decided on (e.g. after annotation).
    pub fn commit(&mut self, placement: Placement, entry: BufferEntry) -> Result<Decision> {
        match placement {
            Placement::Reject => Ok(Decision::Rejected),
            Placement::EmptyBin(bin) => {
                self.check_size(&entry)?;
                if bin != self.bins.len() || self.is_full() {
                    return Err(Error::invalid(format!("bin {bin} is not the next empty bin")));
                }
                self.bins.push(entry);
                Ok(Decision::AdmittedIntoEmptyBin { bin })
            }
            Placement::Replace(bin) => {
                self.check_size(&entry)?;
                let slot = self
                    .bins
                    .get_mut(bin)
                    .ok_or_else(|| Error::invalid(format!("bin {bin} is not occupied")))?;
                let victim = std::mem::replace(slot, entry);
                Ok(Decision::Replaced {
                    bin,
                    victim_id: victim.dialogue.id,
                })
            }
        }
    }

    pub fn offer(&mut self, entry: BufferEntry) -> Result<Decision> {
        let placement = self.decide(&entry)?;
        self.commit(placement, entry)
    }

    /// Writes one JSON object per occupied bin.
    pub fn dump_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for e in &self.bins {
            serde_json::to_writer(&mut out, &BufferRecord::from(e))?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Rebuilds a buffer from a [`Buffer::dump_jsonl`] stream. The random
    /// generator restarts from `config.seed`.
    pub fn load_jsonl<R: BufRead>(
        config: BufferConfig,
        policy: Box<dyn ReplacementPolicy>,
        input: R,
    ) -> Result<Self> {
        let mut buf = Buffer::new(config, policy)?;
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: BufferRecord = serde_json::from_str(&line)?;
            let entry = BufferEntry::try_from(rec)
                .map_err(|e| Error::invalid(format!("buffer dump line {}: {e}", i + 1)))?;
            if buf.is_full() {
                return Err(Error::invalid("buffer dump holds more entries than bins"));
            }
            buf.check_size(&entry)?;
            buf.bins.push(entry);
        }
        Ok(buf)
    }
}
