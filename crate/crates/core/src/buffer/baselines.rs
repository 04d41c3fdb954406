use rand::{Rng, RngCore};

use super::policy::ReplacementPolicy;
use crate::types::BufferEntry;

/// Every arrival is admitted over a uniformly chosen bin.
#[derive(Debug, Clone, Copy, Default)]
pub struct RandomReplace;

impl ReplacementPolicy for RandomReplace {
    fn name(&self) -> &str {
        "random_replace"
    }

    fn select_victim(
        &mut self,
        bins: &[BufferEntry],
        _candidate: &BufferEntry,
        rng: &mut dyn RngCore,
    ) -> Option<usize> {
        Some(rng.gen_range(0..bins.len()))
    }
}

/// Every arrival overwrites the oldest entry.
#[derive(Debug, Clone, Copy, Default)]
pub struct FifoReplace;

impl ReplacementPolicy for FifoReplace {
    fn name(&self) -> &str {
        "fifo_replace"
    }

    fn select_victim(
        &mut self,
        bins: &[BufferEntry],
        _candidate: &BufferEntry,
        _rng: &mut dyn RngCore,
    ) -> Option<usize> {
        bins.iter()
            .enumerate()
            .min_by_key(|(_, e)| e.arrival_index)
            .map(|(i, _)| i)
    }
}
