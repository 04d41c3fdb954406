use rand::{Rng, RngCore};

use super::policy::ReplacementPolicy;
use crate::types::{BufferEntry, QualityScores};

/// Which of (EOE, DSS, IDD) take part in the dominance test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MetricMask {
    pub eoe: bool,
    pub dss: bool,
    pub idd: bool,
}

impl MetricMask {
    pub const ALL: MetricMask = MetricMask { eoe: true, dss: true, idd: true };
    pub const EOE: MetricMask = MetricMask { eoe: true, dss: false, idd: false };
    pub const DSS: MetricMask = MetricMask { eoe: false, dss: true, idd: false };
    pub const IDD: MetricMask = MetricMask { eoe: false, dss: false, idd: true };

    /// True when `new` is strictly higher than `old` on every selected metric.
    pub fn dominates(&self, new: &QualityScores, old: &QualityScores) -> bool {
        (!self.eoe || new.eoe > old.eoe)
            && (!self.dss || new.dss > old.dss)
            && (!self.idd || new.idd > old.idd)
    }
}

/// Evicts an incumbent that the newcomer strictly beats on every metric in
/// the mask. Among several such incumbents one is drawn uniformly with a
/// single `gen_range(0..count)` over them in bin order.
#[derive(Debug, Clone)]
pub struct DominancePolicy {
    name: &'static str,
    mask: MetricMask,
    dominated: Vec<usize>,
}

impl DominancePolicy {
    pub fn new(name: &'static str, mask: MetricMask) -> Self {
        DominancePolicy {
            name,
            mask,
            dominated: Vec::new(),
        }
    }
}

impl ReplacementPolicy for DominancePolicy {
    fn name(&self) -> &str {
        self.name
    }

    fn select_victim(
        &mut self,
        bins: &[BufferEntry],
        candidate: &BufferEntry,
        rng: &mut dyn RngCore,
    ) -> Option<usize> {
        self.dominated.clear();
        self.dominated.extend(
            bins.iter()
                .enumerate()
                .filter(|(_, v)| self.mask.dominates(&candidate.scores, &v.scores))
                .map(|(i, _)| i),
        );
        if self.dominated.is_empty() {
            return None;
        }
        Some(self.dominated[rng.gen_range(0..self.dominated.len())])
    }
}
