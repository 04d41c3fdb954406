use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::baselines::{FifoReplace, RandomReplace};
use super::dominance::{DominancePolicy, MetricMask};
use super::kcenter::KCenterPolicy;
use crate::error::{Error, Result};
use crate::types::BufferEntry;

/// Chooses which incumbent a newcomer displaces once every bin is occupied.
pub trait ReplacementPolicy: Send + fmt::Debug {
    fn name(&self) -> &str;

    /// Returns the bin index to overwrite, or `None` to reject `candidate`.
    /// `bins` is the full buffer in bin order. Any randomness must come from
    /// `rng`, the buffer's seeded generator.
    fn select_victim(
        &mut self,
        bins: &[BufferEntry],
        candidate: &BufferEntry,
        rng: &mut dyn RngCore,
    ) -> Option<usize>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyId {
    #[default]
    QualityDominance,
    RandomReplace,
    FifoReplace,
    KCenter,
    EoeOnly,
    DssOnly,
    IddOnly,
}

impl PolicyId {
    pub const ALL: [PolicyId; 7] = [
        PolicyId::QualityDominance,
        PolicyId::RandomReplace,
        PolicyId::FifoReplace,
        PolicyId::KCenter,
        PolicyId::EoeOnly,
        PolicyId::DssOnly,
        PolicyId::IddOnly,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyId::QualityDominance => "quality_dominance",
            PolicyId::RandomReplace => "random_replace",
            PolicyId::FifoReplace => "fifo_replace",
            PolicyId::KCenter => "k_center",
            PolicyId::EoeOnly => "eoe_only",
            PolicyId::DssOnly => "dss_only",
            PolicyId::IddOnly => "idd_only",
        }
    }

    pub fn build(self) -> Box<dyn ReplacementPolicy> {
        let name = self.as_str();
        match self {
            PolicyId::QualityDominance => Box::new(DominancePolicy::new(name, MetricMask::ALL)),
            PolicyId::EoeOnly => Box::new(DominancePolicy::new(name, MetricMask::EOE)),
            PolicyId::DssOnly => Box::new(DominancePolicy::new(name, MetricMask::DSS)),
            PolicyId::IddOnly => Box::new(DominancePolicy::new(name, MetricMask::IDD)),
            PolicyId::RandomReplace => Box::new(RandomReplace),
            PolicyId::FifoReplace => Box::new(FifoReplace),
            PolicyId::KCenter => Box::new(KCenterPolicy),
        }
    }
}

impl fmt::Display for PolicyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        PolicyId::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown policy `{s}`")))
    }
}

pub type PolicyFactory = Box<dyn Fn() -> Box<dyn ReplacementPolicy> + Send + Sync>;

/// Name → constructor table for replacement policies.
pub struct PolicyRegistry {
    factories: BTreeMap<String, PolicyFactory>,
}

impl PolicyRegistry {
    pub fn empty() -> Self {
        PolicyRegistry {
            factories: BTreeMap::new(),
        }
    }

    pub fn with_builtins() -> Self {
        let mut reg = Self::empty();
        for id in PolicyId::ALL {
            reg.register(id.as_str(), move || id.build());
        }
        reg
    }

    pub fn register<F>(&mut self, name: impl Into<String>, factory: F)
    where
        F: Fn() -> Box<dyn ReplacementPolicy> + Send + Sync + 'static,
    {
        self.factories.insert(name.into(), Box::new(factory));
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }

    pub fn build(&self, name: &str) -> Result<Box<dyn ReplacementPolicy>> {
        self.factories
            .get(name.trim())
            .map(|f| f())
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown policy `{name}` (known: {})",
                    self.names().collect::<Vec<_>>().join(", ")
                ))
            })
    }
}

impl Default for PolicyRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}
