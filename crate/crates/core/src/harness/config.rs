use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::buffer::{BufferConfig, PolicyId, DEFAULT_BINS, DEFAULT_BIN_SIZE};
use crate::embeddings::ProviderSpec;
use crate::error::{Error, Result};
use crate::synthesis::{GeneratorSpec, SynthesisConfig};

/// Overrides `provider.url` when set.
pub const EMBED_URL_ENV: &str = "DSEL_EMBED_URL";
/// Overrides `generator.url` when set.
pub const GENERATOR_URL_ENV: &str = "DSEL_GENERATOR_URL";

pub const DEFAULT_FINETUNE_INTERVAL: usize = 800;
pub const DEFAULT_MAX_TOKENS_PER_SIDE: usize = 512;

/// Bin counts of the reference buffer-size sweep.
pub const BIN_SWEEP: [usize; 7] = [8, 16, 32, 64, 128, 256, 512];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: PathBuf,
    pub lexicon: PathBuf,
    #[serde(default)]
    pub provider: ProviderSpec,
    /// No generator means batches hold the buffered originals only.
    #[serde(default)]
    pub generator: Option<GeneratorSpec>,
    #[serde(default = "default_policy")]
    pub policy: String,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default = "default_bin_size")]
    pub bin_size_bytes: usize,
    #[serde(default = "default_interval")]
    pub finetune_interval: usize,
    #[serde(default)]
    pub synthesis: SynthesisConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// JSONL of `{"id", "response"}` preferred answers.
    #[serde(default)]
    pub oracle: Option<PathBuf>,
    #[serde(default = "yes")]
    pub rescore_on_annotation: bool,
    #[serde(default)]
    pub recompute_idd: bool,
    #[serde(default = "default_max_tokens")]
    pub max_tokens_per_side: usize,
}

fn default_policy() -> String {
    PolicyId::QualityDominance.as_str().to_string()
}
fn default_bins() -> usize {
    DEFAULT_BINS
}
fn default_bin_size() -> usize {
    DEFAULT_BIN_SIZE
}
fn default_interval() -> usize {
    DEFAULT_FINETUNE_INTERVAL
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_max_tokens() -> usize {
    DEFAULT_MAX_TOKENS_PER_SIDE
}
fn yes() -> bool {
    true
}

impl RunConfig {
    pub fn new(dataset: impl Into<PathBuf>, lexicon: impl Into<PathBuf>) -> Self {
        RunConfig {
            dataset: dataset.into(),
            lexicon: lexicon.into(),
            provider: ProviderSpec::default(),
            generator: None,
            policy: default_policy(),
            bins: DEFAULT_BINS,
            bin_size_bytes: DEFAULT_BIN_SIZE,
            finetune_interval: DEFAULT_FINETUNE_INTERVAL,
            synthesis: SynthesisConfig::default(),
            seed: 0,
            out_dir: default_out_dir(),
            oracle: None,
            rescore_on_annotation: true,
            recompute_idd: false,
            max_tokens_per_side: DEFAULT_MAX_TOKENS_PER_SIDE,
        }
    }

    /// Parses a `.toml` file as TOML and anything else as JSON. Relative
    /// paths inside are resolved against the config file's directory, then
    /// URL environment overrides are applied.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let is_toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
        let mut cfg = if is_toml {
            Self::from_toml_str(&text)
        } else {
            Self::from_json_str(&text)
        }
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if let Some(base) = path.parent() {
            cfg.resolve_paths(base);
        }
        cfg.apply_env();
        Ok(cfg)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.dataset);
        fix(&mut self.lexicon);
        fix(&mut self.out_dir);
        if let Some(p) = self.oracle.as_mut() {
            fix(p);
        }
        if let Some(p) = self.provider.path.as_mut() {
            fix(p);
        }
    }

    pub fn apply_env(&mut self) {
        if let Ok(url) = std::env::var(EMBED_URL_ENV) {
            self.provider.url = Some(url);
        }
        if let (Ok(url), Some(g)) = (std::env::var(GENERATOR_URL_ENV), self.generator.as_mut()) {
            g.url = Some(url);
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.bins == 0 {
            return Err(Error::Config("bins must be positive".into()));
        }
        if self.bin_size_bytes == 0 {
            return Err(Error::Config("bin_size_bytes must be positive".into()));
        }
        if self.finetune_interval == 0 {
            return Err(Error::Config("finetune_interval must be at least 1".into()));
        }
        if self.max_tokens_per_side == 0 {
            return Err(Error::Config("max_tokens_per_side must be positive".into()));
        }
        self.synthesis.validate()
    }

    pub fn buffer_config(&self) -> BufferConfig {
        BufferConfig {
            capacity: self.bins,
            bin_size_bytes: self.bin_size_bytes,
            seed: self.seed,
            recompute_idd: self.recompute_idd,
        }
    }
}
