use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::Generator;
use crate::error::Result;

const SYNONYMS: &[(&str, &str)] = &[
    ("what", "which"),
    ("how", "in what way"),
    ("why", "for what reason"),
    ("is", "remains"),
    ("are", "happen to be"),
    ("can", "could"),
    ("should", "ought to"),
    ("take", "consume"),
    ("help", "assist"),
    ("pain", "ache"),
    ("doctor", "physician"),
    ("medicine", "medication"),
    ("feel", "sense"),
    ("good", "fine"),
    ("bad", "poor"),
    ("big", "large"),
    ("small", "little"),
    ("use", "employ"),
    ("need", "require"),
    ("get", "obtain"),
];

const FILLERS: &[&str] = &[
    "perhaps", "kindly", "notably", "basically", "truly", "indeed", "somewhat", "certainly",
    "really", "overall", "typically", "generally",
];

/// Deterministic word-substitution paraphraser. Each word of the question is
/// replaced with probability `0.5 + 0.5·min(τ, 1)`, by a synonym when one is
/// known and by a filler word otherwise. Output is wrapped in `[ ]`.
#[derive(Debug, Clone)]
pub struct MockParaphraser {
    seed: u64,
    template: String,
}

impl MockParaphraser {
    pub fn new(seed: u64, template: impl Into<String>) -> Self {
        MockParaphraser {
            seed,
            template: template.into(),
        }
    }
}

impl Generator for MockParaphraser {
    fn name(&self) -> &str {
        "mock"
    }

    fn is_deterministic(&self) -> bool {
        true
    }

    fn generate(&self, prompt: &str, temperature: f64, sample: u32) -> Result<String> {
        let question = prompt.strip_prefix(self.template.as_str()).unwrap_or(prompt);
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update(sample.to_le_bytes());
        h.update(temperature.to_le_bytes());
        h.update(question.as_bytes());
        let mut rng = ChaCha8Rng::from_seed(h.finalize().into());
        let p = 0.5 + 0.5 * temperature.clamp(0.0, 1.0);

        let words: Vec<String> = question
            .split_whitespace()
            .map(|w| {
                if !rng.gen_bool(p) {
                    return w.to_string();
                }
                let key = w
                    .trim_matches(|c: char| !c.is_alphanumeric())
                    .to_lowercase();
                match SYNONYMS.iter().find(|(k, _)| *k == key) {
                    Some((_, syn)) => syn.to_string(),
                    None => FILLERS.choose(&mut rng).unwrap().to_string(),
                }
            })
            .collect();
        Ok(format!("[{}]", words.join(" ")))
    }
}
