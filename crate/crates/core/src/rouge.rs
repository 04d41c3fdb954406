//! ROUGE-1 unigram F1.

use std::collections::HashMap;

use crate::metrics::tokenize;

/// Unigram-overlap F1 between `candidate` and `reference`, tokenized with
/// [`tokenize`]. Overlap is clipped per unigram type. Two empty texts score
/// 1.0; an empty text against a non-empty one scores 0.0.
pub fn rouge1(candidate: &str, reference: &str) -> f64 {
    let cand = tokenize(candidate);
    let refr = tokenize(reference);
    if cand.is_empty() && refr.is_empty() {
        return 1.0;
    }
    if cand.is_empty() || refr.is_empty() {
        return 0.0;
    }

    let mut ref_counts: HashMap<&str, usize> = HashMap::new();
    for t in refr.tokens() {
        *ref_counts.entry(t).or_default() += 1;
    }
    let mut overlap = 0usize;
    for t in cand.tokens() {
        if let Some(c) = ref_counts.get_mut(t.as_str()) {
            if *c > 0 {
                *c -= 1;
                overlap += 1;
            }
        }
    }
    if overlap == 0 {
        return 0.0;
    }
    let p = overlap as f64 / cand.len() as f64;
    let r = overlap as f64 / refr.len() as f64;
    2.0 * p * r / (p + r)
}
