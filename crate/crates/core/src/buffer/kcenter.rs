//! Greedy k-center (farthest-first traversal) eviction.

use rand::RngCore;

use super::policy::ReplacementPolicy;
use crate::types::BufferEntry;

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Picks `k` centers by farthest-first traversal starting at `start`. Each
/// step takes the point farthest from the chosen set; ties go to the lowest
/// index.
pub fn farthest_first(points: &[&[f64]], k: usize, start: usize) -> Vec<usize> {
    let n = points.len();
    if n == 0 || k == 0 {
        return Vec::new();
    }
    let k = k.min(n);
    let mut centers = Vec::with_capacity(k);
    let mut chosen = vec![false; n];
    let mut dist: Vec<f64> = points.iter().map(|p| euclidean(p, points[start])).collect();
    centers.push(start);
    chosen[start] = true;
    while centers.len() < k {
        let mut best: Option<usize> = None;
        for i in 0..n {
            if chosen[i] {
                continue;
            }
            if best.is_none_or(|b| dist[i] > dist[b]) {
                best = Some(i);
            }
        }
        let next = best.expect("fewer centers than points");
        centers.push(next);
        chosen[next] = true;
        for i in 0..n {
            let d = euclidean(points[i], points[next]);
            if d < dist[i] {
                dist[i] = d;
            }
        }
    }
    centers
}

/// Largest distance from any point to its nearest center.
pub fn covering_radius(points: &[&[f64]], centers: &[usize]) -> f64 {
    points
        .iter()
        .map(|p| {
            centers
                .iter()
                .map(|&c| euclidean(p, points[c]))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Keeps the `K` most spread-out of the `K + 1` embeddings (incumbents plus
/// newcomer); the one left out is evicted. Traversal starts at the oldest
/// incumbent.
#[derive(Debug, Clone, Copy, Default)]
pub struct KCenterPolicy;

impl ReplacementPolicy for KCenterPolicy {
    fn name(&self) -> &str {
        "k_center"
    }

    fn select_victim(
        &mut self,
        bins: &[BufferEntry],
        candidate: &BufferEntry,
        _rng: &mut dyn RngCore,
    ) -> Option<usize> {
        let k = bins.len();
        let points: Vec<&[f64]> = bins
            .iter()
            .chain(std::iter::once(candidate))
            .map(|e| e.embedding.as_slice())
            .collect();
        let start = bins
            .iter()
            .enumerate()
            .min_by_key(|(_, e)| e.arrival_index)
            .map(|(i, _)| i)
            .unwrap_or(0);
        let mut kept = vec![false; k + 1];
        for c in farthest_first(&points, k, start) {
            kept[c] = true;
        }
        let left_out = kept.iter().position(|&s| !s).unwrap_or(k);
        (left_out < k).then_some(left_out)
    }
}
