//! Statistical fusion of leaves whose label samples are indistinguishable.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::NodeId;

/// Which leaf pairs may be compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MergeCandidateFilter {
    All,
    /// Only leaves whose value ranges abut.
    AdjacentRanges,
}

/// Half-open feature interval `[lo, hi)` covered by a range leaf.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeAnnotation {
    pub lo: f64,
    pub hi: f64,
}

impl RangeAnnotation {
    pub fn abuts(&self, other: &RangeAnnotation) -> bool {
        self.hi == other.lo || other.hi == self.lo
    }

    pub fn fuse(&self, other: &RangeAnnotation) -> RangeAnnotation {
        RangeAnnotation {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }
}

/// A set of leaves that can be compared and fused.
pub trait LeafPool {
    fn sample_count(&self, leaf: NodeId) -> usize;
    /// p-value that the two leaves' labels come from one population.
    fn similarity(&self, a: NodeId, b: NodeId) -> f64;
    fn range(&self, leaf: NodeId) -> Option<RangeAnnotation>;
    /// Fuses two leaves into a new one and returns its id.
    fn merge(&mut self, a: NodeId, b: NodeId) -> Result<NodeId>;
}

const PARALLEL_MIN_CANDIDATES: usize = 64;

fn allowed<P: LeafPool>(pool: &P, filter: MergeCandidateFilter, a: NodeId, b: NodeId) -> bool {
    match filter {
        MergeCandidateFilter::All => true,
        MergeCandidateFilter::AdjacentRanges => match (pool.range(a), pool.range(b)) {
            (Some(x), Some(y)) => x.abuts(&y),
            _ => false,
        },
    }
}

/// Repeated passes of poll-and-merge until a pass no longer shrinks the set.
///
/// Each pass sorts by sample count (then id), polls the smallest leaf and
/// fuses it with the most similar remaining leaf if that p-value exceeds
/// `p_lim`. A fused leaf waits for the next pass. Equal p-values go to the
/// lower id.
pub fn merge_leaves<P: LeafPool + Sync>(
    pool: &mut P,
    leaves: Vec<NodeId>,
    p_lim: f64,
    filter: MergeCandidateFilter,
) -> Result<Vec<NodeId>> {
    if !(p_lim > 0.0 && p_lim < 1.0) {
        return Err(Error::invalid(format!("p_lim must lie in (0, 1), got {p_lim}")));
    }
    if filter == MergeCandidateFilter::AdjacentRanges {
        if let Some(&bad) = leaves.iter().find(|&&l| pool.range(l).is_none()) {
            return Err(Error::invalid(format!("leaf {bad} has no range annotation")));
        }
    }
    let mut cache: HashMap<(NodeId, NodeId), f64> = HashMap::new();
    let mut current = leaves;
    loop {
        let before = current.len();
        let mut queue = current;
        queue.sort_by_key(|&id| (pool.sample_count(id), id));
        let mut next = Vec::with_capacity(before);
        let mut head = 0;
        while head < queue.len() {
            let t = queue[head];
            head += 1;
            let rest = &queue[head..];
            let candidates: Vec<(usize, NodeId)> = rest
                .iter()
                .enumerate()
                .filter(|&(_, &x)| allowed(pool, filter, t, x))
                .map(|(i, &x)| (i, x))
                .collect();
            let key = |x: NodeId| (t.min(x), t.max(x));
            let missing: Vec<NodeId> = candidates
                .iter()
                .map(|&(_, x)| x)
                .filter(|&x| !cache.contains_key(&key(x)))
                .collect();
            let shared = &*pool;
            let fresh: Vec<f64> = if missing.len() >= PARALLEL_MIN_CANDIDATES {
                missing.par_iter().map(|&x| shared.similarity(t, x)).collect()
            } else {
                missing.iter().map(|&x| shared.similarity(t, x)).collect()
            };
            for (&x, p) in missing.iter().zip(fresh) {
                cache.insert(key(x), p);
            }
            let mut best: Option<(usize, NodeId, f64)> = None;
            for &(i, x) in &candidates {
                let p = cache[&key(x)];
                let better = match best {
                    None => true,
                    Some((_, bx, bp)) => p > bp || (p == bp && x < bx),
                };
                if better {
                    best = Some((i, x, p));
                }
            }
            match best {
                Some((i, x, p)) if p > p_lim => {
                    queue.remove(head + i);
                    next.push(pool.merge(t, x)?);
                }
                _ => next.push(t),
            }
        }
        current = next;
        if current.len() >= before {
            return Ok(current);
        }
    }
}
