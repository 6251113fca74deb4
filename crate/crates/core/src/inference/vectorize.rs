//! Histories as normalized observation-action count vectors.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::history::AgentHistory;
use crate::token::Token;

/// One agent-episode history as a sparse L1-normalized count vector over
/// (observation, action) pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct HistoryVector {
    pub agent: String,
    pub episode: u64,
    pub weights: BTreeMap<(Token, Token), f64>,
    /// True when the source history had no entries; the weights are then
    /// empty rather than normalized.
    pub empty: bool,
}

pub fn vectorize(agent: &AgentHistory, episode: u64) -> HistoryVector {
    let mut counts: BTreeMap<(Token, Token), f64> = BTreeMap::new();
    for e in &agent.entries {
        *counts.entry((e.observation, e.action)).or_insert(0.0) += 1.0;
    }
    let total: f64 = counts.values().sum();
    if total > 0.0 {
        for w in counts.values_mut() {
            *w /= total;
        }
    }
    HistoryVector {
        agent: agent.agent.clone(),
        episode,
        weights: counts,
        empty: agent.entries.is_empty(),
    }
}

/// Euclidean distance over the union of the two sparse supports.
pub fn distance(a: &HistoryVector, b: &HistoryVector) -> f64 {
    let mut sum = 0.0;
    for (k, &va) in &a.weights {
        let vb = b.weights.get(k).copied().unwrap_or(0.0);
        let d = va - vb;
        sum += d * d;
    }
    for (k, &vb) in &b.weights {
        if !a.weights.contains_key(k) {
            sum += vb * vb;
        }
    }
    libm::sqrt(sum)
}

/// Stable dimension order: the sorted union of all supports.
pub fn dimension_index(vectors: &[HistoryVector]) -> BTreeMap<(Token, Token), usize> {
    let mut dims: BTreeMap<(Token, Token), usize> = BTreeMap::new();
    for v in vectors {
        for k in v.weights.keys() {
            let next = dims.len();
            dims.entry(*k).or_insert(next);
        }
    }
    // Re-number in sorted key order so the index is insertion-order free.
    for (i, slot) in dims.values_mut().enumerate() {
        *slot = i;
    }
    dims
}

/// Dense row per vector in `dimension_index` order.
pub fn to_dense(
    vectors: &[HistoryVector],
    dims: &BTreeMap<(Token, Token), usize>,
) -> Vec<Vec<f64>> {
    vectors
        .iter()
        .map(|v| {
            let mut row = alloc::vec![0.0; dims.len()];
            for (k, &w) in &v.weights {
                row[dims[k]] = w;
            }
            row
        })
        .collect()
}
