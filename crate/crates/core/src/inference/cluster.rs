//! Agglomerative role discovery over history vectors.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::vectorize::{distance, HistoryVector};

/// How to cut the dendrogram into clusters.
#[derive(Clone, Debug, PartialEq)]
pub enum CutRule {
    /// Cut at the largest relative gap between consecutive merge distances,
    /// requiring at least `MIN_ELBOW_RATIO`; one cluster otherwise. The
    /// cluster count is capped at the number of distinct agents.
    Auto,
    /// Exactly this many clusters (clamped to the vector count).
    TargetK(usize),
    /// Apply every merge at or below this distance.
    Distance(f64),
}

/// Smallest jump between consecutive merge distances that counts as a
/// cluster boundary under `CutRule::Auto`.
pub const MIN_ELBOW_RATIO: f64 = 2.5;

/// One dendrogram merge. Leaves are clusters `0..n`; merge `t` creates
/// cluster `n + t`.
#[derive(Clone, Debug, PartialEq)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub distance: f64,
    /// Vector count of the merged cluster.
    pub size: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoleClustering {
    pub merges: Vec<Merge>,
    /// Distance of the last applied merge.
    pub cut_distance: f64,
    /// Cluster label per input vector; labels ordered by cluster size
    /// descending, ties by lowest member index.
    pub assignments: Vec<usize>,
    /// Synthesized name per cluster label.
    pub role_names: Vec<String>,
    /// (agent, episode) to role name.
    pub agent_roles: BTreeMap<(String, u64), String>,
}

impl RoleClustering {
    pub fn cluster_count(&self) -> usize {
        self.role_names.len()
    }

    /// Vector indices in each cluster, by label.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = alloc::vec![Vec::new(); self.role_names.len()];
        for (i, &label) in self.assignments.iter().enumerate() {
            out[label].push(i);
        }
        out
    }
}

struct Agglomeration {
    /// Full merge sequence (n - 1 entries), non-decreasing distances.
    merges: Vec<Merge>,
    n: usize,
}

/// Builds the complete average-linkage dendrogram. Ties pick the pair whose
/// smallest member vector index is lowest.
fn agglomerate(vectors: &[HistoryVector]) -> Agglomeration {
    let n = vectors.len();
    struct Cluster {
        members: Vec<usize>,
        rep: usize,
    }
    let mut active: BTreeMap<usize, Cluster> = (0..n)
        .map(|i| {
            (
                i,
                Cluster {
                    members: alloc::vec![i],
                    rep: i,
                },
            )
        })
        .collect();
    let mut dist: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for i in 0..n {
        for j in i + 1..n {
            dist.insert((i, j), distance(&vectors[i], &vectors[j]));
        }
    }

    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    for t in 0..n.saturating_sub(1) {
        let (&(a, b), &d) = dist
            .iter()
            .min_by(|(&(a1, b1), d1), (&(a2, b2), d2)| {
                let r1 = (active[&a1].rep.min(active[&b1].rep), active[&a1].rep.max(active[&b1].rep));
                let r2 = (active[&a2].rep.min(active[&b2].rep), active[&a2].rep.max(active[&b2].rep));
                d1.partial_cmp(d2)
                    .expect("distances are finite")
                    .then(r1.cmp(&r2))
            })
            .expect("at least two active clusters");

        let ca = active.remove(&a).expect("cluster a active");
        let cb = active.remove(&b).expect("cluster b active");
        let (sa, sb) = (ca.members.len() as f64, cb.members.len() as f64);
        let new_id = n + t;
        let mut members = ca.members;
        members.extend(cb.members);
        let rep = ca.rep.min(cb.rep);

        // Average linkage by Lance-Williams update.
        let mut new_dist: Vec<(usize, f64)> = Vec::new();
        for &k in active.keys() {
            let dak = dist[&(a.min(k), a.max(k))];
            let dbk = dist[&(b.min(k), b.max(k))];
            new_dist.push((k, (sa * dak + sb * dbk) / (sa + sb)));
        }
        dist.retain(|&(x, y), _| x != a && x != b && y != a && y != b);
        for (k, dk) in new_dist {
            dist.insert((k.min(new_id), k.max(new_id)), dk);
        }

        merges.push(Merge {
            left: a,
            right: b,
            distance: d,
            size: members.len(),
        });
        active.insert(new_id, Cluster { members, rep });
    }

    Agglomeration { merges, n }
}

/// Number of merges to apply for the chosen cut.
fn merges_to_apply(tree: &Agglomeration, cut: &CutRule, agent_count: usize) -> usize {
    let n = tree.n;
    let total = tree.merges.len();
    match *cut {
        CutRule::Distance(t) => tree.merges.iter().take_while(|m| m.distance <= t).count(),
        CutRule::TargetK(k) => n.saturating_sub(k.clamp(1, n.max(1))),
        CutRule::Auto => {
            if total == 0 {
                return 0;
            }
            let d_max = tree.merges[total - 1].distance;
            if d_max <= 1e-12 {
                // Everything coincides; merge it all.
                return total;
            }
            let floor = 1e-9 * d_max;
            let mut best_ratio = 0.0;
            let mut best_boundary = None;
            for i in 0..total - 1 {
                let lo = tree.merges[i].distance.max(floor);
                let ratio = tree.merges[i + 1].distance / lo;
                if ratio > best_ratio {
                    best_ratio = ratio;
                    best_boundary = Some(i);
                }
            }
            let applied = match best_boundary {
                Some(i) if best_ratio >= MIN_ELBOW_RATIO => i + 1,
                _ => total,
            };
            // Cap the cluster count at the distinct agent count.
            let k = n - applied;
            if k > agent_count.max(1) {
                n - agent_count.max(1)
            } else {
                applied
            }
        }
    }
}

/// Cuts the average-linkage dendrogram of `vectors` into named role
/// clusters.
pub fn cluster_roles(vectors: &[HistoryVector], cut: &CutRule) -> RoleClustering {
    let n = vectors.len();
    if n == 0 {
        return RoleClustering {
            merges: Vec::new(),
            cut_distance: 0.0,
            assignments: Vec::new(),
            role_names: Vec::new(),
            agent_roles: BTreeMap::new(),
        };
    }
    let tree = agglomerate(vectors);
    let agent_count = {
        let mut agents: Vec<&str> = vectors.iter().map(|v| v.agent.as_str()).collect();
        agents.sort_unstable();
        agents.dedup();
        agents.len()
    };
    let applied = merges_to_apply(&tree, cut, agent_count);
    let cut_distance = if applied == 0 {
        0.0
    } else {
        tree.merges[applied - 1].distance
    };

    // Replay the applied prefix to get the surviving partitions.
    let mut sets: BTreeMap<usize, Vec<usize>> = (0..n).map(|i| (i, alloc::vec![i])).collect();
    for (t, m) in tree.merges.iter().take(applied).enumerate() {
        let left = sets.remove(&m.left).expect("left cluster alive");
        let mut right = sets.remove(&m.right).expect("right cluster alive");
        let mut members = left;
        members.append(&mut right);
        members.sort_unstable();
        sets.insert(n + t, members);
    }

    // Label clusters by size descending, ties by lowest member index.
    let mut clusters: Vec<Vec<usize>> = sets.into_values().collect();
    clusters.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));

    let mut assignments = alloc::vec![0usize; n];
    let mut role_names = Vec::with_capacity(clusters.len());
    let mut agent_roles = BTreeMap::new();
    for (label, members) in clusters.iter().enumerate() {
        let name = format!("role_{label}");
        for &i in members {
            assignments[i] = label;
            agent_roles.insert(
                (vectors[i].agent.clone(), vectors[i].episode),
                name.clone(),
            );
        }
        role_names.push(name);
    }

    RoleClustering {
        merges: tree.merges,
        cut_distance,
        assignments,
        role_names,
        agent_roles,
    }
}

/// Chance-adjusted agreement between two labelings of the same items.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings must cover the same items");
    let n = a.len();
    if n == 0 {
        return 1.0;
    }
    let mut table: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    let mut rows: BTreeMap<usize, u64> = BTreeMap::new();
    let mut cols: BTreeMap<usize, u64> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_insert(0) += 1;
        *rows.entry(x).or_insert(0) += 1;
        *cols.entry(y).or_insert(0) += 1;
    }
    let choose2 = |m: u64| (m * m.saturating_sub(1)) as f64 / 2.0;
    let index: f64 = table.values().map(|&m| choose2(m)).sum();
    let row_sum: f64 = rows.values().map(|&m| choose2(m)).sum();
    let col_sum: f64 = cols.values().map(|&m| choose2(m)).sum();
    let total = choose2(n as u64);
    let expected = row_sum * col_sum / total;
    let maximum = (row_sum + col_sum) / 2.0;
    if (maximum - expected).abs() < 1e-12 {
        // Both partitions trivial in the same way.
        return 1.0;
    }
    (index - expected) / (maximum - expected)
}

/// Fraction of vectors whose nearest neighbor shares their cluster label.
pub fn nearest_neighbor_agreement(vectors: &[HistoryVector], assignments: &[usize]) -> f64 {
    let n = vectors.len();
    if n < 2 {
        return 1.0;
    }
    let mut agree = 0usize;
    for i in 0..n {
        let mut best: Option<(f64, usize)> = None;
        for j in 0..n {
            if i == j {
                continue;
            }
            let d = distance(&vectors[i], &vectors[j]);
            let better = match best {
                None => true,
                Some((bd, bj)) => d < bd || (d == bd && j < bj),
            };
            if better {
                best = Some((d, j));
            }
        }
        if let Some((_, j)) = best {
            if assignments[i] == assignments[j] {
                agree += 1;
            }
        }
    }
    agree as f64 / n as f64
}
