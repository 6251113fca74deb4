//! Goal discovery from reward jumps, mission grouping, and deontic relations.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::history::JointHistory;
use crate::org::{Cardinality, Compatibility, DeonticKind, DeonticRelation};
use crate::token::Token;

/// Factor applied to the interquartile range when deriving the default
/// reward-jump threshold.
pub const JUMP_IQR_FACTOR: f64 = 5.0;

/// One discovered goal: an observation that co-occurs with sharp reward
/// increases.
#[derive(Clone, Debug, PartialEq)]
pub struct GoalEvidence {
    pub observation: Token,
    /// Largest reward jump seen at this observation.
    pub magnitude: f64,
    /// Number of distinct episodes containing a qualifying jump.
    pub support: usize,
    /// (agent, episode) pairs observed at a jump step.
    pub committers: BTreeSet<(String, u64)>,
}

/// A group of goals achieved together, with everyone who worked toward any
/// of them.
#[derive(Clone, Debug, PartialEq)]
pub struct InferredMission {
    pub name: String,
    pub goals: BTreeSet<String>,
    pub committers: BTreeSet<(String, u64)>,
}

pub fn goal_name(observation: Token) -> String {
    format!("goal_{}", observation.0)
}

/// Default jump threshold: `JUMP_IQR_FACTOR` times the interquartile range
/// of all per-step rewards, floored away from zero so constant-reward
/// histories yield no goals.
pub fn reward_jump_threshold(histories: &[JointHistory]) -> f64 {
    let mut rewards: Vec<f64> = histories
        .iter()
        .flat_map(|h| h.agents.iter())
        .flat_map(|a| a.entries.iter().map(|e| e.reward))
        .collect();
    if rewards.is_empty() {
        return 1e-9;
    }
    rewards.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    let q = |p: f64| -> f64 {
        // Nearest-rank quantile on the sorted sample.
        let rank = libm::ceil(p * rewards.len() as f64) as usize;
        rewards[rank.clamp(1, rewards.len()) - 1]
    };
    let iqr = q(0.75) - q(0.25);
    (JUMP_IQR_FACTOR * iqr).max(1e-9)
}

/// Finds observations that coincide with reward jumps of at least
/// `threshold` (defaulting to [`reward_jump_threshold`]). An agent's reward
/// at step `t` jumping by at least the threshold relative to step `t - 1`
/// marks that agent's observation at `t` as goal evidence.
pub fn infer_goals(histories: &[JointHistory], threshold: Option<f64>) -> Vec<GoalEvidence> {
    let threshold = threshold.unwrap_or_else(|| reward_jump_threshold(histories));
    let mut by_obs: BTreeMap<Token, GoalEvidence> = BTreeMap::new();
    for h in histories {
        for agent in &h.agents {
            for w in agent.entries.windows(2) {
                let jump = w[1].reward - w[0].reward;
                if jump < threshold {
                    continue;
                }
                let obs = w[1].observation;
                let entry = by_obs.entry(obs).or_insert_with(|| GoalEvidence {
                    observation: obs,
                    magnitude: jump,
                    support: 0,
                    committers: BTreeSet::new(),
                });
                entry.magnitude = entry.magnitude.max(jump);
                entry.committers.insert((agent.agent.clone(), h.episode));
            }
        }
    }
    let mut goals: Vec<GoalEvidence> = by_obs.into_values().collect();
    for g in &mut goals {
        let episodes: BTreeSet<u64> = g.committers.iter().map(|(_, e)| *e).collect();
        g.support = episodes.len();
    }
    goals
}

/// Groups goals into missions: goals whose committers share an episode were
/// achieved together and end up in the same mission. Missions are named
/// `mission_0`, `mission_1`, ... ordered by their smallest observation token.
pub fn group_missions(goals: &[GoalEvidence]) -> Vec<InferredMission> {
    let n = goals.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let root = find(parent, parent[i]);
            parent[i] = root;
        }
        parent[i]
    }

    let mut by_episode: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (i, g) in goals.iter().enumerate() {
        for (_, e) in &g.committers {
            by_episode.entry(*e).or_default().push(i);
        }
    }
    for members in by_episode.values() {
        for w in members.windows(2) {
            let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
            if a != b {
                parent[a] = b;
            }
        }
    }

    let mut components: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        components.entry(root).or_default().push(i);
    }
    let mut groups: Vec<Vec<usize>> = components.into_values().collect();
    // Deterministic order: by the smallest observation token in the group.
    groups.sort_by_key(|members| members.iter().map(|&i| goals[i].observation).min());

    groups
        .into_iter()
        .enumerate()
        .map(|(idx, members)| {
            let mut mission = InferredMission {
                name: format!("mission_{idx}"),
                goals: BTreeSet::new(),
                committers: BTreeSet::new(),
            };
            for i in members {
                mission.goals.insert(goal_name(goals[i].observation));
                mission.committers.extend(goals[i].committers.iter().cloned());
            }
            mission
        })
        .collect()
}

/// Role head-count bounds and cross-episode compatibilities from per-episode
/// role assignments. A role absent from some episode gets a minimum of zero;
/// an agent holding different roles in different episodes makes those roles
/// compatible.
pub fn infer_cardinalities_and_compatibilities(
    roles: &BTreeMap<(String, u64), String>,
) -> (BTreeMap<String, Cardinality>, BTreeSet<Compatibility>) {
    let episodes: BTreeSet<u64> = roles.keys().map(|(_, e)| *e).collect();
    let role_names: BTreeSet<&String> = roles.values().collect();

    let mut cardinalities = BTreeMap::new();
    for role in &role_names {
        let mut min = u32::MAX;
        let mut max = 0u32;
        for &e in &episodes {
            let count = roles
                .iter()
                .filter(|((_, ep), r)| *ep == e && *r == *role)
                .count() as u32;
            min = min.min(count);
            max = max.max(count);
        }
        if episodes.is_empty() {
            min = 0;
        }
        cardinalities.insert((*role).clone(), Cardinality::new(min, Some(max)));
    }

    let mut by_agent: BTreeMap<&String, BTreeSet<&String>> = BTreeMap::new();
    for ((agent, _), role) in roles {
        by_agent.entry(agent).or_default().insert(role);
    }
    let mut compatibilities = BTreeSet::new();
    for held in by_agent.values() {
        for a in held {
            for b in held {
                if a < b {
                    compatibilities.insert(Compatibility::new((*a).clone(), (*b).clone()));
                }
            }
        }
    }
    (cardinalities, compatibilities)
}

/// Deontic relations from commitment coverage. For each mission and each
/// role, `f` is the fraction of that role's (agent, episode) pairs that
/// committed to the mission: everyone means an obligation, some but not all
/// means a permission, nobody means no relation. Relations carry no time
/// constraint (always in force).
pub fn infer_deontic(
    roles: &BTreeMap<(String, u64), String>,
    missions: &[(String, BTreeSet<(String, u64)>)],
) -> BTreeSet<DeonticRelation> {
    let mut pairs_by_role: BTreeMap<&String, BTreeSet<&(String, u64)>> = BTreeMap::new();
    for (pair, role) in roles {
        pairs_by_role.entry(role).or_default().insert(pair);
    }

    let mut out = BTreeSet::new();
    for (mission, committers) in missions {
        for (role, pairs) in &pairs_by_role {
            let committed = pairs.iter().filter(|p| committers.contains(**p)).count();
            if committed == 0 {
                continue;
            }
            let kind = if committed == pairs.len() {
                DeonticKind::Obligation
            } else {
                DeonticKind::Permission
            };
            out.insert(DeonticRelation {
                role: (*role).clone(),
                mission: mission.clone(),
                kind,
                time_constraint: BTreeSet::new(),
            });
        }
    }
    out
}

/// Per-episode committed-agent counts for a mission, as a cardinality bound.
pub fn mission_cardinality(
    committers: &BTreeSet<(String, u64)>,
    episodes: &BTreeSet<u64>,
) -> Cardinality {
    let mut min = u32::MAX;
    let mut max = 0u32;
    for &e in episodes {
        let count = committers.iter().filter(|(_, ep)| *ep == e).count() as u32;
        min = min.min(count);
        max = max.max(count);
    }
    if episodes.is_empty() {
        min = 0;
    }
    Cardinality::new(min, Some(max))
}
