//! Reconstructing organizational specifications from recorded histories.
//!
//! The pipeline: turn each agent's per-episode history into a behavior
//! vector, project for inspection, cluster the vectors into roles, reconcile
//! cluster names against the relation registry, then derive links, goals,
//! missions, deontic relations, and head-count bounds. The synthesized
//! specification always passes structural validation.

pub mod cluster;
pub mod goals;
pub mod links;
pub mod pca;
pub mod vectorize;

pub use cluster::{
    adjusted_rand_index, cluster_roles, nearest_neighbor_agreement, CutRule, Merge,
    RoleClustering, MIN_ELBOW_RATIO,
};
pub use goals::{
    goal_name, group_missions, infer_cardinalities_and_compatibilities, infer_deontic,
    infer_goals, reward_jump_threshold, GoalEvidence, InferredMission, JUMP_IQR_FACTOR,
};
pub use links::{infer_links, InferredLink};
pub use pca::{pca, PcaProjection};
pub use vectorize::{dimension_index, distance, to_dense, vectorize, HistoryVector};

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::history::JointHistory;
use crate::org::{validate_spec, OrganizationalSpecification};
use crate::relations::{ElementRef, RegistryError, RelationRegistry};

#[derive(Clone, Debug, PartialEq)]
pub struct InferenceOptions {
    pub cut: CutRule,
    /// Components kept in the projection used for inspection output.
    pub pca_components: usize,
    /// Minimum occurrences before a link is emitted.
    pub min_support: usize,
    /// Steps a receive observation may lag its send action.
    pub link_window: u32,
    /// Reward-jump threshold; derived from the reward spread when `None`.
    pub jump_threshold: Option<f64>,
    /// Fewest episodes worth synthesizing from.
    pub min_episodes: usize,
}

impl Default for InferenceOptions {
    fn default() -> Self {
        InferenceOptions {
            cut: CutRule::Auto,
            pca_components: 2,
            min_support: 3,
            link_window: 1,
            jump_threshold: None,
            min_episodes: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum InferenceError {
    InsufficientEpisodes { got: usize, need: usize },
    Registry(RegistryError),
}

impl core::fmt::Display for InferenceError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            InferenceError::InsufficientEpisodes { got, need } => {
                write!(f, "need at least {need} episodes, got {got}")
            }
            InferenceError::Registry(e) => write!(f, "{e}"),
        }
    }
}

impl From<RegistryError> for InferenceError {
    fn from(e: RegistryError) -> Self {
        InferenceError::Registry(e)
    }
}

/// Everything the synthesis pipeline produced, including the intermediate
/// stages needed to explain or export the result.
#[derive(Clone, Debug)]
pub struct InferenceReport {
    pub spec: OrganizationalSpecification,
    /// One vector per (agent, episode), in history order.
    pub vectors: Vec<HistoryVector>,
    /// Projection of the vectors, rows aligned with `vectors`.
    pub projection: PcaProjection,
    pub clustering: RoleClustering,
    pub links: Vec<InferredLink>,
    pub goals: Vec<GoalEvidence>,
    pub missions: Vec<InferredMission>,
    /// Fraction of vectors whose nearest neighbor got the same role.
    pub nearest_neighbor_agreement: f64,
    pub episode_count: usize,
    /// Mission preference orders cannot be told apart under a common reward,
    /// so they are reported as absent rather than guessed.
    pub preference_orders_inferred: bool,
}

/// Rebuilds an organizational specification from recorded joint histories.
pub fn synthesize(
    histories: &[JointHistory],
    registry: &RelationRegistry,
    options: &InferenceOptions,
) -> Result<InferenceReport, InferenceError> {
    let episode_count = histories.len();
    if episode_count < options.min_episodes {
        return Err(InferenceError::InsufficientEpisodes {
            got: episode_count,
            need: options.min_episodes,
        });
    }
    registry.validate()?;

    let mut vectors = Vec::new();
    let mut sources = Vec::new();
    for h in histories {
        for agent in &h.agents {
            vectors.push(vectorize(agent, h.episode));
            sources.push(agent);
        }
    }

    let dims = dimension_index(&vectors);
    let dense = to_dense(&vectors, &dims);
    let projection = pca(&dense, options.pca_components.max(1));

    let mut clustering = cluster_roles(&vectors, &options.cut);

    // Relation firings per vector, split by what they indicate.
    let mut fired_roles: Vec<BTreeSet<String>> = Vec::with_capacity(vectors.len());
    let mut mission_commitments: BTreeMap<String, BTreeSet<(String, u64)>> = BTreeMap::new();
    for (i, agent) in sources.iter().enumerate() {
        let mut roles_here = BTreeSet::new();
        for firing in registry.label_history(agent) {
            match firing.target {
                ElementRef::Role(name) if !name.is_empty() => {
                    roles_here.insert(name);
                }
                ElementRef::Mission(name) if !name.is_empty() => {
                    mission_commitments
                        .entry(name)
                        .or_default()
                        .insert((vectors[i].agent.clone(), vectors[i].episode));
                }
                _ => {}
            }
        }
        fired_roles.push(roles_here);
    }

    // A cluster takes a registry role's name when at least half its members
    // fired a relation pointing at that role. Earlier (larger) clusters get
    // first pick; a name is never used twice.
    let mut used: BTreeSet<String> = clustering.role_names.iter().cloned().collect();
    let members = clustering.members();
    for label in 0..clustering.cluster_count() {
        let cluster = &members[label];
        let mut counts: BTreeMap<&String, usize> = BTreeMap::new();
        for &i in cluster {
            for name in &fired_roles[i] {
                *counts.entry(name).or_insert(0) += 1;
            }
        }
        let winner = counts
            .iter()
            .filter(|(name, &c)| 2 * c >= cluster.len() && !used.contains(**name))
            .max_by(|(n1, c1), (n2, c2)| c1.cmp(c2).then(n2.cmp(n1)))
            .map(|(name, _)| (*name).clone());
        if let Some(name) = winner {
            let old = core::mem::replace(&mut clustering.role_names[label], name.clone());
            used.remove(&old);
            used.insert(name.clone());
            for &i in cluster {
                clustering
                    .agent_roles
                    .insert((vectors[i].agent.clone(), vectors[i].episode), name.clone());
            }
        }
    }

    let roles = &clustering.agent_roles;
    let links = infer_links(histories, registry, roles, options.min_support, options.link_window)?;
    let goals = infer_goals(histories, options.jump_threshold);
    let missions = group_missions(&goals);

    let mut mission_committers: BTreeMap<String, BTreeSet<(String, u64)>> = missions
        .iter()
        .map(|m| (m.name.clone(), m.committers.clone()))
        .collect();
    for (name, committers) in mission_commitments {
        mission_committers.entry(name).or_default().extend(committers);
    }
    let mission_list: Vec<(String, BTreeSet<(String, u64)>)> =
        mission_committers.iter().map(|(n, c)| (n.clone(), c.clone())).collect();
    let deontic = infer_deontic(roles, &mission_list);
    let (role_cardinalities, compatibilities) = infer_cardinalities_and_compatibilities(roles);

    let episodes: BTreeSet<u64> = histories.iter().map(|h| h.episode).collect();
    let mut spec = OrganizationalSpecification::default();
    spec.structural.roles = clustering.role_names.iter().cloned().collect();
    spec.structural.links = links.iter().map(|l| l.link.clone()).collect();
    spec.structural.compatibilities = compatibilities;
    spec.structural.role_cardinalities = role_cardinalities;
    spec.functional.goals = goals.iter().map(|g| goal_name(g.observation)).collect();
    for m in &missions {
        spec.functional.missions.insert(m.name.clone(), m.goals.clone());
    }
    for name in mission_committers.keys() {
        // Registry-declared missions whose constituent goals stayed unseen.
        spec.functional.missions.entry(name.clone()).or_default();
    }
    for (name, committers) in &mission_committers {
        spec.functional
            .mission_cardinalities
            .insert(name.clone(), goals::mission_cardinality(committers, &episodes));
    }
    spec.deontic = deontic;

    debug_assert!(
        validate_spec(&spec).is_empty(),
        "synthesized specification must validate"
    );

    let nearest_neighbor_agreement =
        cluster::nearest_neighbor_agreement(&vectors, &clustering.assignments);

    Ok(InferenceReport {
        spec,
        vectors,
        projection,
        clustering,
        links,
        goals,
        missions,
        nearest_neighbor_agreement,
        episode_count,
        preference_orders_inferred: false,
    })
}
