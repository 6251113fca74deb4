//! Action masking against an organizational specification.
//!
//! A guard holds static role assignments plus predicates compiled from the
//! specification and a relation registry. Per step it answers: which actions
//! is this agent authorized to take, given its history and current
//! observation. Forbidden actions are tokens appearing exclusively in
//! relations that target roles incompatible with the agent's role; required
//! actions come from pattern relations of currently active obligations.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::history::{flatten_entries, HistoryEntry, JointHistory};
use crate::org::{
    validate_spec, DeonticKind, OrganizationalSpecification, StepInterval, Violation,
};
use crate::pattern::HistoryPattern;
use crate::relations::{ElementRef, Matcher, RelationRegistry, RegistryError};
use crate::token::{Token, Vocab};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnforcementMode {
    /// Authorized sets are computed and enforced.
    Hard,
    /// The guard answers the full vocabulary; useful for unconstrained runs
    /// that still carry assignment metadata.
    Off,
}

/// Demands contributed by one obligation: active within `time_constraint`
/// (empty means always), demanding `by_obs[current_observation]` for the
/// indexed pattern shape, `constant` on every active step, plus whatever
/// each general pattern demands against the flat history.
#[derive(Clone, Debug, Default)]
struct DemandGroup {
    time_constraint: BTreeSet<StepInterval>,
    by_obs: BTreeMap<Token, BTreeSet<Token>>,
    constant: BTreeSet<Token>,
    general: Vec<HistoryPattern>,
}

impl DemandGroup {
    fn active_at(&self, step: u32) -> bool {
        self.time_constraint.is_empty() || self.time_constraint.iter().any(|i| i.contains(step))
    }
}

#[derive(Clone, Debug, Default)]
pub struct CompiledRole {
    forbidden: BTreeSet<Token>,
    demands: Vec<DemandGroup>,
}

/// Authorization inputs for one agent at one step. `required` and
/// `forbidden` never overlap; `demanding` records whether any active
/// obligation demanded an action at all (before removing forbidden ones).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionConstraints {
    pub required: BTreeSet<Token>,
    pub forbidden: BTreeSet<Token>,
    pub demanding: bool,
}

impl ActionConstraints {
    fn free() -> Self {
        ActionConstraints {
            required: BTreeSet::new(),
            forbidden: BTreeSet::new(),
            demanding: false,
        }
    }

    /// Membership test equivalent to the authorized set below, usable
    /// without knowing the vocabulary.
    pub fn admits(&self, action: Token) -> bool {
        !self.forbidden.contains(&action) && (!self.demanding || self.required.contains(&action))
    }
}

#[derive(Clone, Debug, Default)]
pub struct RolePredicates {
    per_role: BTreeMap<String, CompiledRole>,
}

impl RolePredicates {
    /// Constraints for a role given the flat observation/action stream so
    /// far (ending with the current observation) and the step index.
    /// Unknown roles are unconstrained.
    pub fn constraints(
        &self,
        role: &str,
        flat_with_obs: &[Token],
        step: u32,
    ) -> ActionConstraints {
        let Some(compiled) = self.per_role.get(role) else {
            return ActionConstraints::free();
        };
        let current_obs = flat_with_obs.last().copied();
        let mut raw: BTreeSet<Token> = BTreeSet::new();
        let mut demanding = false;
        for group in &compiled.demands {
            if !group.active_at(step) {
                continue;
            }
            if let Some(obs) = current_obs {
                if let Some(acts) = group.by_obs.get(&obs) {
                    demanding = true;
                    raw.extend(acts.iter().copied());
                }
            }
            if !group.constant.is_empty() {
                demanding = true;
                raw.extend(group.constant.iter().copied());
            }
            for p in &group.general {
                if let Some(a) = p.demanded_action(flat_with_obs) {
                    demanding = true;
                    raw.insert(a);
                }
            }
        }
        let required: BTreeSet<Token> = raw
            .difference(&compiled.forbidden)
            .copied()
            .collect();
        ActionConstraints {
            required,
            forbidden: compiled.forbidden.clone(),
            demanding,
        }
    }

    pub fn roles(&self) -> impl Iterator<Item = &str> {
        self.per_role.keys().map(String::as_str)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CompileError {
    /// A declared role has no relation in the registry, so nothing grounds
    /// it in observable behavior.
    UncoveredRole { role: String },
}

impl core::fmt::Display for CompileError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            CompileError::UncoveredRole { role } => {
                write!(f, "role '{role}' has no relation in the registry")
            }
        }
    }
}

impl core::error::Error for CompileError {}

/// Action tokens a relation mentions.
fn relation_actions(matcher: &Matcher) -> Vec<Token> {
    match matcher {
        Matcher::Tokens { actions, .. } => actions.iter().copied().collect(),
        Matcher::Pattern(p) => p.literal_tokens().filter(|t| t.is_action()).collect(),
    }
}

/// Compiles per-role forbidden sets and obligation demands.
///
/// An action is forbidden for role `r` when every relation mentioning it
/// targets some other declared role that `r` is not compatible with. Demands
/// come from pattern relations targeting the mission of each obligation
/// binding `r`. Every declared role must be covered by at least one
/// relation.
pub fn compile_action_predicates(
    spec: &OrganizationalSpecification,
    registry: &RelationRegistry,
) -> Result<RolePredicates, CompileError> {
    let covered = registry.covered_roles();
    for role in &spec.structural.roles {
        if !covered.contains(role.as_str()) {
            return Err(CompileError::UncoveredRole { role: role.clone() });
        }
    }

    // Which targets mention each action token.
    let mut targets_of: BTreeMap<Token, Vec<&ElementRef>> = BTreeMap::new();
    for rel in &registry.relations {
        for a in relation_actions(&rel.matcher) {
            targets_of.entry(a).or_default().push(&rel.target);
        }
    }

    let mut per_role: BTreeMap<String, CompiledRole> = BTreeMap::new();
    for role in &spec.structural.roles {
        let mut compiled = CompiledRole::default();

        for (action, targets) in &targets_of {
            let exclusive_to_incompatible = targets.iter().all(|t| match t {
                ElementRef::Role(other) => {
                    other != role
                        && spec.structural.roles.contains(other)
                        && !spec.structural.compatible(role, other)
                }
                _ => false,
            });
            if exclusive_to_incompatible {
                compiled.forbidden.insert(*action);
            }
        }

        for d in spec.deontic_for_role(role) {
            if d.kind != DeonticKind::Obligation {
                continue;
            }
            let mut group = DemandGroup {
                time_constraint: d.time_constraint.clone(),
                ..Default::default()
            };
            for rel in &registry.relations {
                let targets_mission = matches!(
                    &rel.target,
                    ElementRef::Mission(m) if *m == d.mission
                );
                if !targets_mission {
                    continue;
                }
                if let Matcher::Pattern(p) = &rel.matcher {
                    if let Some((obs, act)) = p.obs_action_demand_shape() {
                        group.by_obs.entry(obs).or_default().insert(act);
                    } else if let Some(fixed) = p.input_independent_resume() {
                        // A leading greedy `.*` swallows any input, so the
                        // resume position is constant; only an action
                        // literal there ever demands.
                        if let Some(a) = fixed {
                            group.constant.insert(a);
                        }
                    } else {
                        group.general.push(p.clone());
                    }
                }
            }
            if !group.by_obs.is_empty() || !group.constant.is_empty() || !group.general.is_empty()
            {
                compiled.demands.push(group);
            }
        }

        per_role.insert(role.clone(), compiled);
    }

    Ok(RolePredicates { per_role })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmptyAuthorizedSet {
    pub agent: String,
    pub step: u32,
}

impl core::fmt::Display for EmptyAuthorizedSet {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(
            f,
            "no authorized action for agent '{}' at step {}",
            self.agent, self.step
        )
    }
}

impl core::error::Error for EmptyAuthorizedSet {}

#[derive(Clone, Debug)]
pub enum GuardBuildError {
    InvalidSpec(Vec<Violation>),
    UnknownRole { agent: String, role: String },
    Registry(RegistryError),
    Compile(CompileError),
}

impl core::fmt::Display for GuardBuildError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            GuardBuildError::InvalidSpec(violations) => {
                write!(f, "specification is not well formed ({} issues", violations.len())?;
                if let Some(first) = violations.first() {
                    write!(f, ", first: {first}")?;
                }
                write!(f, ")")
            }
            GuardBuildError::UnknownRole { agent, role } => {
                write!(f, "agent '{agent}' is assigned undeclared role '{role}'")
            }
            GuardBuildError::Registry(e) => write!(f, "{e}"),
            GuardBuildError::Compile(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for GuardBuildError {}

/// Masks actions per agent against a specification. Role assignments are
/// static for the lifetime of the guard (one episode or one training run).
#[derive(Clone, Debug)]
pub struct ConstraintGuard {
    spec: OrganizationalSpecification,
    assignments: BTreeMap<String, String>,
    predicates: RolePredicates,
    mode: EnforcementMode,
}

impl ConstraintGuard {
    pub fn new(
        spec: OrganizationalSpecification,
        assignments: BTreeMap<String, String>,
        registry: &RelationRegistry,
        mode: EnforcementMode,
    ) -> Result<Self, GuardBuildError> {
        let violations = validate_spec(&spec);
        if !violations.is_empty() {
            return Err(GuardBuildError::InvalidSpec(violations));
        }
        registry.validate().map_err(GuardBuildError::Registry)?;
        for (agent, role) in &assignments {
            if !spec.structural.roles.contains(role) {
                return Err(GuardBuildError::UnknownRole {
                    agent: agent.clone(),
                    role: role.clone(),
                });
            }
        }
        let predicates =
            compile_action_predicates(&spec, registry).map_err(GuardBuildError::Compile)?;
        Ok(ConstraintGuard {
            spec,
            assignments,
            predicates,
            mode,
        })
    }

    pub fn mode(&self) -> EnforcementMode {
        self.mode
    }

    pub fn spec(&self) -> &OrganizationalSpecification {
        &self.spec
    }

    pub fn assignments(&self) -> &BTreeMap<String, String> {
        &self.assignments
    }

    pub fn role_of(&self, agent: &str) -> Option<&str> {
        self.assignments.get(agent).map(String::as_str)
    }

    /// Constraints for one agent at one step; unassigned agents and mode
    /// `Off` are unconstrained.
    pub fn constraints_for(
        &self,
        agent: &str,
        flat_with_obs: &[Token],
        step: u32,
    ) -> ActionConstraints {
        if self.mode == EnforcementMode::Off {
            return ActionConstraints::free();
        }
        match self.assignments.get(agent) {
            Some(role) => self.predicates.constraints(role, flat_with_obs, step),
            None => ActionConstraints::free(),
        }
    }

    /// The authorized action set: vocabulary minus forbidden, intersected
    /// with the required set when any obligation demands. Errors when the
    /// result is empty.
    pub fn authorized_actions(
        &self,
        agent: &str,
        flat_with_obs: &[Token],
        step: u32,
        action_vocab: &Vocab,
    ) -> Result<BTreeSet<Token>, EmptyAuthorizedSet> {
        let c = self.constraints_for(agent, flat_with_obs, step);
        let allowed: BTreeSet<Token> = action_vocab
            .iter()
            .filter(|a| c.admits(*a))
            .collect();
        if allowed.is_empty() {
            Err(EmptyAuthorizedSet {
                agent: String::from(agent),
                step,
            })
        } else {
            Ok(allowed)
        }
    }

    /// Same as `authorized_actions` but starting from recorded entries.
    pub fn authorized_from_entries(
        &self,
        agent: &str,
        entries: &[HistoryEntry],
        observation: Token,
        action_vocab: &Vocab,
    ) -> Result<BTreeSet<Token>, EmptyAuthorizedSet> {
        let mut flat = flatten_entries(entries);
        flat.push(observation);
        self.authorized_actions(agent, &flat, entries.len() as u32, action_vocab)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Requirement {
    /// Every recorded action of the agent lay in its authorized set.
    AuthorizedActions { agent: String, role: String },
    Obligation {
        agent: String,
        role: String,
        mission: String,
    },
    Permission {
        agent: String,
        role: String,
        mission: String,
    },
    RoleCardinality { role: String },
}

impl core::fmt::Display for Requirement {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Requirement::AuthorizedActions { agent, role } => {
                write!(f, "authorized actions for '{agent}' as '{role}'")
            }
            Requirement::Obligation {
                agent,
                role,
                mission,
            } => write!(f, "obligation of '{agent}' as '{role}' towards '{mission}'"),
            Requirement::Permission {
                agent,
                role,
                mission,
            } => write!(f, "permission of '{agent}' as '{role}' towards '{mission}'"),
            Requirement::RoleCardinality { role } => {
                write!(f, "cardinality of role '{role}'")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Counterexample {
    pub episode: u64,
    pub agent: String,
    pub step: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SatisfactionEntry {
    pub requirement: Requirement,
    pub satisfied: bool,
    pub counterexample: Option<Counterexample>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SatisfactionReport {
    pub entries: Vec<SatisfactionEntry>,
}

impl SatisfactionReport {
    pub fn satisfied(&self) -> bool {
        self.entries.iter().all(|e| e.satisfied)
    }

    pub fn violation_count(&self) -> usize {
        self.entries.iter().filter(|e| !e.satisfied).count()
    }

    pub fn unsatisfied(&self) -> impl Iterator<Item = &SatisfactionEntry> {
        self.entries.iter().filter(|e| !e.satisfied)
    }
}

/// Checks recorded histories against a specification and its assignments.
///
/// Per assigned agent: every action must lie in the authorized set implied
/// by the specification at that step; each obligation must be evidenced at
/// least once per episode inside its time windows (an empty episode set
/// therefore leaves obligations unsatisfied); each time-constrained
/// permission must only be exercised inside its windows. Role cardinalities
/// are checked against the assignment counts. Agents without an assignment
/// are not checked.
pub fn check_satisfaction(
    spec: &OrganizationalSpecification,
    assignments: &BTreeMap<String, String>,
    registry: &RelationRegistry,
    histories: &[JointHistory],
) -> Result<SatisfactionReport, GuardBuildError> {
    let guard = ConstraintGuard::new(
        spec.clone(),
        assignments.clone(),
        registry,
        EnforcementMode::Hard,
    )?;
    let mut entries: Vec<SatisfactionEntry> = Vec::new();

    for (agent, role) in assignments {
        // Authorized-action replay.
        let mut mask_counterexample: Option<Counterexample> = None;
        'episodes: for jh in histories {
            let Some(ah) = jh.agents.iter().find(|a| &a.agent == agent) else {
                continue;
            };
            let mut flat: Vec<Token> = Vec::with_capacity(ah.entries.len() * 2);
            for (k, entry) in ah.entries.iter().enumerate() {
                flat.push(entry.observation);
                let c = guard.constraints_for(agent, &flat, k as u32);
                if !c.admits(entry.action) {
                    mask_counterexample = Some(Counterexample {
                        episode: jh.episode,
                        agent: agent.clone(),
                        step: Some(entry.step),
                    });
                    break 'episodes;
                }
                flat.push(entry.action);
            }
        }
        entries.push(SatisfactionEntry {
            requirement: Requirement::AuthorizedActions {
                agent: agent.clone(),
                role: role.clone(),
            },
            satisfied: mask_counterexample.is_none(),
            counterexample: mask_counterexample,
        });

        // Deontic relations binding this agent's role.
        for d in spec.deontic_for_role(role) {
            let mut counterexample: Option<Counterexample> = None;
            match d.kind {
                DeonticKind::Obligation => {
                    let mut all_evidenced = !histories.is_empty();
                    for jh in histories {
                        let Some(ah) = jh.agents.iter().find(|a| &a.agent == agent) else {
                            continue;
                        };
                        let fired = registry.label_history(ah);
                        let evidenced = fired.iter().any(|f| {
                            matches!(&f.target, ElementRef::Mission(m) if *m == d.mission)
                                && (d.time_constraint.is_empty()
                                    || f.evidence.iter().any(|&i| {
                                        ah.entries
                                            .get(i)
                                            .is_some_and(|e| d.active_at(e.step))
                                    }))
                        });
                        if !evidenced {
                            all_evidenced = false;
                            counterexample = Some(Counterexample {
                                episode: jh.episode,
                                agent: agent.clone(),
                                step: None,
                            });
                            break;
                        }
                    }
                    entries.push(SatisfactionEntry {
                        requirement: Requirement::Obligation {
                            agent: agent.clone(),
                            role: role.clone(),
                            mission: d.mission.clone(),
                        },
                        satisfied: all_evidenced,
                        counterexample,
                    });
                }
                DeonticKind::Permission => {
                    if !d.time_constraint.is_empty() {
                        'perm: for jh in histories {
                            let Some(ah) = jh.agents.iter().find(|a| &a.agent == agent) else {
                                continue;
                            };
                            let fired = registry.label_history(ah);
                            for f in &fired {
                                if !matches!(&f.target, ElementRef::Mission(m) if *m == d.mission)
                                {
                                    continue;
                                }
                                for &i in &f.evidence {
                                    let Some(e) = ah.entries.get(i) else {
                                        continue;
                                    };
                                    if !d.active_at(e.step) {
                                        counterexample = Some(Counterexample {
                                            episode: jh.episode,
                                            agent: agent.clone(),
                                            step: Some(e.step),
                                        });
                                        break 'perm;
                                    }
                                }
                            }
                        }
                    }
                    entries.push(SatisfactionEntry {
                        requirement: Requirement::Permission {
                            agent: agent.clone(),
                            role: role.clone(),
                            mission: d.mission.clone(),
                        },
                        satisfied: counterexample.is_none(),
                        counterexample,
                    });
                }
            }
        }
    }

    // Role cardinalities against assignment counts.
    for (role, card) in &spec.structural.role_cardinalities {
        let count = assignments.values().filter(|r| *r == role).count() as u32;
        entries.push(SatisfactionEntry {
            requirement: Requirement::RoleCardinality { role: role.clone() },
            satisfied: card.admits(count),
            counterexample: None,
        });
    }

    Ok(SatisfactionReport { entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::history::AgentHistory;
    use crate::org::{Cardinality, Compatibility, DeonticRelation};
    use crate::relations::{MessageDecl, Relation};
    use alloc::string::ToString;

    fn spec_two_roles() -> OrganizationalSpecification {
        let mut spec = OrganizationalSpecification::empty();
        spec.structural.roles.insert("starter".to_string());
        spec.structural.roles.insert("blocker".to_string());
        spec
    }

    fn registry_two_roles() -> RelationRegistry {
        RelationRegistry {
            relations: alloc::vec![
                Relation {
                    matcher: Matcher::Tokens {
                        observations: [Token(1000)].into_iter().collect(),
                        actions: [Token(0)].into_iter().collect(),
                    },
                    target: ElementRef::Role("blocker".to_string()),
                },
                Relation {
                    matcher: Matcher::Tokens {
                        observations: [Token(1000)].into_iter().collect(),
                        actions: [Token(1)].into_iter().collect(),
                    },
                    target: ElementRef::Role("starter".to_string()),
                },
            ],
            ..Default::default()
        }
    }

    #[test]
    fn exclusive_actions_of_incompatible_roles_are_forbidden() {
        let spec = spec_two_roles();
        let preds = compile_action_predicates(&spec, &registry_two_roles()).unwrap();
        let c = preds.constraints("starter", &[Token(1000)], 0);
        assert!(c.forbidden.contains(&Token(0)));
        assert!(!c.forbidden.contains(&Token(1)));
        assert!(!c.demanding);
        let c2 = preds.constraints("blocker", &[Token(1000)], 0);
        assert!(c2.forbidden.contains(&Token(1)));
    }

    #[test]
    fn compatibility_lifts_forbiddance() {
        let mut spec = spec_two_roles();
        spec.structural
            .compatibilities
            .insert(Compatibility::new("starter", "blocker"));
        let preds = compile_action_predicates(&spec, &registry_two_roles()).unwrap();
        let c = preds.constraints("starter", &[Token(1000)], 0);
        assert!(c.forbidden.is_empty());
    }

    #[test]
    fn uncovered_role_is_an_error() {
        let mut spec = spec_two_roles();
        spec.structural.roles.insert("ghost".to_string());
        let err = compile_action_predicates(&spec, &registry_two_roles()).unwrap_err();
        assert!(matches!(err, CompileError::UncoveredRole { role } if role == "ghost"));
    }

    #[test]
    fn empty_spec_constrains_nothing() {
        let preds =
            compile_action_predicates(&OrganizationalSpecification::empty(), &registry_two_roles())
                .unwrap();
        let c = preds.constraints("anything", &[Token(1000)], 0);
        assert_eq!(c, ActionConstraints::free());
    }

    fn obedience_setup() -> (OrganizationalSpecification, RelationRegistry) {
        let mut spec = spec_two_roles();
        spec.functional.goals.insert("respond".to_string());
        spec.functional
            .missions
            .insert("obey".to_string(), ["respond".to_string()].into_iter().collect());
        spec.deontic.insert(DeonticRelation {
            role: "starter".to_string(),
            mission: "obey".to_string(),
            kind: DeonticKind::Obligation,
            time_constraint: Default::default(),
        });
        let mut registry = registry_two_roles();
        // Anchored shape drives the per-step demand; the containment shape
        // recognizes compliance anywhere in a finished history.
        registry.relations.push(Relation {
            matcher: Matcher::Pattern(HistoryPattern::parse(".*?1014,1").unwrap()),
            target: ElementRef::Mission("obey".to_string()),
        });
        registry.relations.push(Relation {
            matcher: Matcher::Pattern(HistoryPattern::parse(".*1014,1.*").unwrap()),
            target: ElementRef::Mission("obey".to_string()),
        });
        (spec, registry)
    }

    #[test]
    fn obligation_demand_restricts_authorized_set() {
        let (spec, registry) = obedience_setup();
        let guard = ConstraintGuard::new(
            spec,
            [("a0".to_string(), "starter".to_string())].into_iter().collect(),
            &registry,
            EnforcementMode::Hard,
        )
        .unwrap();
        let vocab = Vocab::from_tokens([Token(0), Token(1), Token(2)]);

        // Trigger observation demands action 1; action 0 is also forbidden.
        let allowed = guard
            .authorized_actions("a0", &[Token(1014)], 0, &vocab)
            .unwrap();
        assert_eq!(allowed.into_iter().collect::<Vec<_>>(), alloc::vec![Token(1)]);

        // Other observation: only the forbidden action is excluded.
        let allowed = guard
            .authorized_actions("a0", &[Token(1000)], 0, &vocab)
            .unwrap();
        assert_eq!(
            allowed.into_iter().collect::<Vec<_>>(),
            alloc::vec![Token(1), Token(2)]
        );

        // Unassigned agents get the whole vocabulary.
        let allowed = guard
            .authorized_actions("other", &[Token(1014)], 0, &vocab)
            .unwrap();
        assert_eq!(allowed.len(), 3);
    }

    #[test]
    fn constant_demand_survives_compilation() {
        let (mut spec, mut registry) = obedience_setup();
        spec.deontic.insert(DeonticRelation {
            role: "blocker".to_string(),
            mission: "obey".to_string(),
            kind: DeonticKind::Obligation,
            time_constraint: Default::default(),
        });
        // Trailing unquantified action literal after a greedy swallow-all:
        // the demand holds on every step, whatever was observed.
        registry.relations.push(Relation {
            matcher: Matcher::Pattern(HistoryPattern::parse(".*2").unwrap()),
            target: ElementRef::Mission("obey".to_string()),
        });
        let preds = compile_action_predicates(&spec, &registry).unwrap();
        let c = preds.constraints("blocker", &[Token(1000)], 0);
        assert!(c.demanding);
        assert!(c.required.contains(&Token(2)));
        let c2 = preds.constraints("blocker", &[Token(1007)], 9);
        assert!(c2.demanding);
    }

    #[test]
    fn empty_authorized_set_is_an_error() {
        let mut spec = OrganizationalSpecification::empty();
        spec.structural.roles.insert("starter".to_string());
        spec.functional.goals.insert("respond".to_string());
        spec.functional
            .missions
            .insert("obey".to_string(), ["respond".to_string()].into_iter().collect());
        spec.deontic.insert(DeonticRelation {
            role: "starter".to_string(),
            mission: "obey".to_string(),
            kind: DeonticKind::Obligation,
            time_constraint: Default::default(),
        });
        // Demands an action outside the vocabulary.
        let registry = RelationRegistry {
            relations: alloc::vec![Relation {
                matcher: Matcher::Pattern(HistoryPattern::parse(".*?1015,99").unwrap()),
                target: ElementRef::Mission("obey".to_string()),
            }, Relation {
                matcher: Matcher::Tokens {
                    observations: [Token(1015)].into_iter().collect(),
                    actions: [Token(99)].into_iter().collect(),
                },
                target: ElementRef::Role("starter".to_string()),
            }],
            ..Default::default()
        };
        let guard = ConstraintGuard::new(
            spec,
            [("a0".to_string(), "starter".to_string())].into_iter().collect(),
            &registry,
            EnforcementMode::Hard,
        )
        .unwrap();
        let vocab = Vocab::from_tokens([Token(0), Token(1)]);
        let err = guard
            .authorized_actions("a0", &[Token(1015)], 3, &vocab)
            .unwrap_err();
        assert_eq!(
            err,
            EmptyAuthorizedSet {
                agent: "a0".to_string(),
                step: 3
            }
        );
        // Off the trigger the vocabulary is available again.
        assert!(guard
            .authorized_actions("a0", &[Token(1016)], 4, &vocab)
            .is_ok());
    }

    #[test]
    fn guard_off_mode_is_transparent() {
        let (spec, registry) = obedience_setup();
        let guard = ConstraintGuard::new(
            spec,
            [("a0".to_string(), "starter".to_string())].into_iter().collect(),
            &registry,
            EnforcementMode::Off,
        )
        .unwrap();
        let vocab = Vocab::from_tokens([Token(0), Token(1), Token(2)]);
        let allowed = guard
            .authorized_actions("a0", &[Token(1014)], 0, &vocab)
            .unwrap();
        assert_eq!(allowed.len(), 3);
    }

    #[test]
    fn unknown_assigned_role_rejected() {
        let (spec, registry) = obedience_setup();
        let err = ConstraintGuard::new(
            spec,
            [("a0".to_string(), "nope".to_string())].into_iter().collect(),
            &registry,
            EnforcementMode::Hard,
        )
        .unwrap_err();
        assert!(matches!(err, GuardBuildError::UnknownRole { .. }));
    }

    fn history_of(agent: &str, pairs: &[(u32, u32)], gamma: f64) -> JointHistory {
        JointHistory {
            episode: 0,
            seed: 0,
            env_id: "test".to_string(),
            gamma,
            agents: alloc::vec![AgentHistory {
                agent: agent.to_string(),
                entries: pairs
                    .iter()
                    .enumerate()
                    .map(|(i, &(o, a))| HistoryEntry {
                        step: i as u32,
                        observation: Token(o),
                        action: Token(a),
                        reward: 0.0,
                    })
                    .collect(),
            }],
            episode_return: 0.0,
        }
    }

    #[test]
    fn satisfaction_flags_forbidden_action() {
        let (spec, registry) = obedience_setup();
        let assignments: BTreeMap<String, String> =
            [("a0".to_string(), "starter".to_string())].into_iter().collect();
        // Action 0 is exclusive to the incompatible blocker role.
        let bad = history_of("a0", &[(1000, 0), (1014, 1)], 0.9);
        let report = check_satisfaction(&spec, &assignments, &registry, &[bad]).unwrap();
        let mask_entry = report
            .entries
            .iter()
            .find(|e| matches!(e.requirement, Requirement::AuthorizedActions { .. }))
            .unwrap();
        assert!(!mask_entry.satisfied);
        assert_eq!(
            mask_entry.counterexample,
            Some(Counterexample {
                episode: 0,
                agent: "a0".to_string(),
                step: Some(0)
            })
        );
    }

    #[test]
    fn satisfaction_checks_obligation_evidence() {
        let (spec, registry) = obedience_setup();
        let assignments: BTreeMap<String, String> =
            [("a0".to_string(), "starter".to_string())].into_iter().collect();

        let good = history_of("a0", &[(1014, 1), (1000, 2)], 0.9);
        let report = check_satisfaction(&spec, &assignments, &registry, &[good]).unwrap();
        assert!(report.satisfied(), "unexpected: {:?}", report.unsatisfied().collect::<Vec<_>>());

        // Never evidences the obey mission.
        let idle = history_of("a0", &[(1000, 2), (1000, 2)], 0.9);
        let report = check_satisfaction(&spec, &assignments, &registry, &[idle]).unwrap();
        let entry = report
            .entries
            .iter()
            .find(|e| matches!(e.requirement, Requirement::Obligation { .. }))
            .unwrap();
        assert!(!entry.satisfied);
    }

    #[test]
    fn satisfaction_checks_cardinalities() {
        let (mut spec, registry) = obedience_setup();
        spec.structural
            .role_cardinalities
            .insert("starter".to_string(), Cardinality::new(2, None));
        let assignments: BTreeMap<String, String> =
            [("a0".to_string(), "starter".to_string())].into_iter().collect();
        let good = history_of("a0", &[(1014, 1)], 0.9);
        let report = check_satisfaction(&spec, &assignments, &registry, &[good]).unwrap();
        let entry = report
            .entries
            .iter()
            .find(|e| matches!(e.requirement, Requirement::RoleCardinality { .. }))
            .unwrap();
        assert!(!entry.satisfied);
    }

    #[test]
    fn time_constrained_permission_violated_outside_window() {
        let (mut spec, registry) = obedience_setup();
        spec.deontic.clear();
        spec.deontic.insert(DeonticRelation {
            role: "starter".to_string(),
            mission: "obey".to_string(),
            kind: DeonticKind::Permission,
            time_constraint: [StepInterval { start: 0, end: 0 }].into_iter().collect(),
        });
        let assignments: BTreeMap<String, String> =
            [("a0".to_string(), "starter".to_string())].into_iter().collect();
        // Mission evidenced at step 1, outside the [0,0] window.
        let h = history_of("a0", &[(1000, 2), (1014, 1)], 0.9);
        let report = check_satisfaction(&spec, &assignments, &registry, &[h]).unwrap();
        let entry = report
            .entries
            .iter()
            .find(|e| matches!(e.requirement, Requirement::Permission { .. }))
            .unwrap();
        assert!(!entry.satisfied);
        assert_eq!(entry.counterexample.as_ref().unwrap().step, Some(1));
    }

    #[test]
    fn message_registry_passes_guard_validation() {
        let (spec, mut registry) = obedience_setup();
        registry.messages.push(MessageDecl {
            name: "go".to_string(),
            send_actions: [Token(7)].into_iter().collect(),
            receive_observations: [Token(1100)].into_iter().collect(),
            compliance_actions: [Token(1)].into_iter().collect(),
        });
        assert!(ConstraintGuard::new(
            spec,
            BTreeMap::new(),
            &registry,
            EnforcementMode::Hard
        )
        .is_ok());
    }
}
