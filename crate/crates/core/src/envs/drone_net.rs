//! A mesh of relay drones fighting a spreading compromise.
//!
//! Nodes sit on a fixed connected graph generated from a seed. Each step a
//! compromised node tries to infect every healthy neighbor reachable over an
//! up link. Drones can monitor themselves, restore, raise an alert that
//! neighbors receive over up links, toggle their own radio, or isolate a
//! single link for a few steps. The common reward charges one penalty unit
//! per compromised node per step.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;

use crate::history::HistoryEntry;
use crate::org::{Cardinality, DeonticKind, DeonticRelation, OrganizationalSpecification};
use crate::pattern::HistoryPattern;
use crate::relations::{ElementRef, Matcher, MessageDecl, Relation, RelationRegistry};
use crate::sim::{DecPomdp, EnvError, EpisodeRng, JointPolicy, StepOutcome};
use crate::token::{Token, Vocab, OBSERVATION_BASE};

use super::ConfigError;

pub const DRONE_NOOP: Token = Token(0);
pub const DRONE_MONITOR: Token = Token(1);
pub const DRONE_RESTORE: Token = Token(2);
pub const DRONE_ALERT: Token = Token(3);
pub const DRONE_COMMS_OFF: Token = Token(4);
pub const DRONE_COMMS_ON: Token = Token(5);
/// Isolating link slot `j` is token `ISOLATE_BASE + j`.
pub const ISOLATE_BASE: u32 = 10;

/// Self-status digit in an observation.
pub const FLAG_UNKNOWN: u8 = 0;
pub const FLAG_CLEAN: u8 = 1;
pub const FLAG_COMPROMISED: u8 = 2;

/// Link-slot digit in an observation.
pub const SLOT_ABSENT: u8 = 0;
pub const SLOT_DOWN: u8 = 1;
pub const SLOT_UP: u8 = 2;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct DroneNetConfig {
    pub nodes: usize,
    /// Probability of each non-tree edge on top of the random spanning tree.
    pub extra_edge_probability: f64,
    /// Seed for the graph itself, fixed across episodes.
    pub graph_seed: u64,
    pub infection_probability: f64,
    pub initial_compromised: usize,
    pub restore_probability: f64,
    /// Steps an isolated link stays down.
    pub isolation_duration: u32,
    pub penalty_per_compromised: f64,
    pub horizon: u32,
    pub gamma: f64,
}

impl Default for DroneNetConfig {
    fn default() -> Self {
        DroneNetConfig {
            nodes: 8,
            extra_edge_probability: 0.15,
            graph_seed: 7,
            infection_probability: 0.15,
            initial_compromised: 1,
            restore_probability: 0.8,
            isolation_duration: 5,
            penalty_per_compromised: 1.0,
            horizon: 60,
            gamma: 0.95,
        }
    }
}

impl DroneNetConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.nodes < 2 {
            return Err(ConfigError::new("need at least 2 nodes"));
        }
        if self.initial_compromised == 0 || self.initial_compromised > self.nodes {
            return Err(ConfigError::new(
                "initial_compromised must lie in 1..=nodes",
            ));
        }
        for (name, p) in [
            ("extra_edge_probability", self.extra_edge_probability),
            ("infection_probability", self.infection_probability),
            ("restore_probability", self.restore_probability),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(ConfigError::new(format!("{name} must lie in [0, 1]")));
            }
        }
        if self.isolation_duration == 0 {
            return Err(ConfigError::new("isolation_duration must be positive"));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(ConfigError::new("gamma must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Decoded drone observation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DroneView {
    pub flag: u8,
    /// One digit per link slot up to the graph's maximum degree.
    pub slots: Vec<u8>,
    pub alert: bool,
}

pub fn encode_drone_obs(view: &DroneView, max_degree: usize) -> Token {
    debug_assert_eq!(view.slots.len(), max_degree);
    let mut idx: u32 = view.flag as u32;
    for &s in &view.slots {
        idx = idx * 3 + s as u32;
    }
    idx = idx * 2 + view.alert as u32;
    Token(OBSERVATION_BASE + idx)
}

pub fn decode_drone_obs(obs: Token, max_degree: usize) -> DroneView {
    let mut idx = obs.0 - OBSERVATION_BASE;
    let alert = idx % 2 == 1;
    idx /= 2;
    let mut slots = alloc::vec![0u8; max_degree];
    for s in slots.iter_mut().rev() {
        *s = (idx % 3) as u8;
        idx /= 3;
    }
    DroneView {
        flag: idx as u8,
        slots,
        alert,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DroneState {
    pub compromised: Vec<bool>,
    pub comms: Vec<bool>,
    /// Cut links by canonical endpoint pair, down while `step < value`.
    pub cut_until: BTreeMap<(usize, usize), u32>,
    pub step: u32,
}

#[derive(Clone, Debug)]
pub struct DroneNetEnv {
    config: DroneNetConfig,
    agents: Vec<String>,
    /// Sorted neighbor lists; `adjacency[i][j]` is link slot `j` of node `i`.
    adjacency: Vec<Vec<usize>>,
    max_degree: usize,
}

fn canonical(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl DroneNetEnv {
    /// Builds the graph from `graph_seed`: a random spanning tree plus
    /// independent extra edges.
    pub fn new(config: DroneNetConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        let n = config.nodes;
        let mut rng = EpisodeRng::seed_from_u64(config.graph_seed);
        let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
        for i in 1..n {
            let parent = rng.random_range(0..i);
            edges.insert(canonical(i, parent));
        }
        for i in 0..n {
            for j in i + 1..n {
                if !edges.contains(&(i, j)) && rng.random::<f64>() < config.extra_edge_probability
                {
                    edges.insert((i, j));
                }
            }
        }
        Self::from_edges(config, edges)
    }

    /// Builds on an explicit edge list instead of a seeded graph.
    pub fn with_graph(
        config: DroneNetConfig,
        edges: &[(usize, usize)],
    ) -> Result<Self, ConfigError> {
        config.validate()?;
        let mut set: BTreeSet<(usize, usize)> = BTreeSet::new();
        for &(a, b) in edges {
            if a == b {
                return Err(ConfigError::new("self loops are not allowed"));
            }
            if a >= config.nodes || b >= config.nodes {
                return Err(ConfigError::new("edge endpoint out of range"));
            }
            set.insert(canonical(a, b));
        }
        Self::from_edges(config, set)
    }

    fn from_edges(
        config: DroneNetConfig,
        edges: BTreeSet<(usize, usize)>,
    ) -> Result<Self, ConfigError> {
        let n = config.nodes;
        let mut adjacency: Vec<Vec<usize>> = alloc::vec![Vec::new(); n];
        for &(a, b) in &edges {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        let max_degree = adjacency.iter().map(Vec::len).max().unwrap_or(0);
        // Observation index must fit the token range: 3^(max_degree+1) * 2.
        let mut obs_count: u64 = 2;
        for _ in 0..max_degree + 1 {
            obs_count = obs_count.saturating_mul(3);
        }
        if obs_count > (u32::MAX - OBSERVATION_BASE) as u64 {
            return Err(ConfigError::new(
                "maximum degree too high for the observation encoding",
            ));
        }
        let agents = (0..n).map(|i| format!("drone_{i}")).collect();
        Ok(DroneNetEnv {
            config,
            agents,
            adjacency,
            max_degree,
        })
    }

    pub fn config(&self) -> &DroneNetConfig {
        &self.config
    }

    pub fn adjacency(&self) -> &[Vec<usize>] {
        &self.adjacency
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    fn edge_up(&self, state: &DroneState, a: usize, b: usize) -> bool {
        if !state.comms[a] || !state.comms[b] {
            return false;
        }
        match state.cut_until.get(&canonical(a, b)) {
            Some(&until) => state.step >= until,
            None => true,
        }
    }

    fn observe(&self, state: &DroneState, i: usize, monitored: bool, alerts: &[bool]) -> Token {
        let flag = if monitored {
            if state.compromised[i] {
                FLAG_COMPROMISED
            } else {
                FLAG_CLEAN
            }
        } else {
            FLAG_UNKNOWN
        };
        let mut slots = alloc::vec![SLOT_ABSENT; self.max_degree];
        for (k, &v) in self.adjacency[i].iter().enumerate() {
            slots[k] = if self.edge_up(state, i, v) {
                SLOT_UP
            } else {
                SLOT_DOWN
            };
        }
        let alert = self.adjacency[i]
            .iter()
            .any(|&v| alerts[v] && self.edge_up(state, i, v));
        encode_drone_obs(
            &DroneView { flag, slots, alert },
            self.max_degree,
        )
    }

    fn observations(&self, state: &DroneState, monitored: &[bool], alerts: &[bool]) -> Vec<Token> {
        (0..self.config.nodes)
            .map(|i| self.observe(state, i, monitored[i], alerts))
            .collect()
    }
}

impl DecPomdp for DroneNetEnv {
    type State = DroneState;

    fn env_id(&self) -> &str {
        "drone_net"
    }

    fn agents(&self) -> &[String] {
        &self.agents
    }

    fn gamma(&self) -> f64 {
        self.config.gamma
    }

    fn horizon(&self) -> u32 {
        self.config.horizon
    }

    fn action_vocab(&self, agent_index: usize) -> Vocab {
        let degree = self.adjacency[agent_index].len() as u32;
        let base = Vocab::from_range(0, 5);
        if degree == 0 {
            base
        } else {
            let isolates = Vocab::from_range(ISOLATE_BASE, ISOLATE_BASE + degree - 1);
            Vocab::merged([&base, &isolates])
        }
    }

    fn observation_vocab(&self, _agent_index: usize) -> Vocab {
        let count = 2 * 3u32.pow(self.max_degree as u32 + 1);
        Vocab::from_range(OBSERVATION_BASE, OBSERVATION_BASE + count - 1)
    }

    fn init(&self, rng: &mut EpisodeRng) -> (DroneState, Vec<Token>) {
        let n = self.config.nodes;
        let mut compromised = alloc::vec![false; n];
        let mut seeded = 0;
        while seeded < self.config.initial_compromised {
            let c = rng.random_range(0..n);
            if !compromised[c] {
                compromised[c] = true;
                seeded += 1;
            }
        }
        let state = DroneState {
            compromised,
            comms: alloc::vec![true; n],
            cut_until: BTreeMap::new(),
            step: 0,
        };
        let monitored = alloc::vec![false; n];
        let alerts = alloc::vec![false; n];
        let obs = self.observations(&state, &monitored, &alerts);
        (state, obs)
    }

    fn step(
        &self,
        state: &mut DroneState,
        joint_action: &[Token],
        rng: &mut EpisodeRng,
    ) -> Result<StepOutcome, EnvError> {
        let n = self.config.nodes;
        if joint_action.len() != n {
            return Err(EnvError::WrongAgentCount {
                expected: n,
                got: joint_action.len(),
            });
        }
        let mut monitored = alloc::vec![false; n];
        let mut alerts = alloc::vec![false; n];
        // Drones act in node order; restore draws happen only for
        // compromised nodes, keeping the draw sequence deterministic.
        for (i, &a) in joint_action.iter().enumerate() {
            match a {
                DRONE_NOOP => {}
                DRONE_MONITOR => monitored[i] = true,
                DRONE_RESTORE => {
                    if state.compromised[i]
                        && rng.random::<f64>() < self.config.restore_probability
                    {
                        state.compromised[i] = false;
                    }
                }
                DRONE_ALERT => alerts[i] = true,
                DRONE_COMMS_OFF => state.comms[i] = false,
                DRONE_COMMS_ON => state.comms[i] = true,
                Token(t) if t >= ISOLATE_BASE => {
                    let slot = (t - ISOLATE_BASE) as usize;
                    match self.adjacency[i].get(slot) {
                        Some(&v) => {
                            state.cut_until.insert(
                                canonical(i, v),
                                state.step + self.config.isolation_duration,
                            );
                        }
                        None => {
                            return Err(EnvError::IllegalAction {
                                agent_index: i,
                                token: a,
                            })
                        }
                    }
                }
                other => {
                    return Err(EnvError::IllegalAction {
                        agent_index: i,
                        token: other,
                    })
                }
            }
        }

        // Spread from the pre-step infection snapshot; each still-healthy
        // neighbor faces one draw per infected neighbor, in ascending node
        // order.
        let snapshot = state.compromised.clone();
        for u in 0..n {
            if !snapshot[u] {
                continue;
            }
            for &v in &self.adjacency[u] {
                if !state.compromised[v]
                    && self.edge_up(state, u, v)
                    && rng.random::<f64>() < self.config.infection_probability
                {
                    state.compromised[v] = true;
                }
            }
        }

        let infected = state.compromised.iter().filter(|&&c| c).count();
        let reward = -self.config.penalty_per_compromised * infected as f64;
        state.step += 1;
        state.cut_until.retain(|_, &mut until| state.step < until);
        Ok(StepOutcome {
            observations: self.observations(state, &monitored, &alerts),
            reward,
            terminal: false,
        })
    }
}

/// Handwritten containment behavior: monitor by default, alert once then
/// keep restoring while compromised, and isolate a rotating link slot when a
/// neighbor's alert arrives.
pub struct ScriptedDefender {
    degrees: Vec<usize>,
    max_degree: usize,
}

impl ScriptedDefender {
    pub fn new(env: &DroneNetEnv) -> Self {
        ScriptedDefender {
            degrees: env.adjacency.iter().map(Vec::len).collect(),
            max_degree: env.max_degree,
        }
    }
}

impl JointPolicy for ScriptedDefender {
    fn decide(
        &self,
        agent_index: usize,
        entries: &[HistoryEntry],
        observation: Token,
        allowed: &BTreeSet<Token>,
        _rng: &mut EpisodeRng,
    ) -> Token {
        let view = decode_drone_obs(observation, self.max_degree);
        let degree = self.degrees[agent_index];
        let preferred = if view.flag == FLAG_COMPROMISED {
            let already_alerted = entries.iter().any(|e| e.action == DRONE_ALERT);
            if already_alerted {
                DRONE_RESTORE
            } else {
                DRONE_ALERT
            }
        } else if view.alert && degree > 0 {
            Token(ISOLATE_BASE + (entries.len() % degree) as u32)
        } else {
            DRONE_MONITOR
        };
        for a in [preferred, DRONE_MONITOR, DRONE_NOOP] {
            if allowed.contains(&a) {
                return a;
            }
        }
        *allowed.iter().next().expect("allowed set is never empty")
    }
}

/// Default grounding for this environment: the restore reaction to a
/// compromised self-status identifies the medic role, radio toggles identify
/// the auditor, and the alert broadcast is a declared message whose
/// compliance is any link isolation. Every restore reaction is also tied to
/// the "contain" mission through the anchored demand shape and the
/// containment evidence shape.
pub fn default_registry(env: &DroneNetEnv) -> RelationRegistry {
    let mut registry = RelationRegistry::default();
    let max_degree = env.max_degree();

    let compromised_obs: BTreeSet<Token> = compromised_observations(max_degree).collect();
    registry.relations.push(Relation {
        matcher: Matcher::Tokens {
            observations: compromised_obs.clone(),
            actions: [DRONE_RESTORE].into_iter().collect(),
        },
        target: ElementRef::Role(String::from("medic")),
    });
    registry.relations.push(Relation {
        matcher: Matcher::Tokens {
            observations: BTreeSet::new(),
            actions: [DRONE_COMMS_OFF, DRONE_COMMS_ON].into_iter().collect(),
        },
        target: ElementRef::Role(String::from("auditor")),
    });

    for obs in &compromised_obs {
        registry.relations.push(Relation {
            matcher: Matcher::Pattern(
                HistoryPattern::parse(&format!(".*?{},{}", obs.0, DRONE_RESTORE.0))
                    .expect("well-formed anchored shape"),
            ),
            target: ElementRef::Mission(String::from("contain")),
        });
        registry.relations.push(Relation {
            matcher: Matcher::Pattern(
                HistoryPattern::parse(&format!(".*{},{}.*", obs.0, DRONE_RESTORE.0))
                    .expect("well-formed containment shape"),
            ),
            target: ElementRef::Mission(String::from("contain")),
        });
    }

    let isolates: BTreeSet<Token> = (0..max_degree as u32)
        .map(|j| Token(ISOLATE_BASE + j))
        .collect();
    registry.messages.push(MessageDecl {
        name: String::from("alert"),
        send_actions: [DRONE_ALERT].into_iter().collect(),
        receive_observations: alert_observations(max_degree).collect(),
        compliance_actions: isolates,
    });

    registry
}

/// All observation tokens whose self-status digit reads compromised.
fn compromised_observations(max_degree: usize) -> impl Iterator<Item = Token> {
    let tail = 2 * 3u32.pow(max_degree as u32);
    (0..tail).map(move |rest| Token(OBSERVATION_BASE + FLAG_COMPROMISED as u32 * tail + rest))
}

/// All observation tokens whose alert bit is set.
fn alert_observations(max_degree: usize) -> impl Iterator<Item = Token> {
    let count = 2 * 3u32.pow(max_degree as u32 + 1);
    (0..count)
        .filter(|idx| idx % 2 == 1)
        .map(|idx| Token(OBSERVATION_BASE + idx))
}

/// Constraining package for guarded runs: every drone is a medic obliged to
/// restore the moment monitoring reveals a compromise, and the radio
/// toggles stay with the unassigned auditor role.
pub fn constrained_package(
    env: &DroneNetEnv,
) -> (OrganizationalSpecification, BTreeMap<String, String>) {
    let mut spec = OrganizationalSpecification::empty();
    spec.structural.roles.insert(String::from("medic"));
    spec.structural.roles.insert(String::from("auditor"));
    spec.structural
        .role_cardinalities
        .insert(String::from("medic"), Cardinality::new(1, None));
    spec.functional.goals.insert(String::from("stay_clean"));
    spec.functional.missions.insert(
        String::from("contain"),
        [String::from("stay_clean")].into_iter().collect(),
    );
    spec.deontic.insert(DeonticRelation {
        role: String::from("medic"),
        mission: String::from("contain"),
        kind: DeonticKind::Obligation,
        time_constraint: Default::default(),
    });

    let assignments = env
        .agents()
        .iter()
        .map(|a| (a.clone(), String::from("medic")))
        .collect();
    (spec, assignments)
}
