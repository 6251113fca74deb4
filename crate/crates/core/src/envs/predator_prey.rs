//! Pursuit on a small grid: one far-sighted leader, short-sighted followers,
//! and an evading prey.
//!
//! The leader observes every position and can attach a broadcast message to
//! its move. Followers observe only their eight-cell surroundings plus the
//! last broadcast. Each non-capture step costs a small penalty; any predator
//! sharing the prey's cell ends the episode with the capture reward.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::history::HistoryEntry;
use crate::org::{DeonticKind, DeonticRelation, OrganizationalSpecification};
use crate::pattern::HistoryPattern;
use crate::relations::{ElementRef, Matcher, MessageDecl, Relation, RelationRegistry};
use crate::sim::{DecPomdp, EnvError, EpisodeRng, JointPolicy, StepOutcome};
use crate::token::{Token, Vocab, OBSERVATION_BASE};

use super::ConfigError;

/// Follower moves are `FOLLOWER_MOVE_BASE + direction`.
pub const FOLLOWER_MOVE_BASE: u32 = 600;
/// Leader observations start here; follower observations start at
/// `OBSERVATION_BASE` and stay well below this.
pub const LEADER_OBS_BASE: u32 = 100_000;

pub const MOVE_NORTH: u32 = 0;
pub const MOVE_EAST: u32 = 1;
pub const MOVE_SOUTH: u32 = 2;
pub const MOVE_WEST: u32 = 3;
pub const MOVE_STAY: u32 = 4;

/// Ring order for follower occupancy bits, starting north and going
/// clockwise.
const NEIGHBOR_OFFSETS: [(i64, i64); 8] = [
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
];

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct PredatorPreyConfig {
    pub grid: u32,
    pub followers: usize,
    /// Distinct broadcast messages; 0 always means silence.
    pub messages: u32,
    pub capture_reward: f64,
    pub step_penalty: f64,
    pub horizon: u32,
    pub gamma: f64,
}

impl Default for PredatorPreyConfig {
    fn default() -> Self {
        PredatorPreyConfig {
            grid: 7,
            followers: 2,
            messages: 5,
            capture_reward: 10.0,
            step_penalty: 0.05,
            horizon: 100,
            gamma: 0.95,
        }
    }
}

impl PredatorPreyConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.grid < 2 {
            return Err(ConfigError::new("grid side must be at least 2"));
        }
        if self.followers == 0 {
            return Err(ConfigError::new("need at least one follower"));
        }
        if self.messages == 0 {
            return Err(ConfigError::new("need at least one broadcast message"));
        }
        if 5 * (self.messages + 1) > FOLLOWER_MOVE_BASE {
            return Err(ConfigError::new(
                "too many messages: leader actions would collide with follower moves",
            ));
        }
        let cells = (self.grid as u64) * (self.grid as u64);
        if cells < self.followers as u64 + 3 {
            return Err(ConfigError::new("grid too small for all entities plus a free cell"));
        }
        let mut obs_count: u64 = 1;
        for _ in 0..self.followers + 2 {
            obs_count = obs_count.saturating_mul(cells);
        }
        if obs_count > (u32::MAX - LEADER_OBS_BASE) as u64 {
            return Err(ConfigError::new(
                "grid and follower count overflow the leader observation range",
            ));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(ConfigError::new("gamma must lie in [0, 1]"));
        }
        Ok(())
    }
}

pub fn encode_leader_action(direction: u32, message: u32, messages: u32) -> Token {
    Token(direction * (messages + 1) + message)
}

pub fn decode_leader_action(token: Token, messages: u32) -> (u32, u32) {
    (token.0 / (messages + 1), token.0 % (messages + 1))
}

pub fn follower_move(direction: u32) -> Token {
    Token(FOLLOWER_MOVE_BASE + direction)
}

pub fn encode_follower_obs(occupancy: u8, message: u32, messages: u32) -> Token {
    Token(OBSERVATION_BASE + occupancy as u32 * (messages + 1) + message)
}

pub fn decode_follower_obs(obs: Token, messages: u32) -> (u8, u32) {
    let idx = obs.0 - OBSERVATION_BASE;
    ((idx / (messages + 1)) as u8, idx % (messages + 1))
}

/// Positions visible to the leader, decoded from one observation token.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LeaderView {
    pub leader: u32,
    pub followers: Vec<u32>,
    pub prey: u32,
}

pub fn encode_leader_obs(view: &LeaderView, grid: u32) -> Token {
    let cells = grid * grid;
    let mut idx: u64 = 0;
    for &p in core::iter::once(&view.leader)
        .chain(view.followers.iter())
        .chain(core::iter::once(&view.prey))
    {
        idx = idx * cells as u64 + p as u64;
    }
    Token(LEADER_OBS_BASE + idx as u32)
}

pub fn decode_leader_obs(obs: Token, grid: u32, followers: usize) -> LeaderView {
    let cells = (grid * grid) as u64;
    let mut idx = (obs.0 - LEADER_OBS_BASE) as u64;
    let mut rev: Vec<u32> = Vec::with_capacity(followers + 2);
    for _ in 0..followers + 2 {
        rev.push((idx % cells) as u32);
        idx /= cells;
    }
    rev.reverse();
    let prey = rev.pop().expect("at least leader and prey");
    LeaderView {
        leader: rev[0],
        followers: rev[1..].to_vec(),
        prey,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredatorState {
    pub leader: u32,
    pub followers: Vec<u32>,
    pub prey: u32,
    /// Message attached to the leader's previous action; 0 means silence.
    pub broadcast: u32,
}

#[derive(Clone, Debug)]
pub struct PredatorPreyEnv {
    config: PredatorPreyConfig,
    agents: Vec<String>,
}

impl PredatorPreyEnv {
    pub fn new(config: PredatorPreyConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        let mut agents = Vec::with_capacity(config.followers + 1);
        agents.push(String::from("leader"));
        for i in 0..config.followers {
            agents.push(format!("follower_{i}"));
        }
        Ok(PredatorPreyEnv { config, agents })
    }

    pub fn config(&self) -> &PredatorPreyConfig {
        &self.config
    }

    fn cells(&self) -> u32 {
        self.config.grid * self.config.grid
    }

    fn xy(&self, pos: u32) -> (u32, u32) {
        (pos % self.config.grid, pos / self.config.grid)
    }

    fn apply_move(&self, pos: u32, direction: u32) -> u32 {
        let g = self.config.grid;
        let (x, y) = self.xy(pos);
        let (nx, ny) = match direction {
            MOVE_NORTH => (x as i64, y as i64 - 1),
            MOVE_EAST => (x as i64 + 1, y as i64),
            MOVE_SOUTH => (x as i64, y as i64 + 1),
            MOVE_WEST => (x as i64 - 1, y as i64),
            _ => (x as i64, y as i64),
        };
        if nx < 0 || ny < 0 || nx >= g as i64 || ny >= g as i64 {
            pos
        } else {
            (ny as u32) * g + nx as u32
        }
    }

    fn manhattan(&self, a: u32, b: u32) -> u32 {
        let (ax, ay) = self.xy(a);
        let (bx, by) = self.xy(b);
        ax.abs_diff(bx) + ay.abs_diff(by)
    }

    fn predators<'a>(&self, state: &'a PredatorState) -> impl Iterator<Item = u32> + 'a {
        core::iter::once(state.leader).chain(state.followers.iter().copied())
    }

    fn occupancy(&self, state: &PredatorState, follower_index: usize) -> u8 {
        let g = self.config.grid as i64;
        let me = state.followers[follower_index];
        let (x, y) = self.xy(me);
        let mut bits: u8 = 0;
        for (k, (dx, dy)) in NEIGHBOR_OFFSETS.iter().enumerate() {
            let nx = x as i64 + dx;
            let ny = y as i64 + dy;
            if nx < 0 || ny < 0 || nx >= g || ny >= g {
                continue;
            }
            let cell = (ny as u32) * self.config.grid + nx as u32;
            let occupied = state.leader == cell
                || state.prey == cell
                || state
                    .followers
                    .iter()
                    .enumerate()
                    .any(|(j, &p)| j != follower_index && p == cell);
            if occupied {
                bits |= 1 << k;
            }
        }
        bits
    }

    fn observations(&self, state: &PredatorState) -> Vec<Token> {
        let mut obs = Vec::with_capacity(self.config.followers + 1);
        obs.push(encode_leader_obs(
            &LeaderView {
                leader: state.leader,
                followers: state.followers.clone(),
                prey: state.prey,
            },
            self.config.grid,
        ));
        for i in 0..self.config.followers {
            obs.push(encode_follower_obs(
                self.occupancy(state, i),
                state.broadcast,
                self.config.messages,
            ));
        }
        obs
    }

    /// Nearest predator to the prey, ties broken by leader first then
    /// follower order.
    fn nearest_predator(&self, state: &PredatorState) -> u32 {
        self.predators(state)
            .min_by_key(|&p| self.manhattan(p, state.prey))
            .expect("at least the leader exists")
    }

    fn evade(&self, state: &mut PredatorState) {
        let nearest = self.nearest_predator(state);
        let occupied: BTreeSet<u32> = self.predators(state).collect();
        let current = self.manhattan(state.prey, nearest);
        for dir in [MOVE_NORTH, MOVE_EAST, MOVE_SOUTH, MOVE_WEST] {
            let cand = self.apply_move(state.prey, dir);
            if cand == state.prey || occupied.contains(&cand) {
                continue;
            }
            if self.manhattan(cand, nearest) > current {
                state.prey = cand;
                return;
            }
        }
    }
}

impl DecPomdp for PredatorPreyEnv {
    type State = PredatorState;

    fn env_id(&self) -> &str {
        "predator_prey"
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
        if agent_index == 0 {
            Vocab::from_range(0, 5 * (self.config.messages + 1) - 1)
        } else {
            Vocab::from_range(FOLLOWER_MOVE_BASE, FOLLOWER_MOVE_BASE + 4)
        }
    }

    fn observation_vocab(&self, agent_index: usize) -> Vocab {
        if agent_index == 0 {
            let cells = self.cells() as u64;
            let count = cells.pow(self.config.followers as u32 + 2);
            Vocab::from_range(LEADER_OBS_BASE, LEADER_OBS_BASE + count as u32 - 1)
        } else {
            let count = 256 * (self.config.messages + 1);
            Vocab::from_range(OBSERVATION_BASE, OBSERVATION_BASE + count - 1)
        }
    }

    fn init(&self, rng: &mut EpisodeRng) -> (PredatorState, Vec<Token>) {
        let cells = self.cells();
        let mut used: BTreeSet<u32> = BTreeSet::new();
        let mut draw = |rng: &mut EpisodeRng| loop {
            let c = rng.random_range(0..cells);
            if used.insert(c) {
                return c;
            }
        };
        let leader = draw(rng);
        let followers: Vec<u32> = (0..self.config.followers).map(|_| draw(rng)).collect();
        let prey = draw(rng);
        let state = PredatorState {
            leader,
            followers,
            prey,
            broadcast: 0,
        };
        let obs = self.observations(&state);
        (state, obs)
    }

    fn step(
        &self,
        state: &mut PredatorState,
        joint_action: &[Token],
        _rng: &mut EpisodeRng,
    ) -> Result<StepOutcome, EnvError> {
        let n = self.config.followers + 1;
        if joint_action.len() != n {
            return Err(EnvError::WrongAgentCount {
                expected: n,
                got: joint_action.len(),
            });
        }
        let k = self.config.messages;
        if joint_action[0].0 >= 5 * (k + 1) {
            return Err(EnvError::IllegalAction {
                agent_index: 0,
                token: joint_action[0],
            });
        }
        let (leader_move, message) = decode_leader_action(joint_action[0], k);
        let mut follower_moves = Vec::with_capacity(self.config.followers);
        for (i, t) in joint_action.iter().enumerate().skip(1) {
            if t.0 < FOLLOWER_MOVE_BASE || t.0 > FOLLOWER_MOVE_BASE + 4 {
                return Err(EnvError::IllegalAction {
                    agent_index: i,
                    token: *t,
                });
            }
            follower_moves.push(t.0 - FOLLOWER_MOVE_BASE);
        }

        // Predators move simultaneously from their current cells and may
        // stack; the prey reacts afterwards and never enters their cells.
        state.leader = self.apply_move(state.leader, leader_move);
        for (i, mv) in follower_moves.into_iter().enumerate() {
            state.followers[i] = self.apply_move(state.followers[i], mv);
        }
        state.broadcast = message;

        let captured = self.predators(state).any(|p| p == state.prey);
        if captured {
            return Ok(StepOutcome {
                observations: self.observations(state),
                reward: self.config.capture_reward,
                terminal: true,
            });
        }
        self.evade(state);
        Ok(StepOutcome {
            observations: self.observations(state),
            reward: -self.config.step_penalty,
            terminal: false,
        })
    }
}

/// Direction that closes the larger coordinate gap first; `MOVE_STAY` only
/// when already on the target.
fn chase_direction(grid: u32, from: u32, to: u32) -> u32 {
    let (fx, fy) = (from % grid, from / grid);
    let (tx, ty) = (to % grid, to / grid);
    let dx = tx as i64 - fx as i64;
    let dy = ty as i64 - fy as i64;
    if dx.abs() >= dy.abs() && dx != 0 {
        if dx > 0 {
            MOVE_EAST
        } else {
            MOVE_WEST
        }
    } else if dy > 0 {
        MOVE_SOUTH
    } else if dy < 0 {
        MOVE_NORTH
    } else {
        MOVE_STAY
    }
}

/// Handwritten pack behavior: the leader chases the prey directly and
/// broadcasts the chase direction computed for the first follower; followers
/// execute broadcast orders, or drift toward a visible neighbor when the
/// channel is silent.
pub struct ScriptedPack {
    grid: u32,
    followers: usize,
    messages: u32,
}

impl ScriptedPack {
    pub fn new(config: &PredatorPreyConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        if config.messages < 4 {
            return Err(ConfigError::new(
                "scripted pack needs one message per compass direction",
            ));
        }
        Ok(ScriptedPack {
            grid: config.grid,
            followers: config.followers,
            messages: config.messages,
        })
    }
}

/// Follower move for a broadcast message.
pub fn ordered_move(message: u32) -> u32 {
    if message >= 1 && message <= 4 {
        message - 1
    } else {
        MOVE_STAY
    }
}

impl JointPolicy for ScriptedPack {
    fn decide(
        &self,
        agent_index: usize,
        _entries: &[HistoryEntry],
        observation: Token,
        allowed: &BTreeSet<Token>,
        _rng: &mut EpisodeRng,
    ) -> Token {
        let fallback = || *allowed.iter().next().expect("allowed set is never empty");
        if agent_index == 0 {
            let view = decode_leader_obs(observation, self.grid, self.followers);
            let mv = chase_direction(self.grid, view.leader, view.prey);
            let order = chase_direction(self.grid, view.followers[0], view.prey);
            // The guard may insist on a broadcast; order + 1 is never 0.
            let preferred = encode_leader_action(mv, order + 1, self.messages);
            if allowed.contains(&preferred) {
                return preferred;
            }
            for msg in 1..=self.messages {
                let t = encode_leader_action(mv, msg, self.messages);
                if allowed.contains(&t) {
                    return t;
                }
            }
            fallback()
        } else {
            let (occupancy, message) = decode_follower_obs(observation, self.messages);
            let mv = if message > 0 {
                ordered_move(message)
            } else if occupancy != 0 {
                // Drift toward the first occupied ring cell.
                const DIR_FOR_BIT: [u32; 8] = [
                    MOVE_NORTH, MOVE_EAST, MOVE_EAST, MOVE_SOUTH, MOVE_SOUTH, MOVE_WEST,
                    MOVE_WEST, MOVE_NORTH,
                ];
                DIR_FOR_BIT[occupancy.trailing_zeros() as usize]
            } else {
                MOVE_STAY
            };
            let preferred = follower_move(mv);
            if allowed.contains(&preferred) {
                return preferred;
            }
            let stay = follower_move(MOVE_STAY);
            if allowed.contains(&stay) {
                return stay;
            }
            fallback()
        }
    }
}

/// Default grounding of organizational elements in this environment's
/// tokens: broadcast actions identify the leader, compass moves identify
/// followers, silent moves identify a never-broadcasting scout, and each
/// message declares its compliance move. Every ordered-move reaction is tied
/// to the "obey" mission twice: an anchored shape that demands the move
/// while the order stands, and a containment shape that recognizes past
/// compliance anywhere in a history.
pub fn default_registry(config: &PredatorPreyConfig) -> RelationRegistry {
    let k = config.messages;
    let mut registry = RelationRegistry::default();

    let broadcast_actions: BTreeSet<Token> = (0..5)
        .flat_map(|mv| (1..=k).map(move |m| encode_leader_action(mv, m, k)))
        .collect();
    let silent_actions: BTreeSet<Token> =
        (0..5).map(|mv| encode_leader_action(mv, 0, k)).collect();
    let follower_actions: BTreeSet<Token> = (0..=4).map(follower_move).collect();

    registry.relations.push(Relation {
        matcher: Matcher::Tokens {
            observations: BTreeSet::new(),
            actions: broadcast_actions,
        },
        target: ElementRef::Role(String::from("leader")),
    });
    registry.relations.push(Relation {
        matcher: Matcher::Tokens {
            observations: BTreeSet::new(),
            actions: follower_actions,
        },
        target: ElementRef::Role(String::from("follower")),
    });
    registry.relations.push(Relation {
        matcher: Matcher::Tokens {
            observations: BTreeSet::new(),
            actions: silent_actions,
        },
        target: ElementRef::Role(String::from("silent_scout")),
    });

    for m in 1..=k {
        registry.messages.push(MessageDecl {
            name: format!("order_{m}"),
            send_actions: (0..5).map(|mv| encode_leader_action(mv, m, k)).collect(),
            receive_observations: (0..=255u8)
                .map(|occ| encode_follower_obs(occ, m, k))
                .collect(),
            compliance_actions: [follower_move(ordered_move(m))].into_iter().collect(),
        });
        let act = follower_move(ordered_move(m));
        for occ in 0..=255u8 {
            let obs = encode_follower_obs(occ, m, k);
            registry.relations.push(Relation {
                matcher: Matcher::Pattern(
                    HistoryPattern::parse(&format!(".*?{},{}", obs.0, act.0))
                        .expect("well-formed anchored shape"),
                ),
                target: ElementRef::Mission(String::from("obey")),
            });
            registry.relations.push(Relation {
                matcher: Matcher::Pattern(
                    HistoryPattern::parse(&format!(".*{},{}.*", obs.0, act.0))
                        .expect("well-formed containment shape"),
                ),
                target: ElementRef::Mission(String::from("obey")),
            });
        }
    }

    for occ in 1..=255u8 {
        for m in 0..=k {
            registry
                .copresence_observations
                .insert(encode_follower_obs(occ, m, k));
        }
    }

    registry
}

/// Constraining package for guarded runs: followers are obliged to execute
/// standing orders, and the leader, incompatible with the silent scout that
/// owns the message-free moves, must broadcast on every step.
pub fn constrained_package(
    config: &PredatorPreyConfig,
) -> (OrganizationalSpecification, BTreeMap<String, String>) {
    let mut spec = OrganizationalSpecification::empty();
    spec.structural.roles.insert(String::from("leader"));
    spec.structural.roles.insert(String::from("follower"));
    spec.structural.roles.insert(String::from("silent_scout"));
    spec.functional.goals.insert(String::from("respond_to_orders"));
    spec.functional.missions.insert(
        String::from("obey"),
        [String::from("respond_to_orders")].into_iter().collect(),
    );
    spec.deontic.insert(DeonticRelation {
        role: String::from("follower"),
        mission: String::from("obey"),
        kind: DeonticKind::Obligation,
        time_constraint: Default::default(),
    });

    let mut assignments = BTreeMap::new();
    assignments.insert(String::from("leader"), String::from("leader"));
    for i in 0..config.followers {
        assignments.insert(format!("follower_{i}"), String::from("follower"));
    }
    (spec, assignments)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::{ConstraintGuard, EnforcementMode};
    use crate::sim::run_episode;
    use rand::SeedableRng;

    fn small_config() -> PredatorPreyConfig {
        PredatorPreyConfig {
            grid: 5,
            followers: 1,
            messages: 4,
            horizon: 60,
            ..Default::default()
        }
    }

    #[test]
    fn leader_obs_codec_round_trip() {
        let view = LeaderView {
            leader: 3,
            followers: alloc::vec![11, 24],
            prey: 17,
        };
        let t = encode_leader_obs(&view, 5);
        assert_eq!(decode_leader_obs(t, 5, 2), view);
    }

    #[test]
    fn leader_action_codec_round_trip() {
        for mv in 0..5 {
            for msg in 0..=5 {
                let t = encode_leader_action(mv, msg, 5);
                assert_eq!(decode_leader_action(t, 5), (mv, msg));
                assert!(t.0 < FOLLOWER_MOVE_BASE);
            }
        }
    }

    #[test]
    fn follower_obs_carries_broadcast() {
        let t = encode_follower_obs(0b0000_0100, 3, 5);
        assert_eq!(decode_follower_obs(t, 5), (0b0000_0100, 3));
    }

    #[test]
    fn prey_runs_from_nearest_predator() {
        let env = PredatorPreyEnv::new(small_config()).unwrap();
        // Leader west of the prey, follower far away: prey must not move
        // toward the leader, and must end farther from it.
        let mut state = PredatorState {
            leader: 10, // (0, 2)
            followers: alloc::vec![24],
            prey: 12, // (2, 2)
            broadcast: 0,
        };
        let before = env.manhattan(state.prey, state.leader);
        env.evade(&mut state);
        assert!(env.manhattan(state.prey, state.leader) > before);
    }

    #[test]
    fn cornered_prey_stays_put() {
        let env = PredatorPreyEnv::new(small_config()).unwrap();
        // Prey in the northwest corner, predators on both exits.
        let mut state = PredatorState {
            leader: 1,
            followers: alloc::vec![5],
            prey: 0,
            broadcast: 0,
        };
        env.evade(&mut state);
        assert_eq!(state.prey, 0);
    }

    #[test]
    fn capture_pays_and_terminates() {
        let env = PredatorPreyEnv::new(small_config()).unwrap();
        let mut state = PredatorState {
            leader: 7, // (2, 1), prey directly south at (2, 2)
            followers: alloc::vec![24],
            prey: 12,
            broadcast: 0,
        };
        let mut rng = EpisodeRng::seed_from_u64(0);
        let joint = alloc::vec![
            encode_leader_action(MOVE_SOUTH, 1, 4),
            follower_move(MOVE_STAY),
        ];
        let out = env.step(&mut state, &joint, &mut rng).unwrap();
        assert!(out.terminal);
        assert!((out.reward - 10.0).abs() < 1e-12);
        assert_eq!(state.leader, state.prey);
    }

    #[test]
    fn scripted_pack_captures_reliably() {
        let config = small_config();
        let env = PredatorPreyEnv::new(config.clone()).unwrap();
        let policy = ScriptedPack::new(&config).unwrap();
        for seed in 0..40 {
            let h = run_episode(&env, &policy, None, seed, 1000 + seed).unwrap();
            let last_reward = h.agents[0].entries.last().unwrap().reward;
            assert!(
                (last_reward - config.capture_reward).abs() < 1e-12,
                "no capture with seed {seed}"
            );
        }
    }

    #[test]
    fn guard_forces_broadcasts_and_obedience() {
        let config = small_config();
        let env = PredatorPreyEnv::new(config.clone()).unwrap();
        let registry = default_registry(&config);
        let (spec, assignments) = constrained_package(&config);
        let guard =
            ConstraintGuard::new(spec, assignments, &registry, EnforcementMode::Hard).unwrap();
        let policy = ScriptedPack::new(&config).unwrap();
        for seed in 0..10 {
            let h = run_episode(&env, &policy, Some(&guard), seed, 2000 + seed).unwrap();
            // Leader never silent.
            for e in &h.agents[0].entries {
                let (_, msg) = decode_leader_action(e.action, config.messages);
                assert!(msg > 0, "silent broadcast slipped through");
            }
            // Followers always execute standing orders.
            for f in &h.agents[1..] {
                for e in &f.entries {
                    let (_, msg) = decode_follower_obs(e.observation, config.messages);
                    if msg > 0 {
                        assert_eq!(e.action, follower_move(ordered_move(msg)));
                    }
                }
            }
        }
    }

    #[test]
    fn random_play_under_guard_stays_legal() {
        let config = small_config();
        let env = PredatorPreyEnv::new(config.clone()).unwrap();
        let registry = default_registry(&config);
        let (spec, assignments) = constrained_package(&config);
        let guard =
            ConstraintGuard::new(spec, assignments, &registry, EnforcementMode::Hard).unwrap();
        for seed in 0..5 {
            run_episode(&env, &crate::sim::RandomPolicy, Some(&guard), seed, seed).unwrap();
        }
    }

    #[test]
    fn tiny_grid_rejected() {
        let config = PredatorPreyConfig {
            grid: 1,
            ..Default::default()
        };
        assert!(config.validate().is_err());
    }
}
