//! Episode runner for partially observable multi-agent environments with a
//! common reward.
//!
//! One seeded generator drives everything in an episode: environment
//! initialization, per-agent policy draws, and environment transitions, in a
//! fixed call order, so a (seed, policy, guard) triple fully determines the
//! recorded history.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;

use crate::constraints::{ConstraintGuard, EmptyAuthorizedSet};
use crate::history::{AgentHistory, HistoryEntry, JointHistory};
use crate::token::{Token, Vocab};

pub type EpisodeRng = rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    /// Next observation per agent, in agent order.
    pub observations: Vec<Token>,
    /// Common reward for the joint step.
    pub reward: f64,
    pub terminal: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EnvError {
    IllegalAction { agent_index: usize, token: Token },
    WrongAgentCount { expected: usize, got: usize },
}

impl core::fmt::Display for EnvError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            EnvError::IllegalAction { agent_index, token } => {
                write!(f, "agent {agent_index} sent illegal action token {token}")
            }
            EnvError::WrongAgentCount { expected, got } => {
                write!(f, "expected {expected} actions, got {got}")
            }
        }
    }
}

impl core::error::Error for EnvError {}

/// A finite-horizon Dec-POMDP with a common reward. Implementations must be
/// deterministic given the generator passed in.
pub trait DecPomdp {
    type State;

    fn env_id(&self) -> &str;
    fn agents(&self) -> &[String];
    fn gamma(&self) -> f64;
    fn horizon(&self) -> u32;
    fn action_vocab(&self, agent_index: usize) -> Vocab;
    fn observation_vocab(&self, agent_index: usize) -> Vocab;
    /// Draws an initial state and the first observation per agent.
    fn init(&self, rng: &mut EpisodeRng) -> (Self::State, Vec<Token>);
    fn step(
        &self,
        state: &mut Self::State,
        joint_action: &[Token],
        rng: &mut EpisodeRng,
    ) -> Result<StepOutcome, EnvError>;
}

/// Chooses one action per agent per step. `allowed` is never empty; the
/// returned action must come from it.
pub trait JointPolicy {
    fn decide(
        &self,
        agent_index: usize,
        entries: &[HistoryEntry],
        observation: Token,
        allowed: &BTreeSet<Token>,
        rng: &mut EpisodeRng,
    ) -> Token;
}

/// Uniform draw over the allowed set.
pub struct RandomPolicy;

impl JointPolicy for RandomPolicy {
    fn decide(
        &self,
        _agent_index: usize,
        _entries: &[HistoryEntry],
        _observation: Token,
        allowed: &BTreeSet<Token>,
        rng: &mut EpisodeRng,
    ) -> Token {
        let k = rng.random_range(0..allowed.len());
        *allowed.iter().nth(k).expect("allowed set is never empty")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SimError {
    Env(EnvError),
    EmptyAuthorizedSet(EmptyAuthorizedSet),
    /// A policy returned an action outside its allowed set.
    UnauthorizedAction {
        agent: String,
        step: u32,
        action: Token,
    },
}

impl core::fmt::Display for SimError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SimError::Env(e) => write!(f, "{e}"),
            SimError::EmptyAuthorizedSet(e) => write!(f, "{e}"),
            SimError::UnauthorizedAction {
                agent,
                step,
                action,
            } => write!(
                f,
                "policy chose unauthorized action {action} for '{agent}' at step {step}"
            ),
        }
    }
}

impl core::error::Error for SimError {}

impl From<EnvError> for SimError {
    fn from(e: EnvError) -> Self {
        SimError::Env(e)
    }
}

impl From<EmptyAuthorizedSet> for SimError {
    fn from(e: EmptyAuthorizedSet) -> Self {
        SimError::EmptyAuthorizedSet(e)
    }
}

/// Runs one episode. With a guard, each agent's actions are restricted to
/// its authorized set; without one, to its action vocabulary. The recorded
/// reward at each step is the common reward of the joint step.
pub fn run_episode<E: DecPomdp>(
    env: &E,
    policy: &dyn JointPolicy,
    guard: Option<&ConstraintGuard>,
    episode: u64,
    seed: u64,
) -> Result<JointHistory, SimError> {
    let mut rng = EpisodeRng::seed_from_u64(seed);
    let agents = env.agents();
    let n = agents.len();
    let action_vocabs: Vec<Vocab> = (0..n).map(|i| env.action_vocab(i)).collect();
    let full_sets: Vec<BTreeSet<Token>> = action_vocabs
        .iter()
        .map(|v| v.iter().collect())
        .collect();

    let (mut state, mut observations) = env.init(&mut rng);
    debug_assert_eq!(observations.len(), n);

    let mut traces: Vec<AgentHistory> = agents
        .iter()
        .map(|a| AgentHistory::new(a.clone()))
        .collect();
    // Flattened observation/action stream per agent, for guard queries.
    let mut flats: Vec<Vec<Token>> = (0..n).map(|_| Vec::new()).collect();

    let gamma = env.gamma();
    let mut episode_return = 0.0;
    let mut discount = 1.0;

    for step in 0..env.horizon() {
        let mut joint: Vec<Token> = Vec::with_capacity(n);
        for i in 0..n {
            let obs = observations[i];
            flats[i].push(obs);
            let action = match guard {
                Some(g) => {
                    let allowed =
                        g.authorized_actions(&agents[i], &flats[i], step, &action_vocabs[i])?;
                    let a = policy.decide(i, &traces[i].entries, obs, &allowed, &mut rng);
                    if !allowed.contains(&a) {
                        return Err(SimError::UnauthorizedAction {
                            agent: agents[i].clone(),
                            step,
                            action: a,
                        });
                    }
                    a
                }
                None => {
                    let a = policy.decide(i, &traces[i].entries, obs, &full_sets[i], &mut rng);
                    if !full_sets[i].contains(&a) {
                        return Err(SimError::UnauthorizedAction {
                            agent: agents[i].clone(),
                            step,
                            action: a,
                        });
                    }
                    a
                }
            };
            flats[i].push(action);
            joint.push(action);
        }

        let outcome = env.step(&mut state, &joint, &mut rng)?;
        episode_return += discount * outcome.reward;
        discount *= gamma;
        for i in 0..n {
            traces[i].entries.push(HistoryEntry {
                step,
                observation: observations[i],
                action: joint[i],
                reward: outcome.reward,
            });
        }
        observations = outcome.observations;
        if outcome.terminal {
            break;
        }
    }

    Ok(JointHistory {
        episode,
        seed,
        env_id: String::from(env.env_id()),
        gamma,
        agents: traces,
        episode_return,
    })
}

/// Mixes a base seed with a sequence of lane indices into one 64-bit seed.
/// Distinct lane sequences get statistically unrelated streams; stable
/// across platforms.
pub fn derive_seed(base: u64, lanes: &[u64]) -> u64 {
    fn splitmix64(mut z: u64) -> u64 {
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    let mut state = splitmix64(base ^ 0x9E37_79B9_7F4A_7C15);
    for &lane in lanes {
        state = splitmix64(state.wrapping_add(lane).wrapping_add(0x9E37_79B9_7F4A_7C15));
    }
    state
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn population_std(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64;
    libm::sqrt(var)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalStats {
    pub returns: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

/// Runs `episodes` episodes seeded `base_seed..base_seed + episodes` and
/// summarizes the returns.
pub fn evaluate_policy<E: DecPomdp>(
    env: &E,
    policy: &dyn JointPolicy,
    guard: Option<&ConstraintGuard>,
    episodes: usize,
    base_seed: u64,
) -> Result<EvalStats, SimError> {
    let mut returns = Vec::with_capacity(episodes);
    for i in 0..episodes {
        let h = run_episode(env, policy, guard, i as u64, base_seed + i as u64)?;
        returns.push(h.episode_return);
    }
    let mean_value = mean(&returns);
    let std_value = population_std(&returns);
    Ok(EvalStats {
        returns,
        mean: mean_value,
        std: std_value,
    })
}
