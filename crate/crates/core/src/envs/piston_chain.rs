//! A row of pistons passing a ball from right to left.
//!
//! Each piston controls its own height (0..=2) and sees only itself, its
//! immediate neighbors, and whether the ball sits next to it. The ball rolls
//! one column left per step whenever the column to its left is lower than
//! its own. A common reward pays for ball progress and charges a small step
//! penalty; the episode ends when the ball leaves the left edge.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::history::HistoryEntry;
use crate::sim::{DecPomdp, EnvError, EpisodeRng, JointPolicy, StepOutcome};
use crate::token::{Token, Vocab, OBSERVATION_BASE};

use super::ConfigError;

pub const PISTON_UP: Token = Token(0);
pub const PISTON_DOWN: Token = Token(1);
pub const PISTON_HOLD: Token = Token(2);

pub const MAX_HEIGHT: u8 = 2;
/// Neighbor height code for a missing neighbor at the edge.
pub const EDGE_SENTINEL: u8 = 3;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct PistonChainConfig {
    pub n_pistons: usize,
    /// Starting heights; all zero when absent.
    pub initial_heights: Option<Vec<u8>>,
    /// Starting ball column in `[0, n_pistons]`; `n_pistons - 1` when
    /// absent. Column `n_pistons` sits off the right edge.
    pub initial_ball: Option<u32>,
    pub horizon: u32,
    pub move_reward: f64,
    pub step_penalty: f64,
    pub gamma: f64,
}

impl Default for PistonChainConfig {
    fn default() -> Self {
        PistonChainConfig {
            n_pistons: 8,
            initial_heights: None,
            initial_ball: None,
            horizon: 200,
            move_reward: 1.0,
            step_penalty: 0.01,
            gamma: 0.95,
        }
    }
}

impl PistonChainConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n_pistons < 2 {
            return Err(ConfigError::new("need at least 2 pistons"));
        }
        if let Some(heights) = &self.initial_heights {
            if heights.len() != self.n_pistons {
                return Err(ConfigError::new(
                    "initial_heights length must equal n_pistons",
                ));
            }
            if heights.iter().any(|&h| h > MAX_HEIGHT) {
                return Err(ConfigError::new("initial heights must be at most 2"));
            }
        }
        if let Some(ball) = self.initial_ball {
            if ball > self.n_pistons as u32 {
                return Err(ConfigError::new("initial ball column out of range"));
            }
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(ConfigError::new("gamma must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Decoded piston observation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PistonView {
    pub height: u8,
    /// Left neighbor height, `EDGE_SENTINEL` at the left edge.
    pub left: u8,
    /// Right neighbor height, `EDGE_SENTINEL` at the right edge.
    pub right: u8,
    pub ball: BallOffset,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BallOffset {
    None,
    Left,
    Here,
    Right,
}

impl BallOffset {
    fn code(self) -> u32 {
        match self {
            BallOffset::None => 0,
            BallOffset::Left => 1,
            BallOffset::Here => 2,
            BallOffset::Right => 3,
        }
    }

    fn from_code(code: u32) -> Self {
        match code {
            1 => BallOffset::Left,
            2 => BallOffset::Here,
            3 => BallOffset::Right,
            _ => BallOffset::None,
        }
    }
}

pub fn encode_piston_obs(view: PistonView) -> Token {
    let idx = ((view.height as u32 * 4 + view.left as u32) * 4 + view.right as u32) * 4
        + view.ball.code();
    Token(OBSERVATION_BASE + idx)
}

pub fn decode_piston_obs(obs: Token) -> PistonView {
    let idx = obs.0 - OBSERVATION_BASE;
    let ball = BallOffset::from_code(idx % 4);
    let rest = idx / 4;
    let right = (rest % 4) as u8;
    let rest = rest / 4;
    let left = (rest % 4) as u8;
    let height = (rest / 4) as u8;
    PistonView {
        height,
        left,
        right,
        ball,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PistonState {
    pub heights: Vec<u8>,
    /// Ball column in `[0, n_pistons]`; `n_pistons` is off the right edge.
    pub ball: u32,
}

#[derive(Clone, Debug)]
pub struct PistonChainEnv {
    config: PistonChainConfig,
    agents: Vec<String>,
}

impl PistonChainEnv {
    pub fn new(config: PistonChainConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        let agents = (0..config.n_pistons)
            .map(|i| format!("piston_{i}"))
            .collect();
        Ok(PistonChainEnv { config, agents })
    }

    pub fn config(&self) -> &PistonChainConfig {
        &self.config
    }

    /// Height seen by the rolling rule; the off-edge column is a wall
    /// higher than any piston, so an edge ball always falls onto the
    /// rightmost piston.
    fn rolling_height(&self, state: &PistonState, column: u32) -> u8 {
        if column as usize == self.config.n_pistons {
            MAX_HEIGHT + 1
        } else {
            state.heights[column as usize]
        }
    }

    fn observe(&self, state: &PistonState, i: usize) -> Token {
        let n = self.config.n_pistons;
        let left = if i == 0 {
            EDGE_SENTINEL
        } else {
            state.heights[i - 1]
        };
        let right = if i == n - 1 {
            EDGE_SENTINEL
        } else {
            state.heights[i + 1]
        };
        let ball = if state.ball == i as u32 {
            BallOffset::Here
        } else if state.ball + 1 == i as u32 {
            BallOffset::Left
        } else if state.ball == i as u32 + 1 {
            BallOffset::Right
        } else {
            BallOffset::None
        };
        encode_piston_obs(PistonView {
            height: state.heights[i],
            left,
            right,
            ball,
        })
    }

    fn observations(&self, state: &PistonState) -> Vec<Token> {
        (0..self.config.n_pistons)
            .map(|i| self.observe(state, i))
            .collect()
    }
}

impl DecPomdp for PistonChainEnv {
    type State = PistonState;

    fn env_id(&self) -> &str {
        "piston_chain"
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

    fn action_vocab(&self, _agent_index: usize) -> Vocab {
        Vocab::from_tokens([PISTON_UP, PISTON_DOWN, PISTON_HOLD])
    }

    fn observation_vocab(&self, _agent_index: usize) -> Vocab {
        Vocab::from_range(OBSERVATION_BASE, OBSERVATION_BASE + 3 * 4 * 4 * 4 - 1)
    }

    fn init(&self, _rng: &mut EpisodeRng) -> (PistonState, Vec<Token>) {
        let state = PistonState {
            heights: self
                .config
                .initial_heights
                .clone()
                .unwrap_or_else(|| alloc::vec![0; self.config.n_pistons]),
            ball: self
                .config
                .initial_ball
                .unwrap_or(self.config.n_pistons as u32 - 1),
        };
        let obs = self.observations(&state);
        (state, obs)
    }

    fn step(
        &self,
        state: &mut PistonState,
        joint_action: &[Token],
        _rng: &mut EpisodeRng,
    ) -> Result<StepOutcome, EnvError> {
        let n = self.config.n_pistons;
        if joint_action.len() != n {
            return Err(EnvError::WrongAgentCount {
                expected: n,
                got: joint_action.len(),
            });
        }
        for (i, a) in joint_action.iter().enumerate() {
            match *a {
                PISTON_UP => state.heights[i] = (state.heights[i] + 1).min(MAX_HEIGHT),
                PISTON_DOWN => state.heights[i] = state.heights[i].saturating_sub(1),
                PISTON_HOLD => {}
                other => {
                    return Err(EnvError::IllegalAction {
                        agent_index: i,
                        token: other,
                    })
                }
            }
        }

        let mut moved = false;
        if state.ball > 0 && self.rolling_height(state, state.ball - 1) < self.rolling_height(state, state.ball)
        {
            state.ball -= 1;
            moved = true;
        }

        let reward = if moved { self.config.move_reward } else { 0.0 } - self.config.step_penalty;
        let terminal = state.ball == 0;
        Ok(StepOutcome {
            observations: self.observations(state),
            reward,
            terminal,
        })
    }
}

/// Staircase handwork: raise under the ball, duck just left of it, hold
/// elsewhere. Falls back along a fixed preference order when the guard
/// narrows the allowed set.
pub struct PistonStaircase;

impl JointPolicy for PistonStaircase {
    fn decide(
        &self,
        _agent_index: usize,
        _entries: &[HistoryEntry],
        observation: Token,
        allowed: &alloc::collections::BTreeSet<Token>,
        _rng: &mut EpisodeRng,
    ) -> Token {
        let view = decode_piston_obs(observation);
        let preference = match view.ball {
            BallOffset::Here => [PISTON_UP, PISTON_HOLD, PISTON_DOWN],
            BallOffset::Right => [PISTON_DOWN, PISTON_HOLD, PISTON_UP],
            _ => [PISTON_HOLD, PISTON_UP, PISTON_DOWN],
        };
        preference
            .into_iter()
            .find(|a| allowed.contains(a))
            .unwrap_or_else(|| *allowed.iter().next().expect("allowed set is never empty"))
    }
}
