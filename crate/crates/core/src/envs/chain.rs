//! Single-agent corridor: walk right to the goal cell.
//!
//! Deterministic dynamics and a tiny state space make returns enumerable by
//! hand, which is what the numeric tests need.

use alloc::string::String;
use alloc::vec::Vec;

use crate::sim::{DecPomdp, EnvError, EpisodeRng, StepOutcome};
use crate::token::{Token, Vocab, OBSERVATION_BASE};

use super::ConfigError;

pub const CHAIN_LEFT: Token = Token(0);
pub const CHAIN_RIGHT: Token = Token(1);

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct ChainConfig {
    pub length: u32,
    pub horizon: u32,
    pub gamma: f64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            length: 3,
            horizon: 5,
            gamma: 0.9,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.length < 2 {
            return Err(ConfigError::new("chain length must be at least 2"));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(ConfigError::new("gamma must lie in [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct ChainEnv {
    config: ChainConfig,
    agents: Vec<String>,
}

impl ChainEnv {
    pub fn new(config: ChainConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        Ok(ChainEnv {
            config,
            agents: alloc::vec![String::from("walker")],
        })
    }

    pub fn config(&self) -> &ChainConfig {
        &self.config
    }

    fn observe(&self, pos: u32) -> Token {
        Token(OBSERVATION_BASE + pos)
    }
}

impl DecPomdp for ChainEnv {
    type State = u32;

    fn env_id(&self) -> &str {
        "chain"
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
        Vocab::from_tokens([CHAIN_LEFT, CHAIN_RIGHT])
    }

    fn observation_vocab(&self, _agent_index: usize) -> Vocab {
        Vocab::from_range(OBSERVATION_BASE, OBSERVATION_BASE + self.config.length - 1)
    }

    fn init(&self, _rng: &mut EpisodeRng) -> (u32, Vec<Token>) {
        (0, alloc::vec![self.observe(0)])
    }

    fn step(
        &self,
        pos: &mut u32,
        joint_action: &[Token],
        _rng: &mut EpisodeRng,
    ) -> Result<StepOutcome, EnvError> {
        if joint_action.len() != 1 {
            return Err(EnvError::WrongAgentCount {
                expected: 1,
                got: joint_action.len(),
            });
        }
        match joint_action[0] {
            CHAIN_RIGHT => *pos = (*pos + 1).min(self.config.length - 1),
            CHAIN_LEFT => *pos = pos.saturating_sub(1),
            other => {
                return Err(EnvError::IllegalAction {
                    agent_index: 0,
                    token: other,
                })
            }
        }
        let at_goal = *pos == self.config.length - 1;
        Ok(StepOutcome {
            observations: alloc::vec![self.observe(*pos)],
            reward: if at_goal { 1.0 } else { 0.0 },
            terminal: at_goal,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::history::HistoryEntry;
    use crate::sim::{run_episode, JointPolicy};
    use alloc::collections::BTreeSet;

    struct AlwaysRight;

    impl JointPolicy for AlwaysRight {
        fn decide(
            &self,
            _agent_index: usize,
            _entries: &[HistoryEntry],
            _observation: Token,
            _allowed: &BTreeSet<Token>,
            _rng: &mut EpisodeRng,
        ) -> Token {
            CHAIN_RIGHT
        }
    }

    #[test]
    fn deterministic_right_walk() {
        let env = ChainEnv::new(ChainConfig::default()).unwrap();
        let h = run_episode(&env, &AlwaysRight, None, 0, 42).unwrap();
        // Two steps: 0 -> 1 (no reward), 1 -> 2 (goal, reward 1).
        assert_eq!(h.len(), 2);
        assert_eq!(h.episode_return, 0.9);
        assert_eq!(h.agents[0].entries[0].observation, Token(1000));
        assert_eq!(h.agents[0].entries[1].observation, Token(1001));
        assert_eq!(h.agents[0].entries[1].reward, 1.0);
        assert_eq!(h.recomputed_return(), h.episode_return);
    }

    #[test]
    fn horizon_cuts_unfinished_episodes() {
        let env = ChainEnv::new(ChainConfig {
            length: 10,
            horizon: 4,
            gamma: 0.9,
        })
        .unwrap();
        let h = run_episode(&env, &AlwaysRight, None, 0, 1).unwrap();
        assert_eq!(h.len(), 4);
        assert_eq!(h.episode_return, 0.0);
    }

    #[test]
    fn invalid_length_rejected() {
        assert!(ChainEnv::new(ChainConfig {
            length: 1,
            horizon: 5,
            gamma: 0.9
        })
        .is_err());
    }
}
