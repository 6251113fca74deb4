//! One-shot two-player matrix game with a common payoff.

use alloc::string::String;
use alloc::vec::Vec;

use crate::sim::{DecPomdp, EnvError, EpisodeRng, StepOutcome};
use crate::token::{Token, Vocab, OBSERVATION_BASE};

use super::ConfigError;

/// The single observation both players receive.
pub const MATRIX_OBS: Token = Token(OBSERVATION_BASE);

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct MatrixConfig {
    /// Common payoff indexed by (row action, column action).
    pub payoff: [[f64; 2]; 2],
    pub gamma: f64,
}

impl Default for MatrixConfig {
    fn default() -> Self {
        MatrixConfig {
            payoff: [[1.0, 0.0], [0.0, 0.0]],
            gamma: 0.95,
        }
    }
}

impl MatrixConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.payoff.iter().flatten().any(|p| !p.is_finite()) {
            return Err(ConfigError::new("payoffs must be finite"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct MatrixEnv {
    config: MatrixConfig,
    agents: Vec<String>,
}

impl MatrixEnv {
    pub fn new(config: MatrixConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        Ok(MatrixEnv {
            config,
            agents: alloc::vec![String::from("row"), String::from("col")],
        })
    }

    pub fn config(&self) -> &MatrixConfig {
        &self.config
    }

    /// Best common payoff over all joint actions.
    pub fn optimal_return(&self) -> f64 {
        self.config
            .payoff
            .iter()
            .flatten()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

impl DecPomdp for MatrixEnv {
    type State = ();

    fn env_id(&self) -> &str {
        "matrix"
    }

    fn agents(&self) -> &[String] {
        &self.agents
    }

    fn gamma(&self) -> f64 {
        self.config.gamma
    }

    fn horizon(&self) -> u32 {
        1
    }

    fn action_vocab(&self, _agent_index: usize) -> Vocab {
        Vocab::from_tokens([Token(0), Token(1)])
    }

    fn observation_vocab(&self, _agent_index: usize) -> Vocab {
        Vocab::from_tokens([MATRIX_OBS])
    }

    fn init(&self, _rng: &mut EpisodeRng) -> ((), Vec<Token>) {
        ((), alloc::vec![MATRIX_OBS, MATRIX_OBS])
    }

    fn step(
        &self,
        _state: &mut (),
        joint_action: &[Token],
        _rng: &mut EpisodeRng,
    ) -> Result<StepOutcome, EnvError> {
        if joint_action.len() != 2 {
            return Err(EnvError::WrongAgentCount {
                expected: 2,
                got: joint_action.len(),
            });
        }
        let mut idx = [0usize; 2];
        for (i, a) in joint_action.iter().enumerate() {
            idx[i] = match a.0 {
                0 => 0,
                1 => 1,
                _ => {
                    return Err(EnvError::IllegalAction {
                        agent_index: i,
                        token: *a,
                    })
                }
            };
        }
        Ok(StepOutcome {
            observations: alloc::vec![MATRIX_OBS, MATRIX_OBS],
            reward: self.config.payoff[idx[0]][idx[1]],
            terminal: true,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{evaluate_policy, RandomPolicy};

    #[test]
    fn payoff_lookup_and_termination() {
        let env = MatrixEnv::new(MatrixConfig::default()).unwrap();
        assert_eq!(env.optimal_return(), 1.0);
        // Uniform random play hits (0, 0) a quarter of the time.
        let stats = evaluate_policy(&env, &RandomPolicy, None, 4000, 7).unwrap();
        assert!((stats.mean - 0.25).abs() < 0.05, "mean {}", stats.mean);
    }
}
