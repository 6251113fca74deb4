//! Recorded episodes: per-agent observation/action traces with rewards.

use alloc::string::String;
use alloc::vec::Vec;

use crate::token::Token;

/// One step of one agent: the observation it received, the action it took,
/// and the common reward emitted by that joint step.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HistoryEntry {
    pub step: u32,
    pub observation: Token,
    pub action: Token,
    pub reward: f64,
}

/// The full trace of a single agent over one episode.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AgentHistory {
    pub agent: String,
    pub entries: Vec<HistoryEntry>,
}

impl AgentHistory {
    pub fn new(agent: String) -> Self {
        AgentHistory {
            agent,
            entries: Vec::new(),
        }
    }

    pub fn observations(&self) -> impl Iterator<Item = Token> + '_ {
        self.entries.iter().map(|e| e.observation)
    }

    pub fn actions(&self) -> impl Iterator<Item = Token> + '_ {
        self.entries.iter().map(|e| e.action)
    }

    /// Alternating observation/action stream, oldest first.
    pub fn flattened(&self) -> Vec<Token> {
        flatten_entries(&self.entries)
    }
}

/// Alternating observation/action stream for a prefix of entries.
pub fn flatten_entries(entries: &[HistoryEntry]) -> Vec<Token> {
    let mut out = Vec::with_capacity(entries.len() * 2);
    for e in entries {
        out.push(e.observation);
        out.push(e.action);
    }
    out
}

/// A joint episode: one trace per agent, in the environment's agent order.
/// Rewards are common, so every agent's entry at a given step carries the
/// same reward value.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct JointHistory {
    pub episode: u64,
    pub seed: u64,
    pub env_id: String,
    pub gamma: f64,
    pub agents: Vec<AgentHistory>,
    pub episode_return: f64,
}

impl JointHistory {
    /// Number of joint steps recorded.
    pub fn len(&self) -> usize {
        self.agents.first().map_or(0, |a| a.entries.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Per-step common rewards, taken from the first agent's trace.
    pub fn step_rewards(&self) -> impl Iterator<Item = f64> + '_ {
        self.agents
            .first()
            .into_iter()
            .flat_map(|a| a.entries.iter().map(|e| e.reward))
    }

    /// Recomputes the discounted return from the recorded rewards. Uses the
    /// same accumulation as the episode runner, so the result is bit-equal
    /// to `episode_return` for any history the runner produced.
    pub fn recomputed_return(&self) -> f64 {
        discounted_return(self.step_rewards(), self.gamma)
    }
}

/// Discounted sum of a reward stream. Single canonical fold: reward first,
/// discount multiplied afterwards, so writers and readers agree bitwise.
pub fn discounted_return<I: IntoIterator<Item = f64>>(rewards: I, gamma: f64) -> f64 {
    let mut total = 0.0;
    let mut discount = 1.0;
    for r in rewards {
        total += discount * r;
        discount *= gamma;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn entry(step: u32, obs: u32, act: u32, reward: f64) -> HistoryEntry {
        HistoryEntry {
            step,
            observation: Token(obs),
            action: Token(act),
            reward,
        }
    }

    #[test]
    fn flattened_interleaves_observations_and_actions() {
        let h = AgentHistory {
            agent: "a".to_string(),
            entries: alloc::vec![entry(0, 1000, 1, 0.0), entry(1, 1001, 2, 1.0)],
        };
        let flat: Vec<u32> = h.flattened().iter().map(|t| t.0).collect();
        assert_eq!(flat, alloc::vec![1000, 1, 1001, 2]);
    }

    #[test]
    fn discounted_return_accumulates_in_order() {
        let r = discounted_return([1.0, 1.0, 1.0], 0.5);
        assert_eq!(r, 1.0 + 0.5 + 0.25);
        assert_eq!(discounted_return([], 0.9), 0.0);
    }

    #[test]
    fn recomputed_return_matches_fold() {
        let h = JointHistory {
            episode: 0,
            seed: 7,
            env_id: "chain".to_string(),
            gamma: 0.9,
            agents: alloc::vec![AgentHistory {
                agent: "walker".to_string(),
                entries: alloc::vec![entry(0, 1000, 1, 0.0), entry(1, 1001, 1, 1.0)],
            }],
            episode_return: 0.9,
        };
        assert_eq!(h.recomputed_return(), 0.9);
        assert_eq!(h.len(), 2);
    }
}
