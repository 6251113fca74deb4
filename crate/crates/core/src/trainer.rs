//! Tabular independent Q-learning over guarded episodes.
//!
//! Each agent learns a value table keyed by (current observation, last own
//! action). Action selection and value bootstrapping both range over the
//! authorized set only, so a guard shapes what can be learned, not just what
//! can be played. Updates are batched: episodes run against a frozen policy,
//! then a single writer applies all temporal-difference steps.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use rand::Rng;

use crate::constraints::ConstraintGuard;
use crate::history::{HistoryEntry, JointHistory};
use crate::inference::{synthesize, InferenceError, InferenceOptions, InferenceReport};
use crate::relations::RelationRegistry;
use crate::sim::{
    derive_seed, evaluate_policy, mean, run_episode, DecPomdp, EpisodeRng, JointPolicy,
    RandomPolicy, SimError,
};
use crate::token::Token;

/// Value-table key: what the agent sees now and what it last did.
pub type Context = (Token, Option<Token>);

pub fn context_of(entries: &[HistoryEntry], observation: Token) -> Context {
    (observation, entries.last().map(|e| e.action))
}

/// Per-agent action-value tables. Reads of absent entries answer 0 without
/// inserting, so a table only ever holds pairs that were actually updated.
#[derive(Clone, Debug, PartialEq)]
pub struct TabularPolicy {
    tables: Vec<BTreeMap<Context, BTreeMap<Token, f64>>>,
    pub alpha: f64,
    pub gamma: f64,
    epsilon: f64,
}

impl TabularPolicy {
    pub fn new(agent_count: usize, gamma: f64) -> Self {
        TabularPolicy {
            tables: alloc::vec![BTreeMap::new(); agent_count],
            alpha: 0.1,
            gamma,
            epsilon: 0.0,
        }
    }

    pub fn agent_count(&self) -> usize {
        self.tables.len()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn set_epsilon(&mut self, epsilon: f64) {
        assert!((0.0..=1.0).contains(&epsilon), "epsilon must be in [0, 1]");
        self.epsilon = epsilon;
    }

    pub fn value(&self, agent_index: usize, context: Context, action: Token) -> f64 {
        self.tables[agent_index]
            .get(&context)
            .and_then(|row| row.get(&action))
            .copied()
            .unwrap_or(0.0)
    }

    fn set_value(&mut self, agent_index: usize, context: Context, action: Token, value: f64) {
        self.tables[agent_index]
            .entry(context)
            .or_default()
            .insert(action, value);
    }

    /// Highest value among `allowed`, counting absent entries as 0.
    pub fn best_value(
        &self,
        agent_index: usize,
        context: Context,
        allowed: &BTreeSet<Token>,
    ) -> f64 {
        allowed
            .iter()
            .map(|&a| self.value(agent_index, context, a))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Best allowed action; ties go to the lowest token.
    pub fn greedy_action(
        &self,
        agent_index: usize,
        context: Context,
        allowed: &BTreeSet<Token>,
    ) -> Token {
        let mut best: Option<(f64, Token)> = None;
        for &a in allowed {
            let v = self.value(agent_index, context, a);
            if best.map_or(true, |(bv, _)| v > bv) {
                best = Some((v, a));
            }
        }
        best.expect("allowed set is never empty").1
    }

    /// Read-only view of one agent's table.
    pub fn table(&self, agent_index: usize) -> &BTreeMap<Context, BTreeMap<Token, f64>> {
        &self.tables[agent_index]
    }
}

/// Greedy play of a value table.
pub struct Greedy<'a>(pub &'a TabularPolicy);

impl JointPolicy for Greedy<'_> {
    fn decide(
        &self,
        agent_index: usize,
        entries: &[HistoryEntry],
        observation: Token,
        allowed: &BTreeSet<Token>,
        _rng: &mut EpisodeRng,
    ) -> Token {
        self.0
            .greedy_action(agent_index, context_of(entries, observation), allowed)
    }
}

/// Epsilon-greedy play using the policy's current exploration rate.
pub struct Explorer<'a>(pub &'a TabularPolicy);

impl JointPolicy for Explorer<'_> {
    fn decide(
        &self,
        agent_index: usize,
        entries: &[HistoryEntry],
        observation: Token,
        allowed: &BTreeSet<Token>,
        rng: &mut EpisodeRng,
    ) -> Token {
        if rng.random::<f64>() < self.0.epsilon {
            let k = rng.random_range(0..allowed.len());
            *allowed.iter().nth(k).expect("allowed set is never empty")
        } else {
            self.0
                .greedy_action(agent_index, context_of(entries, observation), allowed)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "UPPERCASE"))]
pub enum Case {
    /// Unconstrained training.
    Nts,
    /// Training under guard masking.
    Pts,
    /// Scripted play, no training.
    Fts,
}

impl Case {
    pub fn label(self) -> &'static str {
        match self {
            Case::Nts => "NTS",
            Case::Pts => "PTS",
            Case::Fts => "FTS",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct TrainerConfig {
    pub iterations: u32,
    pub episodes_per_iteration: u32,
    pub seed: u64,
    /// Iterations between inference snapshots.
    pub inference_period: u32,
    /// Mean return at which an iteration counts as converged.
    pub reward_threshold: f64,
    pub case: Case,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        TrainerConfig {
            iterations: 500,
            episodes_per_iteration: 16,
            seed: 0,
            inference_period: 100,
            reward_threshold: 0.0,
            case: Case::Nts,
        }
    }
}

/// Exploration rate for a 0-based iteration: linear from 1.0 down to 0.05
/// across the first 60% of iterations, flat afterwards.
pub fn epsilon_at(iteration: u32, total_iterations: u32) -> f64 {
    const FLOOR: f64 = 0.05;
    let ramp = ((0.6 * total_iterations as f64) as u32).max(1);
    if iteration >= ramp {
        FLOOR
    } else {
        1.0 - (1.0 - FLOOR) * (iteration as f64 / ramp as f64)
    }
}

/// Specification inferred from greedy play partway through training.
#[derive(Clone, Debug)]
pub struct SpecSnapshot {
    /// 1-based iteration the snapshot was taken after.
    pub iteration: u32,
    pub report: InferenceReport,
}

#[derive(Clone, Debug)]
pub struct TrainingTrace {
    /// Greedy mean return per iteration; always `iterations` long.
    pub mean_returns: Vec<f64>,
    /// First iteration (1-based) holding the threshold, if any.
    pub convergence_iteration: Option<u32>,
    pub snapshots: Vec<SpecSnapshot>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TrainError {
    Sim(SimError),
    NonFiniteValue {
        agent_index: usize,
        observation: Token,
        action: Token,
    },
    Inference(InferenceError),
}

impl core::fmt::Display for TrainError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            TrainError::Sim(e) => write!(f, "{e}"),
            TrainError::NonFiniteValue {
                agent_index,
                observation,
                action,
            } => write!(
                f,
                "value for agent {agent_index} at ({observation}, {action}) became non-finite"
            ),
            TrainError::Inference(e) => write!(f, "inference snapshot failed: {e}"),
        }
    }
}

impl From<SimError> for TrainError {
    fn from(e: SimError) -> Self {
        TrainError::Sim(e)
    }
}

/// Applies one agent's temporal-difference updates from a finished episode.
/// The authorized set per step is re-derived exactly as the episode runner
/// derived it, so bootstrapping never sees a forbidden action and nothing is
/// ever written for one.
fn learn_from<E: DecPomdp>(
    policy: &mut TabularPolicy,
    env: &E,
    guard: Option<&ConstraintGuard>,
    history: &JointHistory,
) -> Result<(), TrainError> {
    let agents = env.agents();
    for (i, agent) in history.agents.iter().enumerate() {
        let vocab = env.action_vocab(i);
        let full: BTreeSet<Token> = vocab.iter().collect();
        let entries = &agent.entries;

        let allowed_at: Option<Vec<BTreeSet<Token>>> = match guard {
            None => None,
            Some(g) => {
                let mut flat = Vec::with_capacity(entries.len() * 2);
                let mut sets = Vec::with_capacity(entries.len());
                for e in entries {
                    flat.push(e.observation);
                    let allowed = g
                        .authorized_actions(&agents[i], &flat, e.step, &vocab)
                        .map_err(|err| TrainError::Sim(SimError::EmptyAuthorizedSet(err)))?;
                    flat.push(e.action);
                    sets.push(allowed);
                }
                Some(sets)
            }
        };

        for t in 0..entries.len() {
            let here = &entries[t];
            let context = (
                here.observation,
                if t == 0 {
                    None
                } else {
                    Some(entries[t - 1].action)
                },
            );
            let bootstrap = if t + 1 < entries.len() {
                let next_context = (entries[t + 1].observation, Some(here.action));
                let next_allowed = allowed_at.as_ref().map_or(&full, |sets| &sets[t + 1]);
                policy.best_value(i, next_context, next_allowed)
            } else {
                0.0
            };
            let target = here.reward + policy.gamma * bootstrap;
            let old = policy.value(i, context, here.action);
            let new = old + policy.alpha * (target - old);
            if !new.is_finite() {
                return Err(TrainError::NonFiniteValue {
                    agent_index: i,
                    observation: here.observation,
                    action: here.action,
                });
            }
            policy.set_value(i, context, here.action, new);
        }
    }
    Ok(())
}

/// Trains tabular policies on `env`, masked by `guard` when present.
///
/// Per iteration: run `episodes_per_iteration` exploring episodes against
/// the frozen tables, apply their updates, then record the greedy mean
/// return over as many fresh evaluation episodes. Every `inference_period`
/// iterations a specification is synthesized from fresh greedy histories
/// (named against `registry` when one is given) and stored in the trace.
pub fn train<E: DecPomdp>(
    env: &E,
    guard: Option<&ConstraintGuard>,
    registry: Option<&RelationRegistry>,
    config: &TrainerConfig,
) -> Result<(TabularPolicy, TrainingTrace), TrainError> {
    assert!(config.iterations >= 1, "need at least one iteration");
    assert!(config.inference_period >= 1, "inference period must be >= 1");

    let fallback = RelationRegistry::default();
    let registry = registry.unwrap_or(&fallback);
    let inference_options = InferenceOptions::default();

    let mut policy = TabularPolicy::new(env.agents().len(), env.gamma());
    let mut mean_returns = Vec::with_capacity(config.iterations as usize);
    let mut snapshots = Vec::new();

    for it in 0..config.iterations {
        policy.set_epsilon(epsilon_at(it, config.iterations));

        let mut batch = Vec::with_capacity(config.episodes_per_iteration as usize);
        for ep in 0..config.episodes_per_iteration {
            let seed = derive_seed(config.seed, &[0, it as u64, ep as u64]);
            batch.push(run_episode(env, &Explorer(&policy), guard, ep as u64, seed)?);
        }
        for h in &batch {
            learn_from(&mut policy, env, guard, h)?;
        }

        let eval_seed = derive_seed(config.seed, &[1, it as u64]);
        let stats = evaluate_policy(
            env,
            &Greedy(&policy),
            guard,
            config.episodes_per_iteration as usize,
            eval_seed,
        )?;
        mean_returns.push(stats.mean);

        if (it + 1) % config.inference_period == 0 {
            let count = (config.episodes_per_iteration as usize).max(inference_options.min_episodes);
            let mut fresh = Vec::with_capacity(count);
            for ep in 0..count {
                let seed = derive_seed(config.seed, &[2, it as u64, ep as u64]);
                fresh.push(run_episode(env, &Greedy(&policy), guard, ep as u64, seed)?);
            }
            let report = synthesize(&fresh, registry, &inference_options)
                .map_err(TrainError::Inference)?;
            snapshots.push(SpecSnapshot {
                iteration: it + 1,
                report,
            });
        }
    }

    let convergence_iteration = convergence_iteration(&mean_returns, config.reward_threshold);
    Ok((
        policy,
        TrainingTrace {
            mean_returns,
            convergence_iteration,
            snapshots,
        },
    ))
}

/// First 1-based iteration whose mean return reaches `s` and holds it for
/// three consecutive iterations; `None` when no window qualifies.
pub fn convergence_iteration(mean_returns: &[f64], s: f64) -> Option<u32> {
    const DEBOUNCE: usize = 3;
    (0..mean_returns.len())
        .find(|&i| {
            i + DEBOUNCE <= mean_returns.len()
                && mean_returns[i..i + DEBOUNCE].iter().all(|&r| r >= s)
        })
        .map(|i| i as u32 + 1)
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilitySummary {
    /// `average / maximum` of the normalized returns.
    pub ratio: f64,
    pub average: f64,
    pub maximum: f64,
    /// Greedy mean return minus random baseline, per variant.
    pub normalized_returns: Vec<f64>,
    pub raw_returns: Vec<f64>,
    pub baselines: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum StabilityError {
    Sim(SimError),
    /// The policy beat random play nowhere, so the ratio is meaningless.
    DegenerateBaseline { max_normalized: f64 },
}

impl core::fmt::Display for StabilityError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            StabilityError::Sim(e) => write!(f, "{e}"),
            StabilityError::DegenerateBaseline { max_normalized } => write!(
                f,
                "no variant beats the random baseline (max normalized return {max_normalized})"
            ),
        }
    }
}

impl From<SimError> for StabilityError {
    fn from(e: SimError) -> Self {
        StabilityError::Sim(e)
    }
}

fn stability_summary(
    raw_returns: Vec<f64>,
    baselines: Vec<f64>,
) -> Result<StabilitySummary, StabilityError> {
    let normalized: Vec<f64> = raw_returns
        .iter()
        .zip(&baselines)
        .map(|(r, b)| r - b)
        .collect();
    let maximum = normalized.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if maximum <= 0.0 {
        return Err(StabilityError::DegenerateBaseline {
            max_normalized: maximum,
        });
    }
    let average = mean(&normalized);
    Ok(StabilitySummary {
        ratio: average / maximum,
        average,
        maximum,
        normalized_returns: normalized,
        raw_returns,
        baselines,
    })
}

/// How evenly a trained policy performs across environment variants:
/// average over maximum of per-variant greedy returns, after subtracting
/// each variant's random-play baseline so scales are comparable. All
/// variants share evaluation seeds, so identical variants score exactly 1.
pub fn performance_stability<E: DecPomdp>(
    policy: &TabularPolicy,
    variants: &[E],
    guard: Option<&ConstraintGuard>,
    episodes: usize,
    seed: u64,
) -> Result<StabilitySummary, StabilityError> {
    assert!(variants.len() >= 2, "need at least two variants");
    let mut raw = Vec::with_capacity(variants.len());
    let mut baselines = Vec::with_capacity(variants.len());
    for env in variants {
        let greedy = evaluate_policy(env, &Greedy(policy), guard, episodes, derive_seed(seed, &[3]))?;
        let random =
            evaluate_policy(env, &RandomPolicy, guard, episodes, derive_seed(seed, &[4]))?;
        raw.push(greedy.mean);
        baselines.push(random.mean);
    }
    stability_summary(raw, baselines)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::EnforcementMode;
    use crate::envs::{MatrixConfig, MatrixEnv, MATRIX_OBS};
    use crate::org::OrganizationalSpecification;
    use crate::relations::{ElementRef, Matcher, Relation};
    use alloc::string::ToString;
    use alloc::vec;

    fn matrix() -> MatrixEnv {
        MatrixEnv::new(MatrixConfig::default()).unwrap()
    }

    fn quick_config(iterations: u32, seed: u64) -> TrainerConfig {
        TrainerConfig {
            iterations,
            episodes_per_iteration: 8,
            seed,
            inference_period: iterations,
            reward_threshold: 0.8,
            case: Case::Nts,
        }
    }

    #[test]
    fn epsilon_schedule_shape() {
        assert_eq!(epsilon_at(0, 2000), 1.0);
        assert!((epsilon_at(1200, 2000) - 0.05).abs() < 1e-12);
        assert_eq!(epsilon_at(1999, 2000), 0.05);
        let mut last = 1.0;
        for it in 0..2000 {
            let e = epsilon_at(it, 2000);
            assert!((0.0..=1.0).contains(&e));
            assert!(e <= last + 1e-12);
            last = e;
        }
        // Degenerate totals still give a valid rate.
        assert_eq!(epsilon_at(0, 1), 1.0);
    }

    #[test]
    fn convergence_detection_with_debounce() {
        let s = 10.0;
        let steady = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 10.0, 11.0, 12.0, 13.0];
        assert_eq!(convergence_iteration(&steady, s), Some(7));

        let never = [0.0, 1.0, 2.0];
        assert_eq!(convergence_iteration(&never, s), None);

        // Crosses at 5, dips at 6, holds only from 12 on.
        let dip = [
            0.0, 0.0, 0.0, 0.0, 10.0, 3.0, 0.0, 0.0, 0.0, 0.0, 0.0, 10.0, 10.0, 10.0,
        ];
        assert_eq!(convergence_iteration(&dip, s), Some(12));

        // Too close to the end to hold three iterations.
        let tail = [10.0, 10.0];
        assert_eq!(convergence_iteration(&tail, s), None);
    }

    #[test]
    fn matrix_training_reaches_the_optimum() {
        let env = matrix();
        let config = quick_config(2000, 11);
        let (policy, trace) = train(&env, None, None, &config).unwrap();

        assert_eq!(trace.mean_returns.len(), 2000);
        let allowed: BTreeSet<Token> = [Token(0), Token(1)].into();
        for agent in 0..2 {
            assert_eq!(
                policy.greedy_action(agent, (MATRIX_OBS, None), &allowed),
                Token(0)
            );
        }
        let last = *trace.mean_returns.last().unwrap();
        assert!(last > 0.95, "final greedy return {last}");
        assert!(trace.convergence_iteration.is_some());
        assert_eq!(trace.snapshots.len(), 1);
        assert_eq!(trace.snapshots[0].iteration, 2000);
        // One behavior, one role: both players end up together.
        assert_eq!(trace.snapshots[0].report.clustering.cluster_count(), 1);
    }

    #[test]
    fn zero_signal_leaves_tables_zero() {
        let env = MatrixEnv::new(MatrixConfig {
            payoff: [[0.0, 0.0], [0.0, 0.0]],
            ..MatrixConfig::default()
        })
        .unwrap();
        let (policy, _) = train(&env, None, None, &quick_config(50, 3)).unwrap();
        for agent in 0..2 {
            for row in policy.table(agent).values() {
                assert!(row.values().all(|&v| v == 0.0));
            }
        }
    }

    /// Guard setup where action 0 belongs exclusively to a role nobody
    /// holds, making it forbidden for both players.
    fn forbid_zero_guard() -> ConstraintGuard {
        let mut spec = OrganizationalSpecification::default();
        spec.structural.roles.insert("player".to_string());
        spec.structural.roles.insert("zero_owner".to_string());
        let registry = RelationRegistry {
            relations: vec![
                Relation {
                    matcher: Matcher::Tokens {
                        observations: [MATRIX_OBS].into(),
                        actions: [Token(0)].into(),
                    },
                    target: ElementRef::Role("zero_owner".to_string()),
                },
                Relation {
                    matcher: Matcher::Tokens {
                        observations: [MATRIX_OBS].into(),
                        actions: [Token(1)].into(),
                    },
                    target: ElementRef::Role("player".to_string()),
                },
            ],
            ..Default::default()
        };
        let assignments = [
            ("row".to_string(), "player".to_string()),
            ("col".to_string(), "player".to_string()),
        ]
        .into();
        ConstraintGuard::new(spec, assignments, &registry, EnforcementMode::Hard).unwrap()
    }

    #[test]
    fn forbidding_the_optimum_caps_the_return() {
        let env = matrix();
        let guard = forbid_zero_guard();
        let (policy, trace) = train(&env, Some(&guard), None, &quick_config(200, 5)).unwrap();

        // Nothing was ever written for the forbidden action.
        for agent in 0..2 {
            for row in policy.table(agent).values() {
                assert!(!row.contains_key(&Token(0)));
            }
        }
        // With action 0 off the table the best payoff is 0.
        assert_eq!(*trace.mean_returns.last().unwrap(), 0.0);
        assert_eq!(trace.convergence_iteration, None);
    }

    #[test]
    fn identical_configs_reproduce_identical_runs() {
        let env = matrix();
        let config = quick_config(100, 42);
        let (p1, t1) = train(&env, None, None, &config).unwrap();
        let (p2, t2) = train(&env, None, None, &config).unwrap();
        assert_eq!(p1, p2);
        assert_eq!(t1.mean_returns, t2.mean_returns);
        assert_eq!(t1.convergence_iteration, t2.convergence_iteration);
    }

    #[test]
    fn runaway_values_are_reported() {
        let env = matrix();
        let mut policy = TabularPolicy::new(2, env.gamma());
        policy.set_value(0, (MATRIX_OBS, Some(Token(0))), Token(0), f64::MAX);
        let history = JointHistory {
            episode: 0,
            seed: 0,
            env_id: "matrix".to_string(),
            gamma: env.gamma(),
            agents: vec![
                crate::history::AgentHistory {
                    agent: "row".to_string(),
                    entries: vec![
                        HistoryEntry {
                            step: 0,
                            observation: MATRIX_OBS,
                            action: Token(0),
                            reward: f64::MAX,
                        },
                        HistoryEntry {
                            step: 1,
                            observation: MATRIX_OBS,
                            action: Token(0),
                            reward: 0.0,
                        },
                    ],
                },
                crate::history::AgentHistory {
                    agent: "col".to_string(),
                    entries: Vec::new(),
                },
            ],
            episode_return: f64::MAX,
        };
        let err = learn_from(&mut policy, &env, None, &history).unwrap_err();
        assert!(matches!(err, TrainError::NonFiniteValue { agent_index: 0, .. }));
    }

    #[test]
    fn stability_arithmetic() {
        let s = stability_summary(vec![3.0, 5.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(s.normalized_returns, vec![2.0, 4.0]);
        assert_eq!(s.ratio, 0.75);
        assert_eq!(s.average, 3.0);
        assert_eq!(s.maximum, 4.0);

        let err = stability_summary(vec![1.0, 0.5], vec![1.0, 1.0]).unwrap_err();
        assert!(matches!(err, StabilityError::DegenerateBaseline { .. }));
    }

    #[test]
    fn identical_variants_score_one() {
        let env = matrix();
        let (policy, _) = train(&env, None, None, &quick_config(300, 9)).unwrap();
        let variants = vec![matrix(), matrix()];
        let s = performance_stability(&policy, &variants, None, 64, 123).unwrap();
        assert_eq!(s.ratio, 1.0);
        assert!(s.normalized_returns.iter().all(|&v| v > 0.5));
    }

    #[test]
    fn degenerate_baseline_detected_end_to_end() {
        let zero = MatrixEnv::new(MatrixConfig {
            payoff: [[0.0, 0.0], [0.0, 0.0]],
            ..MatrixConfig::default()
        })
        .unwrap();
        let policy = TabularPolicy::new(2, zero.gamma());
        let variants = vec![
            MatrixEnv::new(MatrixConfig {
                payoff: [[0.0, 0.0], [0.0, 0.0]],
                ..MatrixConfig::default()
            })
            .unwrap(),
            zero,
        ];
        let err = performance_stability(&policy, &variants, None, 16, 7).unwrap_err();
        assert!(matches!(err, StabilityError::DegenerateBaseline { .. }));
    }
}
