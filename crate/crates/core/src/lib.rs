//! Multi-agent reinforcement learning with explicit organizational structure.
//!
//! The crate provides a small Dec-POMDP simulation kernel, an organizational
//! model (roles, links, goals, missions, deontic relations), a guard that
//! masks agent actions against an organizational specification, a tabular
//! trainer, and inference routines that reconstruct an organizational
//! specification from recorded joint histories.
//!
//! Everything here is deterministic given a seed: collections are ordered,
//! random draws flow from a single counter-based generator per episode, and
//! floating point work avoids platform-dependent intrinsics.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod constraints;
pub mod envs;
pub mod history;
pub mod inference;
pub mod org;
pub mod pattern;
pub mod relations;
pub mod sim;
pub mod token;
pub mod trainer;

pub use constraints::{ConstraintGuard, EnforcementMode, GuardBuildError};
pub use history::{AgentHistory, HistoryEntry, JointHistory};
pub use org::{
    Cardinality, DeonticKind, DeonticRelation, FunctionalSpec, Link, LinkKind,
    OrganizationalSpecification, Plan, PlanOperator, StepInterval, StructuralSpec,
};
pub use sim::{DecPomdp, EnvError, EpisodeRng, JointPolicy, SimError, StepOutcome};
pub use token::{Token, Vocab, OBSERVATION_BASE};
