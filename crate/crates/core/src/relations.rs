//! Registry tying organizational elements to observable tokens.
//!
//! Inference and satisfaction checking both need to know which observations
//! and actions count as evidence for a role, link, goal, or mission. The
//! registry holds that mapping: token-level relations (sets of observation
//! and action tokens) and pattern relations (full-history patterns), plus
//! message declarations used for link inference and a set of co-presence
//! observations.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::history::AgentHistory;
use crate::org::LinkKind;
use crate::pattern::HistoryPattern;
use crate::token::Token;

/// The organizational element a relation gives evidence for.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ElementRef {
    Role(String),
    Link {
        source: String,
        dest: String,
        kind: LinkKind,
    },
    Goal(String),
    Mission(String),
}

impl core::fmt::Display for ElementRef {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ElementRef::Role(r) => write!(f, "role '{r}'"),
            ElementRef::Link { source, dest, kind } => {
                write!(f, "link ({source}, {dest}, {})", kind.short_name())
            }
            ElementRef::Goal(g) => write!(f, "goal '{g}'"),
            ElementRef::Mission(m) => write!(f, "mission '{m}'"),
        }
    }
}

/// How a relation recognizes its element in a history.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Matcher {
    /// Fires when the history's observations intersect `observations` and
    /// its actions intersect `actions`.
    Tokens {
        observations: BTreeSet<Token>,
        actions: BTreeSet<Token>,
    },
    /// Fires when the whole flattened observation/action stream matches.
    Pattern(HistoryPattern),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relation {
    pub matcher: Matcher,
    pub target: ElementRef,
}

/// Declares one message: the sender actions that emit it, the receiver
/// observations that reflect it, and the receiver actions that count as
/// complying with it.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MessageDecl {
    pub name: String,
    pub send_actions: BTreeSet<Token>,
    pub receive_observations: BTreeSet<Token>,
    pub compliance_actions: BTreeSet<Token>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RelationRegistry {
    pub relations: Vec<Relation>,
    /// Human-readable labels for tokens, bijective.
    pub aliases: BTreeMap<String, Token>,
    pub messages: Vec<MessageDecl>,
    /// Observations whose presence in two agents' histories at the same
    /// step means the agents perceived each other.
    pub copresence_observations: BTreeSet<Token>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RegistryError {
    /// Two labels name the same token.
    NonBijectiveAliases { token: Token },
    /// A message declaration lacks send actions or receive observations.
    MissingMessageDeclaration { name: String },
}

impl core::fmt::Display for RegistryError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            RegistryError::NonBijectiveAliases { token } => {
                write!(f, "several alias labels map to token {token}")
            }
            RegistryError::MissingMessageDeclaration { name } => {
                write!(
                    f,
                    "message '{name}' must declare send actions and receive observations"
                )
            }
        }
    }
}

impl core::error::Error for RegistryError {}

/// One relation that fired on a history, with the entry indices that
/// support it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Firing {
    pub relation_index: usize,
    pub target: ElementRef,
    pub evidence: Vec<usize>,
}

impl RelationRegistry {
    pub fn validate(&self) -> Result<(), RegistryError> {
        let mut seen: BTreeSet<Token> = BTreeSet::new();
        for token in self.aliases.values() {
            if !seen.insert(*token) {
                return Err(RegistryError::NonBijectiveAliases { token: *token });
            }
        }
        for m in &self.messages {
            if m.send_actions.is_empty() || m.receive_observations.is_empty() {
                return Err(RegistryError::MissingMessageDeclaration {
                    name: m.name.clone(),
                });
            }
        }
        Ok(())
    }

    pub fn alias_of(&self, t: Token) -> Option<&str> {
        self.aliases
            .iter()
            .find(|(_, v)| **v == t)
            .map(|(k, _)| k.as_str())
    }

    /// Roles that at least one relation targets.
    pub fn covered_roles(&self) -> BTreeSet<&str> {
        self.relations
            .iter()
            .filter_map(|r| match &r.target {
                ElementRef::Role(role) => Some(role.as_str()),
                _ => None,
            })
            .collect()
    }

    /// Evaluates every relation against one agent history. Token-level
    /// evidence lists each entry whose observation or action intersected the
    /// relation's sets; pattern evidence lists the entries whose tokens were
    /// consumed by literal pattern elements. Firings keep relation order.
    pub fn label_history(&self, h: &AgentHistory) -> Vec<Firing> {
        let flat = h.flattened();
        let present: BTreeSet<Token> = flat.iter().copied().collect();
        let mut out = Vec::new();
        for (idx, rel) in self.relations.iter().enumerate() {
            match &rel.matcher {
                Matcher::Tokens {
                    observations,
                    actions,
                } => {
                    let mut obs_hit = false;
                    let mut act_hit = false;
                    let mut evidence = Vec::new();
                    for (i, entry) in h.entries.iter().enumerate() {
                        let mut hit = false;
                        if observations.contains(&entry.observation) {
                            obs_hit = true;
                            hit = true;
                        }
                        if actions.contains(&entry.action) {
                            act_hit = true;
                            hit = true;
                        }
                        if hit {
                            evidence.push(i);
                        }
                    }
                    let fires = (observations.is_empty() || obs_hit)
                        && (actions.is_empty() || act_hit)
                        && !(observations.is_empty() && actions.is_empty());
                    if fires {
                        out.push(Firing {
                            relation_index: idx,
                            target: rel.target.clone(),
                            evidence,
                        });
                    }
                }
                Matcher::Pattern(p) => {
                    // A sequence missing a mandatory literal cannot match;
                    // this screen keeps large pattern registries affordable.
                    if p.mandatory_literals().any(|t| !present.contains(&t)) {
                        continue;
                    }
                    if let Some(positions) = p.match_positions(&flat) {
                        let mut evidence: Vec<usize> =
                            positions.iter().map(|pos| pos / 2).collect();
                        evidence.dedup();
                        out.push(Firing {
                            relation_index: idx,
                            target: rel.target.clone(),
                            evidence,
                        });
                    }
                }
            }
        }
        out
    }
}
