//! Organizational model: structural, functional, and deontic specifications.
//!
//! A specification names roles, relations between roles, a goal/plan/mission
//! decomposition, and deontic relations tying roles to missions. The model is
//! declarative; enforcement lives in `constraints` and reconstruction from
//! histories lives in `inference`.

mod diff;
mod merge;
mod validate;

pub use diff::{apply_diff, diff_specs, DiffError, MapDelta, SetDelta, SpecDiff};
pub use merge::{merge_specs, MergeError};
pub use validate::{validate_spec, Violation};

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

/// Kind of a directed role-to-role link, ordered by strength. Authority
/// implies communication, which implies acquaintance; when several kinds are
/// known for the same pair only the strongest is kept.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum LinkKind {
    Acquaintance,
    Communication,
    Authority,
}

impl LinkKind {
    pub fn short_name(self) -> &'static str {
        match self {
            LinkKind::Acquaintance => "acq",
            LinkKind::Communication => "com",
            LinkKind::Authority => "aut",
        }
    }
}

/// Directed link between two declared roles.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Link {
    pub source: String,
    pub dest: String,
    pub kind: LinkKind,
}

/// Unordered compatibility between two roles. Stored with `a <= b` so that
/// (a, b) and (b, a) are the same value; `new` canonicalizes.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Compatibility {
    pub a: String,
    pub b: String,
}

impl Compatibility {
    pub fn new(x: impl Into<String>, y: impl Into<String>) -> Self {
        let (x, y) = (x.into(), y.into());
        if x <= y {
            Compatibility { a: x, b: y }
        } else {
            Compatibility { a: y, b: x }
        }
    }

    pub fn involves(&self, role: &str) -> bool {
        self.a == role || self.b == role
    }
}

/// Inclusive min/max bound on how many agents may hold a role or commit to a
/// mission. `max == None` means unbounded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Cardinality {
    pub min: u32,
    pub max: Option<u32>,
}

impl Cardinality {
    pub fn new(min: u32, max: Option<u32>) -> Self {
        Cardinality { min, max }
    }

    pub fn admits(&self, count: u32) -> bool {
        count >= self.min && self.max.map_or(true, |m| count <= m)
    }

    /// Intersection of two bounds; `None` when the ranges do not overlap.
    pub fn intersect(&self, other: &Cardinality) -> Option<Cardinality> {
        let min = self.min.max(other.min);
        let max = match (self.max, other.max) {
            (None, m) | (m, None) => m,
            (Some(x), Some(y)) => Some(x.min(y)),
        };
        match max {
            Some(m) if m < min => None,
            _ => Some(Cardinality { min, max }),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct StructuralSpec {
    pub roles: BTreeSet<String>,
    pub links: BTreeSet<Link>,
    pub compatibilities: BTreeSet<Compatibility>,
    pub role_cardinalities: BTreeMap<String, Cardinality>,
    pub subgroup_cardinalities: BTreeMap<String, Cardinality>,
}

impl StructuralSpec {
    /// True when the two roles are compatible in either order.
    pub fn compatible(&self, x: &str, y: &str) -> bool {
        x == y || self.compatibilities.contains(&Compatibility::new(x, y))
    }
}

/// Goal decomposition operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum PlanOperator {
    Sequence,
    Choice,
    Parallel,
}

/// One decomposition: the parent goal is achieved through its children under
/// the given operator.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Plan {
    pub parent: String,
    pub operator: PlanOperator,
    pub children: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct FunctionalSpec {
    pub goals: BTreeSet<String>,
    pub plans: Vec<Plan>,
    /// Mission name to the set of goals it groups.
    pub missions: BTreeMap<String, BTreeSet<String>>,
    pub mission_cardinalities: BTreeMap<String, Cardinality>,
    /// Per-agent preference order over missions, most preferred first.
    pub preference_orders: BTreeMap<String, Vec<String>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum DeonticKind {
    Permission,
    Obligation,
}

/// Inclusive step interval `[start, end]` within an episode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StepInterval {
    pub start: u32,
    pub end: u32,
}

impl StepInterval {
    pub fn contains(&self, step: u32) -> bool {
        step >= self.start && step <= self.end
    }
}

/// Permission or obligation of a role towards a mission, optionally limited
/// to step intervals. An empty interval set means "always".
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DeonticRelation {
    pub role: String,
    pub mission: String,
    pub kind: DeonticKind,
    #[cfg_attr(feature = "serde", serde(default))]
    pub time_constraint: BTreeSet<StepInterval>,
}

impl DeonticRelation {
    /// Whether the relation is in force at the given step.
    pub fn active_at(&self, step: u32) -> bool {
        self.time_constraint.is_empty() || self.time_constraint.iter().any(|i| i.contains(step))
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OrganizationalSpecification {
    #[cfg_attr(feature = "serde", serde(rename = "structural_specifications", default))]
    pub structural: StructuralSpec,
    #[cfg_attr(feature = "serde", serde(rename = "functional_specifications", default))]
    pub functional: FunctionalSpec,
    #[cfg_attr(feature = "serde", serde(rename = "deontic_specifications", default))]
    pub deontic: BTreeSet<DeonticRelation>,
}

impl OrganizationalSpecification {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Deontic relations that bind the given role.
    pub fn deontic_for_role<'a>(
        &'a self,
        role: &'a str,
    ) -> impl Iterator<Item = &'a DeonticRelation> + 'a {
        self.deontic.iter().filter(move |d| d.role == role)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compatibility_is_order_insensitive() {
        let c1 = Compatibility::new("b", "a");
        let c2 = Compatibility::new("a", "b");
        assert_eq!(c1, c2);
        assert_eq!(c1.a, "a");
        let mut spec = StructuralSpec::default();
        spec.compatibilities.insert(c1);
        assert!(spec.compatible("a", "b"));
        assert!(spec.compatible("b", "a"));
        assert!(spec.compatible("a", "a"));
        assert!(!spec.compatible("a", "c"));
    }

    #[test]
    fn cardinality_intersection() {
        let a = Cardinality::new(1, Some(4));
        let b = Cardinality::new(2, None);
        assert_eq!(a.intersect(&b), Some(Cardinality::new(2, Some(4))));
        let c = Cardinality::new(5, Some(9));
        assert_eq!(a.intersect(&c), None);
        assert!(b.admits(100));
        assert!(!a.admits(0));
        assert!(!a.admits(5));
    }

    #[test]
    fn deontic_time_windows() {
        let mut tc = BTreeSet::new();
        tc.insert(StepInterval { start: 3, end: 5 });
        let d = DeonticRelation {
            role: "r".into(),
            mission: "m".into(),
            kind: DeonticKind::Obligation,
            time_constraint: tc,
        };
        assert!(!d.active_at(2));
        assert!(d.active_at(3));
        assert!(d.active_at(5));
        assert!(!d.active_at(6));
        let always = DeonticRelation {
            time_constraint: BTreeSet::new(),
            ..d
        };
        assert!(always.active_at(0));
        assert!(always.active_at(u32::MAX));
    }

    #[test]
    fn link_kind_orders_by_strength() {
        assert!(LinkKind::Acquaintance < LinkKind::Communication);
        assert!(LinkKind::Communication < LinkKind::Authority);
    }
}
