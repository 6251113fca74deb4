//! Structured differences between two organizational specifications.
//!
//! `apply_diff(a, diff_specs(a, b)) == b` for any pair of well-formed
//! specifications. Set-valued sections record added/removed elements;
//! map-valued sections also record changed values; plans and the full
//! preference orders are replaced wholesale when they differ, since their
//! internal order carries meaning.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use super::validate::{validate_spec, Violation};
use super::{
    Cardinality, Compatibility, DeonticRelation, Link, OrganizationalSpecification, Plan,
};

/// Elements present in only one of the two sets.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SetDelta<T: Ord> {
    pub added: BTreeSet<T>,
    pub removed: BTreeSet<T>,
}

impl<T: Ord + Clone> SetDelta<T> {
    fn between(a: &BTreeSet<T>, b: &BTreeSet<T>) -> Self {
        SetDelta {
            added: b.difference(a).cloned().collect(),
            removed: a.difference(b).cloned().collect(),
        }
    }

    fn apply(&self, target: &mut BTreeSet<T>) {
        for item in &self.removed {
            target.remove(item);
        }
        for item in &self.added {
            target.insert(item.clone());
        }
    }

    pub fn is_empty(&self) -> bool {
        self.added.is_empty() && self.removed.is_empty()
    }
}

/// Keys present on one side only, plus keys whose value changed. `changed`
/// stores the new value.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MapDelta<K: Ord, V> {
    pub added: BTreeMap<K, V>,
    pub removed: BTreeSet<K>,
    pub changed: BTreeMap<K, V>,
}

impl<K: Ord + Clone, V: PartialEq + Clone> MapDelta<K, V> {
    fn between(a: &BTreeMap<K, V>, b: &BTreeMap<K, V>) -> Self {
        let mut added = BTreeMap::new();
        let mut removed = BTreeSet::new();
        let mut changed = BTreeMap::new();
        for (k, v) in b {
            match a.get(k) {
                None => {
                    added.insert(k.clone(), v.clone());
                }
                Some(old) if old != v => {
                    changed.insert(k.clone(), v.clone());
                }
                Some(_) => {}
            }
        }
        for k in a.keys() {
            if !b.contains_key(k) {
                removed.insert(k.clone());
            }
        }
        MapDelta {
            added,
            removed,
            changed,
        }
    }

    fn apply(&self, target: &mut BTreeMap<K, V>) {
        for k in &self.removed {
            target.remove(k);
        }
        for (k, v) in self.added.iter().chain(self.changed.iter()) {
            target.insert(k.clone(), v.clone());
        }
    }

    pub fn is_empty(&self) -> bool {
        self.added.is_empty() && self.removed.is_empty() && self.changed.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpecDiff {
    pub roles: SetDelta<String>,
    pub links: SetDelta<Link>,
    pub compatibilities: SetDelta<Compatibility>,
    pub role_cardinalities: MapDelta<String, Cardinality>,
    pub subgroup_cardinalities: MapDelta<String, Cardinality>,
    pub goals: SetDelta<String>,
    /// Full replacement when the plan lists differ.
    pub plans: Option<Vec<Plan>>,
    pub missions: MapDelta<String, BTreeSet<String>>,
    pub mission_cardinalities: MapDelta<String, Cardinality>,
    /// Full replacement per agent when that agent's order differs.
    pub preference_orders: MapDelta<String, Vec<String>>,
    pub deontic: SetDelta<DeonticRelation>,
}

impl SpecDiff {
    pub fn is_empty(&self) -> bool {
        self.roles.is_empty()
            && self.links.is_empty()
            && self.compatibilities.is_empty()
            && self.role_cardinalities.is_empty()
            && self.subgroup_cardinalities.is_empty()
            && self.goals.is_empty()
            && self.plans.is_none()
            && self.missions.is_empty()
            && self.mission_cardinalities.is_empty()
            && self.preference_orders.is_empty()
            && self.deontic.is_empty()
    }
}

/// One of the inputs failed validation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DiffError {
    InvalidSpec {
        side: &'static str,
        violations: Vec<Violation>,
    },
}

impl core::fmt::Display for DiffError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            DiffError::InvalidSpec { side, violations } => {
                write!(f, "{side} specification is not well formed: ")?;
                for (i, v) in violations.iter().enumerate() {
                    if i > 0 {
                        write!(f, "; ")?;
                    }
                    write!(f, "{v}")?;
                }
                Ok(())
            }
        }
    }
}

impl core::error::Error for DiffError {}

pub fn diff_specs(
    a: &OrganizationalSpecification,
    b: &OrganizationalSpecification,
) -> Result<SpecDiff, DiffError> {
    for (side, spec) in [("left", a), ("right", b)] {
        let violations = validate_spec(spec);
        if !violations.is_empty() {
            return Err(DiffError::InvalidSpec { side, violations });
        }
    }
    Ok(SpecDiff {
        roles: SetDelta::between(&a.structural.roles, &b.structural.roles),
        links: SetDelta::between(&a.structural.links, &b.structural.links),
        compatibilities: SetDelta::between(
            &a.structural.compatibilities,
            &b.structural.compatibilities,
        ),
        role_cardinalities: MapDelta::between(
            &a.structural.role_cardinalities,
            &b.structural.role_cardinalities,
        ),
        subgroup_cardinalities: MapDelta::between(
            &a.structural.subgroup_cardinalities,
            &b.structural.subgroup_cardinalities,
        ),
        goals: SetDelta::between(&a.functional.goals, &b.functional.goals),
        plans: if a.functional.plans == b.functional.plans {
            None
        } else {
            Some(b.functional.plans.clone())
        },
        missions: MapDelta::between(&a.functional.missions, &b.functional.missions),
        mission_cardinalities: MapDelta::between(
            &a.functional.mission_cardinalities,
            &b.functional.mission_cardinalities,
        ),
        preference_orders: MapDelta::between(
            &a.functional.preference_orders,
            &b.functional.preference_orders,
        ),
        deontic: SetDelta::between(&a.deontic, &b.deontic),
    })
}

pub fn apply_diff(
    base: &OrganizationalSpecification,
    diff: &SpecDiff,
) -> OrganizationalSpecification {
    let mut out = base.clone();
    diff.roles.apply(&mut out.structural.roles);
    diff.links.apply(&mut out.structural.links);
    diff.compatibilities.apply(&mut out.structural.compatibilities);
    diff.role_cardinalities
        .apply(&mut out.structural.role_cardinalities);
    diff.subgroup_cardinalities
        .apply(&mut out.structural.subgroup_cardinalities);
    diff.goals.apply(&mut out.functional.goals);
    if let Some(plans) = &diff.plans {
        out.functional.plans = plans.clone();
    }
    diff.missions.apply(&mut out.functional.missions);
    diff.mission_cardinalities
        .apply(&mut out.functional.mission_cardinalities);
    diff.preference_orders
        .apply(&mut out.functional.preference_orders);
    diff.deontic.apply(&mut out.deontic);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::org::{DeonticKind, LinkKind};
    use alloc::string::ToString;

    fn spec_with(roles: &[&str]) -> OrganizationalSpecification {
        let mut s = OrganizationalSpecification::empty();
        for r in roles {
            s.structural.roles.insert(r.to_string());
        }
        s
    }

    #[test]
    fn identical_specs_diff_empty() {
        let a = spec_with(&["x", "y"]);
        let d = diff_specs(&a, &a.clone()).unwrap();
        assert!(d.is_empty());
        assert_eq!(apply_diff(&a, &d), a);
    }

    #[test]
    fn deontic_kind_change_appears_as_remove_and_add() {
        let mut a = spec_with(&["r"]);
        a.functional.goals.insert("g".to_string());
        a.functional
            .missions
            .insert("m".to_string(), [("g".to_string())].into_iter().collect());
        let mut b = a.clone();
        a.deontic.insert(DeonticRelation {
            role: "r".to_string(),
            mission: "m".to_string(),
            kind: DeonticKind::Permission,
            time_constraint: Default::default(),
        });
        b.deontic.insert(DeonticRelation {
            role: "r".to_string(),
            mission: "m".to_string(),
            kind: DeonticKind::Obligation,
            time_constraint: Default::default(),
        });
        let d = diff_specs(&a, &b).unwrap();
        assert_eq!(d.deontic.added.len(), 1);
        assert_eq!(d.deontic.removed.len(), 1);
        assert_eq!(apply_diff(&a, &d), b);
    }

    #[test]
    fn added_role_and_link_round_trip() {
        let a = spec_with(&["x"]);
        let mut b = spec_with(&["x", "y"]);
        b.structural.links.insert(Link {
            source: "x".to_string(),
            dest: "y".to_string(),
            kind: LinkKind::Communication,
        });
        let d = diff_specs(&a, &b).unwrap();
        assert_eq!(d.roles.added.len(), 1);
        assert_eq!(d.links.added.len(), 1);
        assert_eq!(apply_diff(&a, &d), b);
        let reverse = diff_specs(&b, &a).unwrap();
        assert_eq!(apply_diff(&b, &reverse), a);
    }

    #[test]
    fn invalid_input_is_rejected() {
        let a = spec_with(&["x"]);
        let mut bad = spec_with(&["x"]);
        bad.structural.links.insert(Link {
            source: "x".to_string(),
            dest: "nope".to_string(),
            kind: LinkKind::Acquaintance,
        });
        let err = diff_specs(&a, &bad).unwrap_err();
        assert!(matches!(err, DiffError::InvalidSpec { side: "right", .. }));
    }
}
