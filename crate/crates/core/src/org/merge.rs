//! Merging organizational specifications.
//!
//! Set-valued sections union; cardinalities intersect (both constraints must
//! keep holding); missions union their goal sets; plans concatenate without
//! duplicates. Conflicts are collected, not short-circuited: disjoint
//! cardinality ranges, preference orders that disagree for the same agent,
//! and any well-formedness violation the combined specification would have.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::validate::validate_spec;
use super::{Cardinality, OrganizationalSpecification};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MergeError {
    Conflicts(Vec<String>),
}

impl core::fmt::Display for MergeError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            MergeError::Conflicts(items) => {
                write!(f, "specifications cannot be merged: ")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, "; ")?;
                    }
                    write!(f, "{item}")?;
                }
                Ok(())
            }
        }
    }
}

impl core::error::Error for MergeError {}

fn merge_cardinalities(
    a: &BTreeMap<String, Cardinality>,
    b: &BTreeMap<String, Cardinality>,
    what: &str,
    conflicts: &mut Vec<String>,
) -> BTreeMap<String, Cardinality> {
    let mut out = a.clone();
    for (k, vb) in b {
        match out.get(k) {
            None => {
                out.insert(k.clone(), *vb);
            }
            Some(va) => match va.intersect(vb) {
                Some(c) => {
                    out.insert(k.clone(), c);
                }
                None => conflicts.push(format!(
                    "{what} for '{k}' have disjoint ranges [{},{}] and [{},{}]",
                    va.min,
                    va.max.map_or(String::from("inf"), |m| format!("{m}")),
                    vb.min,
                    vb.max.map_or(String::from("inf"), |m| format!("{m}")),
                )),
            },
        }
    }
    out
}

pub fn merge_specs(
    a: &OrganizationalSpecification,
    b: &OrganizationalSpecification,
) -> Result<OrganizationalSpecification, MergeError> {
    let mut conflicts: Vec<String> = Vec::new();
    let mut out = OrganizationalSpecification::empty();

    out.structural.roles = a.structural.roles.union(&b.structural.roles).cloned().collect();
    out.structural.links = a.structural.links.union(&b.structural.links).cloned().collect();
    out.structural.compatibilities = a
        .structural
        .compatibilities
        .union(&b.structural.compatibilities)
        .cloned()
        .collect();
    out.structural.role_cardinalities = merge_cardinalities(
        &a.structural.role_cardinalities,
        &b.structural.role_cardinalities,
        "role cardinalities",
        &mut conflicts,
    );
    out.structural.subgroup_cardinalities = merge_cardinalities(
        &a.structural.subgroup_cardinalities,
        &b.structural.subgroup_cardinalities,
        "subgroup cardinalities",
        &mut conflicts,
    );

    out.functional.goals = a.functional.goals.union(&b.functional.goals).cloned().collect();
    out.functional.plans = a.functional.plans.clone();
    for plan in &b.functional.plans {
        if !out.functional.plans.contains(plan) {
            out.functional.plans.push(plan.clone());
        }
    }
    out.functional.missions = a.functional.missions.clone();
    for (mission, goals) in &b.functional.missions {
        out.functional
            .missions
            .entry(mission.clone())
            .or_default()
            .extend(goals.iter().cloned());
    }
    out.functional.mission_cardinalities = merge_cardinalities(
        &a.functional.mission_cardinalities,
        &b.functional.mission_cardinalities,
        "mission cardinalities",
        &mut conflicts,
    );
    out.functional.preference_orders = a.functional.preference_orders.clone();
    for (agent, order) in &b.functional.preference_orders {
        match out.functional.preference_orders.get(agent) {
            None => {
                out.functional
                    .preference_orders
                    .insert(agent.clone(), order.clone());
            }
            Some(existing) if existing == order => {}
            Some(_) => conflicts.push(format!(
                "preference orders for '{agent}' disagree"
            )),
        }
    }

    out.deontic = a.deontic.union(&b.deontic).cloned().collect();

    // A union of two well-formed specifications can still break global rules
    // (plan DAG shape, single root); those count as merge conflicts too.
    for violation in validate_spec(&out) {
        conflicts.push(format!("merged specification would be invalid: {violation}"));
    }

    if conflicts.is_empty() {
        Ok(out)
    } else {
        Err(MergeError::Conflicts(conflicts))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::org::{Plan, PlanOperator};
    use alloc::string::ToString;

    fn spec_with_roles(roles: &[&str]) -> OrganizationalSpecification {
        let mut s = OrganizationalSpecification::empty();
        for r in roles {
            s.structural.roles.insert(r.to_string());
        }
        s
    }

    #[test]
    fn merge_with_empty_is_identity() {
        let mut a = spec_with_roles(&["x", "y"]);
        a.structural
            .role_cardinalities
            .insert("x".to_string(), Cardinality::new(1, Some(3)));
        let m = merge_specs(&a, &OrganizationalSpecification::empty()).unwrap();
        assert_eq!(m, a);
        let m2 = merge_specs(&OrganizationalSpecification::empty(), &a).unwrap();
        assert_eq!(m2, a);
    }

    #[test]
    fn cardinalities_intersect() {
        let mut a = spec_with_roles(&["x"]);
        a.structural
            .role_cardinalities
            .insert("x".to_string(), Cardinality::new(1, Some(4)));
        let mut b = spec_with_roles(&["x"]);
        b.structural
            .role_cardinalities
            .insert("x".to_string(), Cardinality::new(2, None));
        let m = merge_specs(&a, &b).unwrap();
        assert_eq!(
            m.structural.role_cardinalities["x"],
            Cardinality::new(2, Some(4))
        );
    }

    #[test]
    fn disjoint_cardinalities_conflict() {
        let mut a = spec_with_roles(&["x"]);
        a.structural
            .role_cardinalities
            .insert("x".to_string(), Cardinality::new(0, Some(1)));
        let mut b = spec_with_roles(&["x"]);
        b.structural
            .role_cardinalities
            .insert("x".to_string(), Cardinality::new(3, Some(5)));
        let err = merge_specs(&a, &b).unwrap_err();
        let MergeError::Conflicts(items) = err;
        assert_eq!(items.len(), 1);
        assert!(items[0].contains("disjoint"));
    }

    #[test]
    fn plan_union_breaking_dag_conflicts() {
        let mut a = OrganizationalSpecification::empty();
        a.functional.goals.insert("g1".to_string());
        a.functional.goals.insert("g2".to_string());
        a.functional.plans.push(Plan {
            parent: "g1".to_string(),
            operator: PlanOperator::Sequence,
            children: alloc::vec!["g2".to_string()],
        });
        let mut b = OrganizationalSpecification::empty();
        b.functional.goals.insert("g1".to_string());
        b.functional.goals.insert("g2".to_string());
        b.functional.plans.push(Plan {
            parent: "g2".to_string(),
            operator: PlanOperator::Sequence,
            children: alloc::vec!["g1".to_string()],
        });
        assert!(validate_spec(&a).is_empty());
        assert!(validate_spec(&b).is_empty());
        let err = merge_specs(&a, &b).unwrap_err();
        let MergeError::Conflicts(items) = err;
        assert!(items.iter().any(|c| c.contains("invalid")));
    }

    #[test]
    fn preference_disagreement_reported() {
        let mut a = OrganizationalSpecification::empty();
        a.functional.goals.insert("g".to_string());
        a.functional
            .missions
            .insert("m1".to_string(), ["g".to_string()].into_iter().collect());
        a.functional
            .missions
            .insert("m2".to_string(), ["g".to_string()].into_iter().collect());
        let mut b = a.clone();
        a.functional
            .preference_orders
            .insert("agent_0".to_string(), alloc::vec!["m1".to_string(), "m2".to_string()]);
        b.functional
            .preference_orders
            .insert("agent_0".to_string(), alloc::vec!["m2".to_string(), "m1".to_string()]);
        let err = merge_specs(&a, &b).unwrap_err();
        let MergeError::Conflicts(items) = err;
        assert!(items[0].contains("agent_0"));
    }
}
