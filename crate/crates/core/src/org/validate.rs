//! Structural well-formedness checks for organizational specifications.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::OrganizationalSpecification;

/// One violated well-formedness rule, naming the offending element.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    EmptyName {
        context: String,
    },
    UndeclaredRole {
        context: String,
        role: String,
    },
    UndeclaredGoal {
        context: String,
        goal: String,
    },
    UndeclaredMission {
        context: String,
        mission: String,
    },
    CardinalityOrder {
        context: String,
        min: u32,
        max: u32,
    },
    PlanCycle {
        goal: String,
    },
    MultiplePlanRoots {
        roots: Vec<String>,
    },
    DuplicatePlanParent {
        goal: String,
    },
    IntervalOrder {
        context: String,
        start: u32,
        end: u32,
    },
    OverlappingIntervals {
        context: String,
    },
}

impl core::fmt::Display for Violation {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Violation::EmptyName { context } => {
                write!(f, "empty name in {context}")
            }
            Violation::UndeclaredRole { context, role } => {
                write!(f, "{context} references undeclared role '{role}'")
            }
            Violation::UndeclaredGoal { context, goal } => {
                write!(f, "{context} references undeclared goal '{goal}'")
            }
            Violation::UndeclaredMission { context, mission } => {
                write!(f, "{context} references undeclared mission '{mission}'")
            }
            Violation::CardinalityOrder { context, min, max } => {
                write!(f, "{context} has min {min} greater than max {max}")
            }
            Violation::PlanCycle { goal } => {
                write!(f, "plan decomposition cycles through goal '{goal}'")
            }
            Violation::MultiplePlanRoots { roots } => {
                write!(f, "plan decomposition has multiple roots: {roots:?}")
            }
            Violation::DuplicatePlanParent { goal } => {
                write!(f, "goal '{goal}' is decomposed by more than one plan")
            }
            Violation::IntervalOrder {
                context,
                start,
                end,
            } => {
                write!(f, "{context} has interval start {start} after end {end}")
            }
            Violation::OverlappingIntervals { context } => {
                write!(f, "{context} has overlapping step intervals")
            }
        }
    }
}

/// Returns every violated rule; an empty vector means the specification is
/// well formed. Deterministic order: structural, functional, deontic, each
/// section in collection order.
pub fn validate_spec(spec: &OrganizationalSpecification) -> Vec<Violation> {
    let mut out = Vec::new();
    let roles = &spec.structural.roles;
    let goals = &spec.functional.goals;
    let missions: BTreeSet<&String> = spec.functional.missions.keys().collect();

    let check_role = |out: &mut Vec<Violation>, context: String, role: &String| {
        if !roles.contains(role) {
            out.push(Violation::UndeclaredRole {
                context,
                role: role.clone(),
            });
        }
    };

    for role in roles {
        if role.is_empty() {
            out.push(Violation::EmptyName {
                context: String::from("structural roles"),
            });
        }
    }

    for link in &spec.structural.links {
        let context = format!(
            "link ({}, {}, {})",
            link.source,
            link.dest,
            link.kind.short_name()
        );
        check_role(&mut out, context.clone(), &link.source);
        check_role(&mut out, context, &link.dest);
    }

    for compat in &spec.structural.compatibilities {
        let context = format!("compatibility ({}, {})", compat.a, compat.b);
        check_role(&mut out, context.clone(), &compat.a);
        check_role(&mut out, context, &compat.b);
    }

    for (role, card) in &spec.structural.role_cardinalities {
        let context = format!("role cardinality for '{role}'");
        check_role(&mut out, context.clone(), role);
        if let Some(max) = card.max {
            if card.min > max {
                out.push(Violation::CardinalityOrder {
                    context,
                    min: card.min,
                    max,
                });
            }
        }
    }

    for (group, card) in &spec.structural.subgroup_cardinalities {
        if let Some(max) = card.max {
            if card.min > max {
                out.push(Violation::CardinalityOrder {
                    context: format!("subgroup cardinality for '{group}'"),
                    min: card.min,
                    max,
                });
            }
        }
    }

    for goal in goals {
        if goal.is_empty() {
            out.push(Violation::EmptyName {
                context: String::from("functional goals"),
            });
        }
    }

    validate_plans(spec, &mut out);

    for (mission, mission_goals) in &spec.functional.missions {
        if mission.is_empty() {
            out.push(Violation::EmptyName {
                context: String::from("functional missions"),
            });
        }
        for goal in mission_goals {
            if !goals.contains(goal) {
                out.push(Violation::UndeclaredGoal {
                    context: format!("mission '{mission}'"),
                    goal: goal.clone(),
                });
            }
        }
    }

    for (mission, card) in &spec.functional.mission_cardinalities {
        let context = format!("mission cardinality for '{mission}'");
        if !missions.contains(mission) {
            out.push(Violation::UndeclaredMission {
                context: context.clone(),
                mission: mission.clone(),
            });
        }
        if let Some(max) = card.max {
            if card.min > max {
                out.push(Violation::CardinalityOrder {
                    context,
                    min: card.min,
                    max,
                });
            }
        }
    }

    for (agent, order) in &spec.functional.preference_orders {
        for mission in order {
            if !missions.contains(mission) {
                out.push(Violation::UndeclaredMission {
                    context: format!("preference order for '{agent}'"),
                    mission: mission.clone(),
                });
            }
        }
    }

    for d in &spec.deontic {
        let context = format!(
            "deontic {:?} of '{}' towards '{}'",
            d.kind, d.role, d.mission
        );
        check_role(&mut out, context.clone(), &d.role);
        if !missions.contains(&d.mission) {
            out.push(Violation::UndeclaredMission {
                context: context.clone(),
                mission: d.mission.clone(),
            });
        }
        let mut prev_end: Option<u32> = None;
        for interval in &d.time_constraint {
            if interval.start > interval.end {
                out.push(Violation::IntervalOrder {
                    context: context.clone(),
                    start: interval.start,
                    end: interval.end,
                });
            }
            if let Some(end) = prev_end {
                if interval.start <= end {
                    out.push(Violation::OverlappingIntervals {
                        context: context.clone(),
                    });
                }
            }
            prev_end = Some(interval.end.max(prev_end.unwrap_or(0)));
        }
    }

    out
}

/// Plans must reference declared goals, decompose each goal at most once,
/// form no cycles, and leave exactly one root among the goals they touch.
fn validate_plans(spec: &OrganizationalSpecification, out: &mut Vec<Violation>) {
    let goals = &spec.functional.goals;
    let plans = &spec.functional.plans;
    if plans.is_empty() {
        return;
    }

    let mut parents: BTreeSet<&String> = BTreeSet::new();
    for plan in plans {
        let context = format!("plan for '{}'", plan.parent);
        if !goals.contains(&plan.parent) {
            out.push(Violation::UndeclaredGoal {
                context: context.clone(),
                goal: plan.parent.clone(),
            });
        }
        if !parents.insert(&plan.parent) {
            out.push(Violation::DuplicatePlanParent {
                goal: plan.parent.clone(),
            });
        }
        for child in &plan.children {
            if !goals.contains(child) {
                out.push(Violation::UndeclaredGoal {
                    context: context.clone(),
                    goal: child.clone(),
                });
            }
        }
    }

    // Edges parent -> child over the goals mentioned by plans.
    let mut children_of: BTreeMap<&str, &[String]> = BTreeMap::new();
    let mut mentioned: BTreeSet<&str> = BTreeSet::new();
    let mut is_child: BTreeSet<&str> = BTreeSet::new();
    for plan in plans {
        children_of.insert(&plan.parent, &plan.children);
        mentioned.insert(&plan.parent);
        for child in &plan.children {
            mentioned.insert(child);
            is_child.insert(child);
        }
    }

    // Iterative three-color cycle detection, deterministic over goal order.
    let mut state: BTreeMap<&str, u8> = BTreeMap::new();
    let mut cycle_goals: BTreeSet<&str> = BTreeSet::new();
    for &start in &mentioned {
        if state.contains_key(start) {
            continue;
        }
        let mut stack: Vec<(&str, usize)> = alloc::vec![(start, 0)];
        state.insert(start, 1);
        while let Some(&mut (node, ref mut idx)) = stack.last_mut() {
            let next = children_of
                .get(node)
                .and_then(|kids| kids.get(*idx))
                .map(String::as_str);
            match next {
                Some(child) => {
                    *idx += 1;
                    match state.get(child).copied() {
                        None => {
                            state.insert(child, 1);
                            stack.push((child, 0));
                        }
                        Some(1) => {
                            cycle_goals.insert(child);
                        }
                        Some(_) => {}
                    }
                }
                None => {
                    state.insert(node, 2);
                    stack.pop();
                }
            }
        }
    }
    for goal in cycle_goals {
        out.push(Violation::PlanCycle {
            goal: String::from(goal),
        });
    }

    let roots: Vec<String> = mentioned
        .iter()
        .filter(|g| !is_child.contains(*g))
        .map(|g| String::from(*g))
        .collect();
    if roots.len() > 1 {
        out.push(Violation::MultiplePlanRoots { roots });
    }
}
