//! Structural links between inferred roles, from interaction statistics.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::history::JointHistory;
use crate::org::{Link, LinkKind};
use crate::relations::{RegistryError, RelationRegistry};

/// A link plus the number of supporting occurrences.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InferredLink {
    pub link: Link,
    pub support: usize,
}

/// Derives links between per-episode roles.
///
/// For every declared message, a send action by an agent of role `r` whose
/// matching receive observation shows up in another agent's history within
/// `window` steps counts toward a communication link `r -> r'`; the
/// receiving agent reacting with a declared compliance action upgrades the
/// occurrence to authority evidence. Steps where two agents both hold a
/// co-presence observation count toward acquaintance. Only the strongest
/// sufficiently supported kind survives per ordered role pair.
pub fn infer_links(
    histories: &[JointHistory],
    registry: &RelationRegistry,
    roles: &BTreeMap<(String, u64), String>,
    min_support: usize,
    window: u32,
) -> Result<Vec<InferredLink>, RegistryError> {
    registry.validate()?;

    let mut communication: BTreeMap<(String, String), usize> = BTreeMap::new();
    let mut authority: BTreeMap<(String, String), usize> = BTreeMap::new();
    let mut acquaintance: BTreeMap<(String, String), usize> = BTreeMap::new();

    for h in histories {
        // Role lookup for this episode without per-step key building.
        let mut role_of: BTreeMap<&str, &str> = BTreeMap::new();
        for ((agent, episode), role) in roles {
            if *episode == h.episode {
                role_of.insert(agent.as_str(), role.as_str());
            }
        }

        for m in &registry.messages {
            for (si, sender) in h.agents.iter().enumerate() {
                let Some(&sender_role) = role_of.get(sender.agent.as_str()) else {
                    continue;
                };
                for (t, entry) in sender.entries.iter().enumerate() {
                    if !m.send_actions.contains(&entry.action) {
                        continue;
                    }
                    for (ri, receiver) in h.agents.iter().enumerate() {
                        if ri == si {
                            continue;
                        }
                        let Some(&receiver_role) = role_of.get(receiver.agent.as_str()) else {
                            continue;
                        };
                        let last = (t + window as usize).min(receiver.entries.len().saturating_sub(1));
                        for t2 in t..=last {
                            let received = &receiver.entries[t2];
                            if !m.receive_observations.contains(&received.observation) {
                                continue;
                            }
                            let key = (sender_role.into(), receiver_role.into());
                            *communication.entry(key).or_insert(0) += 1;
                            if m.compliance_actions.contains(&received.action) {
                                let key = (sender_role.into(), receiver_role.into());
                                *authority.entry(key).or_insert(0) += 1;
                            }
                            break;
                        }
                    }
                }
            }
        }

        if !registry.copresence_observations.is_empty() {
            let steps = h.agents.first().map(|a| a.entries.len()).unwrap_or(0);
            for t in 0..steps {
                for (xi, x) in h.agents.iter().enumerate() {
                    let Some(&rx) = role_of.get(x.agent.as_str()) else {
                        continue;
                    };
                    if !registry
                        .copresence_observations
                        .contains(&x.entries[t].observation)
                    {
                        continue;
                    }
                    for (yi, y) in h.agents.iter().enumerate() {
                        if yi == xi {
                            continue;
                        }
                        let Some(&ry) = role_of.get(y.agent.as_str()) else {
                            continue;
                        };
                        if registry
                            .copresence_observations
                            .contains(&y.entries[t].observation)
                        {
                            *acquaintance.entry((rx.into(), ry.into())).or_insert(0) += 1;
                        }
                    }
                }
            }
        }
    }

    // Strongest supported kind per ordered pair.
    let mut chosen: BTreeMap<(String, String), (LinkKind, usize)> = BTreeMap::new();
    for ((s, d), n) in authority {
        if n >= min_support {
            chosen.insert((s, d), (LinkKind::Authority, n));
        }
    }
    for ((s, d), n) in communication {
        if n >= min_support {
            chosen.entry((s, d)).or_insert((LinkKind::Communication, n));
        }
    }
    for ((s, d), n) in acquaintance {
        if n >= min_support {
            chosen.entry((s, d)).or_insert((LinkKind::Acquaintance, n));
        }
    }

    Ok(chosen
        .into_iter()
        .map(|((source, dest), (kind, support))| InferredLink {
            link: Link { source, dest, kind },
            support,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::history::{AgentHistory, HistoryEntry};
    use crate::relations::MessageDecl;
    use crate::token::Token;
    use alloc::string::ToString;

    fn entries(pairs: &[(u32, u32)]) -> Vec<HistoryEntry> {
        pairs
            .iter()
            .enumerate()
            .map(|(i, &(o, a))| HistoryEntry {
                step: i as u32,
                observation: Token(o),
                action: Token(a),
                reward: 0.0,
            })
            .collect()
    }

    fn episode(episode: u64, per_agent: &[(&str, &[(u32, u32)])]) -> JointHistory {
        JointHistory {
            episode,
            seed: episode,
            env_id: "fixture".to_string(),
            gamma: 1.0,
            agents: per_agent
                .iter()
                .map(|(name, pairs)| AgentHistory {
                    agent: name.to_string(),
                    entries: entries(pairs),
                })
                .collect(),
            episode_return: 0.0,
        }
    }

    fn order_registry() -> RelationRegistry {
        RelationRegistry {
            messages: alloc::vec![MessageDecl {
                name: "go".to_string(),
                send_actions: [Token(7)].into_iter().collect(),
                receive_observations: [Token(1007)].into_iter().collect(),
                compliance_actions: [Token(600)].into_iter().collect(),
            }],
            ..Default::default()
        }
    }

    fn two_roles(episodes: u64) -> BTreeMap<(String, u64), String> {
        let mut roles = BTreeMap::new();
        for e in 0..episodes {
            roles.insert(("boss".to_string(), e), "commander".to_string());
            roles.insert(("hand".to_string(), e), "worker".to_string());
        }
        roles
    }

    #[test]
    fn compliant_receipt_yields_authority() {
        // Boss sends 7 each step; hand receives 1007 next step and complies.
        let h = episode(
            0,
            &[
                ("boss", &[(1000, 7), (1000, 7), (1000, 7), (1000, 7)]),
                ("hand", &[(1001, 601), (1007, 600), (1007, 600), (1007, 600)]),
            ],
        );
        let links =
            infer_links(&[h], &order_registry(), &two_roles(1), 3, 1).unwrap();
        assert_eq!(links.len(), 1);
        assert_eq!(links[0].link.kind, LinkKind::Authority);
        assert_eq!(links[0].link.source, "commander");
        assert_eq!(links[0].link.dest, "worker");
        assert!(links[0].support >= 3);
    }

    #[test]
    fn receipt_without_compliance_is_communication() {
        let h = episode(
            0,
            &[
                ("boss", &[(1000, 7), (1000, 7), (1000, 7), (1000, 7)]),
                ("hand", &[(1001, 601), (1007, 601), (1007, 601), (1007, 601)]),
            ],
        );
        let links =
            infer_links(&[h], &order_registry(), &two_roles(1), 3, 1).unwrap();
        assert_eq!(links.len(), 1);
        assert_eq!(links[0].link.kind, LinkKind::Communication);
    }

    #[test]
    fn sends_without_receives_make_no_link() {
        // Orders go out but the matching observation never shows up.
        let h = episode(
            0,
            &[
                ("boss", &[(1000, 7), (1000, 7), (1000, 7), (1000, 7)]),
                ("hand", &[(1001, 601), (1001, 601), (1001, 601), (1001, 601)]),
            ],
        );
        let links =
            infer_links(&[h], &order_registry(), &two_roles(1), 3, 1).unwrap();
        assert!(links.is_empty());
    }

    #[test]
    fn support_below_threshold_is_dropped() {
        let h = episode(
            0,
            &[
                ("boss", &[(1000, 7), (1000, 0)]),
                ("hand", &[(1001, 601), (1007, 600)]),
            ],
        );
        let links =
            infer_links(&[h], &order_registry(), &two_roles(1), 3, 1).unwrap();
        assert!(links.is_empty());
    }

    #[test]
    fn copresence_yields_mutual_acquaintance() {
        let mut registry = RelationRegistry::default();
        registry.copresence_observations.insert(Token(1050));
        let h = episode(
            0,
            &[
                ("boss", &[(1050, 0), (1050, 0), (1050, 0)]),
                ("hand", &[(1050, 601), (1050, 601), (1050, 601)]),
            ],
        );
        let links = infer_links(&[h], &registry, &two_roles(1), 3, 1).unwrap();
        assert_eq!(links.len(), 2);
        for l in &links {
            assert_eq!(l.link.kind, LinkKind::Acquaintance);
            assert_eq!(l.support, 3);
        }
    }

    #[test]
    fn stronger_kind_wins_per_pair() {
        let mut registry = order_registry();
        registry.copresence_observations.insert(Token(1007));
        registry.copresence_observations.insert(Token(1000));
        let h = episode(
            0,
            &[
                ("boss", &[(1000, 7), (1000, 7), (1000, 7), (1000, 7)]),
                ("hand", &[(1007, 600), (1007, 600), (1007, 600), (1007, 600)]),
            ],
        );
        let links = infer_links(&[h], &registry, &two_roles(1), 3, 1).unwrap();
        let forward = links
            .iter()
            .find(|l| l.link.source == "commander")
            .unwrap();
        assert_eq!(forward.link.kind, LinkKind::Authority);
        // The reverse direction has only co-presence evidence.
        let back = links.iter().find(|l| l.link.source == "worker").unwrap();
        assert_eq!(back.link.kind, LinkKind::Acquaintance);
    }

    #[test]
    fn unassigned_agents_are_ignored() {
        let mut roles = BTreeMap::new();
        roles.insert(("boss".to_string(), 0), "commander".to_string());
        let h = episode(
            0,
            &[
                ("boss", &[(1000, 7), (1000, 7), (1000, 7), (1000, 7)]),
                ("hand", &[(1007, 600), (1007, 600), (1007, 600), (1007, 600)]),
            ],
        );
        let links = infer_links(&[h], &order_registry(), &roles, 3, 1).unwrap();
        assert!(links.is_empty());
    }
}
