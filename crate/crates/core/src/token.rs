//! Integer tokens shared by observations and actions.

use alloc::vec::Vec;

/// Boundary between the two token classes. Action tokens live strictly below
/// this value, observation tokens at or above it, so a flattened
/// observation/action stream stays unambiguous and pattern literals can be
/// classified without extra context.
pub const OBSERVATION_BASE: u32 = 1_000;

/// A single observation or action token.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct Token(pub u32);

impl Token {
    pub fn is_observation(self) -> bool {
        self.0 >= OBSERVATION_BASE
    }

    pub fn is_action(self) -> bool {
        self.0 < OBSERVATION_BASE
    }
}

impl core::fmt::Display for Token {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Finite token vocabulary stored as sorted, disjoint, inclusive ranges.
///
/// Observation spaces can run into the millions of tokens, so the
/// representation must not enumerate members eagerly.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Vocab {
    ranges: Vec<(u32, u32)>,
}

impl Vocab {
    pub fn empty() -> Self {
        Vocab { ranges: Vec::new() }
    }

    /// Inclusive range `[start, end]`.
    pub fn from_range(start: u32, end: u32) -> Self {
        assert!(start <= end, "vocab range start must not exceed end");
        Vocab {
            ranges: alloc::vec![(start, end)],
        }
    }

    pub fn from_tokens<I: IntoIterator<Item = Token>>(tokens: I) -> Self {
        let mut values: Vec<u32> = tokens.into_iter().map(|t| t.0).collect();
        values.sort_unstable();
        values.dedup();
        let mut ranges: Vec<(u32, u32)> = Vec::new();
        for v in values {
            match ranges.last_mut() {
                Some((_, end)) if *end + 1 == v => *end = v,
                _ => ranges.push((v, v)),
            }
        }
        Vocab { ranges }
    }

    /// Union of several vocabularies.
    pub fn merged<'a, I: IntoIterator<Item = &'a Vocab>>(parts: I) -> Self {
        let mut ranges: Vec<(u32, u32)> = parts
            .into_iter()
            .flat_map(|v| v.ranges.iter().copied())
            .collect();
        ranges.sort_unstable();
        let mut out: Vec<(u32, u32)> = Vec::new();
        for (s, e) in ranges {
            match out.last_mut() {
                Some((_, end)) if s <= end.saturating_add(1) => {
                    if e > *end {
                        *end = e;
                    }
                }
                _ => out.push((s, e)),
            }
        }
        Vocab { ranges: out }
    }

    pub fn contains(&self, t: Token) -> bool {
        self.ranges
            .binary_search_by(|&(s, e)| {
                if t.0 < s {
                    core::cmp::Ordering::Greater
                } else if t.0 > e {
                    core::cmp::Ordering::Less
                } else {
                    core::cmp::Ordering::Equal
                }
            })
            .is_ok()
    }

    pub fn len(&self) -> usize {
        self.ranges
            .iter()
            .map(|&(s, e)| (e - s + 1) as usize)
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = Token> + '_ {
        self.ranges
            .iter()
            .flat_map(|&(s, e)| (s..=e).map(Token))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification_boundary() {
        assert!(Token(999).is_action());
        assert!(!Token(999).is_observation());
        assert!(Token(1000).is_observation());
        assert!(!Token(1000).is_action());
    }

    #[test]
    fn vocab_from_tokens_merges_adjacent_runs() {
        let v = Vocab::from_tokens([3, 1, 2, 2, 7, 8].map(Token));
        assert_eq!(v.len(), 5);
        assert!(v.contains(Token(1)));
        assert!(v.contains(Token(3)));
        assert!(!v.contains(Token(5)));
        assert!(v.contains(Token(8)));
        let listed: Vec<u32> = v.iter().map(|t| t.0).collect();
        assert_eq!(listed, alloc::vec![1, 2, 3, 7, 8]);
    }

    #[test]
    fn vocab_range_lookup() {
        let v = Vocab::from_range(1_000, 5_764_801);
        assert!(v.contains(Token(1_000)));
        assert!(v.contains(Token(5_764_801)));
        assert!(!v.contains(Token(999)));
        assert!(!v.contains(Token(5_764_802)));
        assert_eq!(v.len(), 5_763_802);
    }

    #[test]
    fn merged_overlapping_ranges() {
        let a = Vocab::from_range(0, 4);
        let b = Vocab::from_range(3, 9);
        let c = Vocab::from_tokens([Token(11)]);
        let m = Vocab::merged([&a, &b, &c]);
        assert_eq!(m.len(), 11);
        assert!(m.contains(Token(10)) == false);
        assert!(m.contains(Token(11)));
    }
}
