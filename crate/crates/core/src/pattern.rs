//! Anchored patterns over token sequences.
//!
//! The language has literal integer tokens, `.` for any single token, the
//! quantifiers `*` (greedy), `*?` (non-greedy) and `?` applied to the
//! preceding atom, and concatenation. Matching is always against the whole
//! sequence. Literals are separated by `,` or whitespace where adjacency
//! would be ambiguous; digits lex greedily, so `.*14.*?89` is four elements.
//!
//! Boolean matching runs as a position-set simulation and is insensitive to
//! greediness. Greediness matters for `resume_point`, which parses a prefix
//! (a history that is still growing) and reports where in the pattern a
//! continuation would resume; a demanded action exists when that resume
//! position is an unquantified action literal.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::token::Token;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PatternAtom {
    Literal(Token),
    Any,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quantifier {
    One,
    ZeroOrOne,
    Star { greedy: bool },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PatternElem {
    pub atom: PatternAtom,
    pub quant: Quantifier,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PatternParseError {
    UnexpectedChar { pos: usize, ch: char },
    DanglingQuantifier { pos: usize },
    NumberOverflow { pos: usize },
}

impl core::fmt::Display for PatternParseError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            PatternParseError::UnexpectedChar { pos, ch } => {
                write!(f, "unexpected character '{ch}' at byte {pos}")
            }
            PatternParseError::DanglingQuantifier { pos } => {
                write!(f, "quantifier at byte {pos} has no atom to apply to")
            }
            PatternParseError::NumberOverflow { pos } => {
                write!(f, "token literal at byte {pos} does not fit in 32 bits")
            }
        }
    }
}

impl core::error::Error for PatternParseError {}

#[derive(Clone, Debug)]
pub struct HistoryPattern {
    source: String,
    elems: Vec<PatternElem>,
}

impl PartialEq for HistoryPattern {
    fn eq(&self, other: &Self) -> bool {
        self.elems == other.elems
    }
}

impl Eq for HistoryPattern {}

impl core::fmt::Display for HistoryPattern {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(&self.source)
    }
}

fn atom_matches(atom: &PatternAtom, t: Token) -> bool {
    match atom {
        PatternAtom::Literal(l) => *l == t,
        PatternAtom::Any => true,
    }
}

impl HistoryPattern {
    pub fn parse(source: &str) -> Result<Self, PatternParseError> {
        let mut elems: Vec<PatternElem> = Vec::new();
        let mut pending: Option<(u64, usize)> = None;
        let mut chars = source.char_indices().peekable();

        fn flush(elems: &mut Vec<PatternElem>, pending: &mut Option<(u64, usize)>) {
            if let Some((value, _)) = pending.take() {
                elems.push(PatternElem {
                    atom: PatternAtom::Literal(Token(value as u32)),
                    quant: Quantifier::One,
                });
            }
        }

        while let Some((pos, ch)) = chars.next() {
            match ch {
                '0'..='9' => {
                    let digit = (ch as u8 - b'0') as u64;
                    let (value, start) = pending.take().unwrap_or((0, pos));
                    let value = value * 10 + digit;
                    if value > u32::MAX as u64 {
                        return Err(PatternParseError::NumberOverflow { pos: start });
                    }
                    pending = Some((value, start));
                }
                '.' => {
                    flush(&mut elems, &mut pending);
                    elems.push(PatternElem {
                        atom: PatternAtom::Any,
                        quant: Quantifier::One,
                    });
                }
                '*' => {
                    flush(&mut elems, &mut pending);
                    let greedy = if matches!(chars.peek(), Some((_, '?'))) {
                        chars.next();
                        false
                    } else {
                        true
                    };
                    match elems.last_mut() {
                        Some(e) if e.quant == Quantifier::One => {
                            e.quant = Quantifier::Star { greedy };
                        }
                        _ => return Err(PatternParseError::DanglingQuantifier { pos }),
                    }
                }
                '?' => {
                    flush(&mut elems, &mut pending);
                    match elems.last_mut() {
                        Some(e) if e.quant == Quantifier::One => {
                            e.quant = Quantifier::ZeroOrOne;
                        }
                        _ => return Err(PatternParseError::DanglingQuantifier { pos }),
                    }
                }
                ',' | ' ' | '\t' => flush(&mut elems, &mut pending),
                _ => return Err(PatternParseError::UnexpectedChar { pos, ch }),
            }
        }
        flush(&mut elems, &mut pending);
        Ok(HistoryPattern {
            source: String::from(source),
            elems,
        })
    }

    /// Builds a pattern from elements, rendering a canonical source string
    /// that parses back to the same elements.
    pub fn from_elems(elems: Vec<PatternElem>) -> Self {
        use core::fmt::Write;
        let mut source = String::new();
        let mut prev_was_digit = false;
        for e in &elems {
            match e.atom {
                PatternAtom::Literal(t) => {
                    if prev_was_digit {
                        source.push(',');
                    }
                    let _ = write!(source, "{}", t.0);
                    prev_was_digit = true;
                }
                PatternAtom::Any => {
                    source.push('.');
                    prev_was_digit = false;
                }
            }
            match e.quant {
                Quantifier::One => {}
                Quantifier::ZeroOrOne => {
                    source.push('?');
                    prev_was_digit = false;
                }
                Quantifier::Star { greedy: true } => {
                    source.push('*');
                    prev_was_digit = false;
                }
                Quantifier::Star { greedy: false } => {
                    source.push_str("*?");
                    prev_was_digit = false;
                }
            }
        }
        HistoryPattern { source, elems }
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn elems(&self) -> &[PatternElem] {
        &self.elems
    }

    pub fn literal_tokens(&self) -> impl Iterator<Item = Token> + '_ {
        self.elems.iter().filter_map(|e| match e.atom {
            PatternAtom::Literal(t) => Some(t),
            PatternAtom::Any => None,
        })
    }

    /// Positions reachable without consuming input: an optional or starred
    /// element may be skipped.
    fn eps_closure(&self, set: &mut [bool]) {
        for i in 0..self.elems.len() {
            if set[i] && self.elems[i].quant != Quantifier::One {
                set[i + 1] = true;
            }
        }
    }

    /// Whole-sequence match via position-set simulation. Linear in
    /// `seq.len() * elems.len()`; greediness has no effect on the outcome.
    pub fn matches(&self, seq: &[Token]) -> bool {
        let n = self.elems.len();
        let mut cur = alloc::vec![false; n + 1];
        let mut next = alloc::vec![false; n + 1];
        cur[0] = true;
        self.eps_closure(&mut cur);
        for &t in seq {
            next.iter_mut().for_each(|b| *b = false);
            let mut alive = false;
            for i in 0..n {
                if cur[i] && atom_matches(&self.elems[i].atom, t) {
                    let target = match self.elems[i].quant {
                        Quantifier::Star { .. } => i,
                        _ => i + 1,
                    };
                    next[target] = true;
                    alive = true;
                }
            }
            if !alive {
                return false;
            }
            self.eps_closure(&mut next);
            core::mem::swap(&mut cur, &mut next);
        }
        cur[n]
    }

    /// Whole-sequence match that also reports which sequence positions were
    /// consumed by literal elements, following quantifier preference order.
    /// Returns `None` when the sequence does not match.
    pub fn match_positions(&self, seq: &[Token]) -> Option<Vec<usize>> {
        let mut failed: BTreeSet<(usize, usize)> = BTreeSet::new();
        let mut acc: Vec<usize> = Vec::new();
        if self.positions_rec(0, 0, seq, &mut failed, &mut acc) {
            Some(acc)
        } else {
            None
        }
    }

    fn positions_rec(
        &self,
        ei: usize,
        si: usize,
        seq: &[Token],
        failed: &mut BTreeSet<(usize, usize)>,
        acc: &mut Vec<usize>,
    ) -> bool {
        if failed.contains(&(ei, si)) {
            return false;
        }
        if ei == self.elems.len() {
            if si == seq.len() {
                return true;
            }
            failed.insert((ei, si));
            return false;
        }
        let e = self.elems[ei];
        let is_lit = matches!(e.atom, PatternAtom::Literal(_));
        let can_consume = si < seq.len() && atom_matches(&e.atom, seq[si]);
        let try_consume = |acc: &mut Vec<usize>, failed: &mut BTreeSet<(usize, usize)>, stay: bool| -> bool {
            if !can_consume {
                return false;
            }
            if is_lit {
                acc.push(si);
            }
            let next_ei = if stay { ei } else { ei + 1 };
            if self.positions_rec(next_ei, si + 1, seq, failed, acc) {
                return true;
            }
            if is_lit {
                acc.pop();
            }
            false
        };
        let ok = match e.quant {
            Quantifier::One => try_consume(acc, failed, false),
            Quantifier::ZeroOrOne => {
                try_consume(acc, failed, false) || self.positions_rec(ei + 1, si, seq, failed, acc)
            }
            Quantifier::Star { greedy: true } => {
                try_consume(acc, failed, true) || self.positions_rec(ei + 1, si, seq, failed, acc)
            }
            Quantifier::Star { greedy: false } => {
                self.positions_rec(ei + 1, si, seq, failed, acc) || try_consume(acc, failed, true)
            }
        };
        if !ok {
            failed.insert((ei, si));
        }
        ok
    }

    /// Parses `seq` as a prefix of the pattern, resolving choices in each
    /// quantifier's preference order (greedy consumes first, non-greedy
    /// exits first, `?` takes the atom first), and returns the element index
    /// where a continuation of the sequence would resume. When the input
    /// runs out, optional and starred elements that would need a token are
    /// passed over, so the reported position is the first mandatory element.
    /// `None` means `seq` cannot be a prefix of any matching sequence.
    pub fn resume_point(&self, seq: &[Token]) -> Option<usize> {
        let mut failed: BTreeSet<(usize, usize)> = BTreeSet::new();
        self.resume_rec(0, 0, seq, &mut failed)
    }

    fn resume_rec(
        &self,
        ei: usize,
        si: usize,
        seq: &[Token],
        failed: &mut BTreeSet<(usize, usize)>,
    ) -> Option<usize> {
        if failed.contains(&(ei, si)) {
            return None;
        }
        if si == seq.len() {
            let mut e = ei;
            while e < self.elems.len() && self.elems[e].quant != Quantifier::One {
                e += 1;
            }
            return Some(e);
        }
        if ei == self.elems.len() {
            failed.insert((ei, si));
            return None;
        }
        let e = self.elems[ei];
        let can_consume = atom_matches(&e.atom, seq[si]);
        let res = match e.quant {
            Quantifier::One => {
                if can_consume {
                    self.resume_rec(ei + 1, si + 1, seq, failed)
                } else {
                    None
                }
            }
            Quantifier::ZeroOrOne => {
                let taken = if can_consume {
                    self.resume_rec(ei + 1, si + 1, seq, failed)
                } else {
                    None
                };
                taken.or_else(|| self.resume_rec(ei + 1, si, seq, failed))
            }
            Quantifier::Star { greedy: true } => {
                let taken = if can_consume {
                    self.resume_rec(ei, si + 1, seq, failed)
                } else {
                    None
                };
                taken.or_else(|| self.resume_rec(ei + 1, si, seq, failed))
            }
            Quantifier::Star { greedy: false } => {
                let exited = self.resume_rec(ei + 1, si, seq, failed);
                exited.or_else(|| {
                    if can_consume {
                        self.resume_rec(ei, si + 1, seq, failed)
                    } else {
                        None
                    }
                })
            }
        };
        if res.is_none() {
            failed.insert((ei, si));
        }
        res
    }

    /// The single action token this pattern requires next, given the flat
    /// observation/action sequence so far (ending with the current
    /// observation). A demand exists only when the resume position is an
    /// unquantified action literal; quantified elements never demand.
    pub fn demanded_action(&self, seq: &[Token]) -> Option<Token> {
        let at = self.resume_point(seq)?;
        let elem = self.elems.get(at)?;
        if elem.quant != Quantifier::One {
            return None;
        }
        match elem.atom {
            PatternAtom::Literal(t) if t.is_action() => Some(t),
            _ => None,
        }
    }

    /// For patterns opening with a greedy `.*`, the preferred prefix parse
    /// always swallows the whole input into that star, so `resume_point` is
    /// the same for every sequence. Returns `Some(demand)` in that case,
    /// where `demand` is the action such a pattern always demands (almost
    /// always `None`: the resume lands on a quantified element, the pattern
    /// end, or an observation literal). Returns `None` when the resume
    /// position actually depends on the input.
    pub fn input_independent_resume(&self) -> Option<Option<Token>> {
        match self.elems.first() {
            Some(PatternElem {
                atom: PatternAtom::Any,
                quant: Quantifier::Star { greedy: true },
            }) => {
                let mut e = 0;
                while e < self.elems.len() && self.elems[e].quant != Quantifier::One {
                    e += 1;
                }
                let demand = match self.elems.get(e) {
                    Some(PatternElem {
                        atom: PatternAtom::Literal(t),
                        quant: Quantifier::One,
                    }) if t.is_action() => Some(*t),
                    _ => None,
                };
                Some(demand)
            }
            _ => None,
        }
    }

    /// Literals that every matching sequence must contain: literal atoms
    /// with no quantifier.
    pub fn mandatory_literals(&self) -> impl Iterator<Item = Token> + '_ {
        self.elems.iter().filter_map(|e| match (e.atom, e.quant) {
            (PatternAtom::Literal(t), Quantifier::One) => Some(t),
            _ => None,
        })
    }

    /// Recognizes the common obligation shape: a non-greedy leading star
    /// followed by exactly one observation literal and one action literal.
    /// For this shape `demanded_action` reduces to "demand the action when
    /// the current observation equals the literal", which lets a guard index
    /// many such patterns by observation.
    pub fn obs_action_demand_shape(&self) -> Option<(Token, Token)> {
        match self.elems.as_slice() {
            [PatternElem {
                atom: PatternAtom::Any,
                quant: Quantifier::Star { greedy: false },
            }, PatternElem {
                atom: PatternAtom::Literal(o),
                quant: Quantifier::One,
            }, PatternElem {
                atom: PatternAtom::Literal(a),
                quant: Quantifier::One,
            }] if o.is_observation() && a.is_action() => Some((*o, *a)),
            _ => None,
        }
    }
}

#[cfg(feature = "serde")]
impl serde::Serialize for HistoryPattern {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.source)
    }
}

#[cfg(feature = "serde")]
impl<'de> serde::Deserialize<'de> for HistoryPattern {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let source = String::deserialize(deserializer)?;
        HistoryPattern::parse(&source).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(values: &[u32]) -> Vec<Token> {
        values.iter().copied().map(Token).collect()
    }

    #[test]
    fn lexing_shapes() {
        let p = HistoryPattern::parse(".*14.*?89").unwrap();
        assert_eq!(
            p.elems(),
            &[
                PatternElem {
                    atom: PatternAtom::Any,
                    quant: Quantifier::Star { greedy: true }
                },
                PatternElem {
                    atom: PatternAtom::Literal(Token(14)),
                    quant: Quantifier::One
                },
                PatternElem {
                    atom: PatternAtom::Any,
                    quant: Quantifier::Star { greedy: false }
                },
                PatternElem {
                    atom: PatternAtom::Literal(Token(89)),
                    quant: Quantifier::One
                },
            ]
        );
        let q = HistoryPattern::parse("14,74 9?").unwrap();
        assert_eq!(q.elems().len(), 3);
        assert_eq!(q.elems()[2].quant, Quantifier::ZeroOrOne);
        let starred = HistoryPattern::parse("7*").unwrap();
        assert_eq!(starred.elems()[0].quant, Quantifier::Star { greedy: true });
    }

    #[test]
    fn lexing_errors() {
        assert!(matches!(
            HistoryPattern::parse("*14"),
            Err(PatternParseError::DanglingQuantifier { pos: 0 })
        ));
        assert!(matches!(
            HistoryPattern::parse("14**"),
            Err(PatternParseError::DanglingQuantifier { .. })
        ));
        assert!(matches!(
            HistoryPattern::parse("14a"),
            Err(PatternParseError::UnexpectedChar { ch: 'a', .. })
        ));
        assert!(matches!(
            HistoryPattern::parse("99999999999"),
            Err(PatternParseError::NumberOverflow { .. })
        ));
    }

    #[test]
    fn round_trip_from_elems() {
        let p = HistoryPattern::parse(".*?1014,74").unwrap();
        let rebuilt = HistoryPattern::from_elems(p.elems().to_vec());
        assert_eq!(rebuilt.source(), ".*?1014,74");
        assert_eq!(HistoryPattern::parse(rebuilt.source()).unwrap(), p);
    }

    #[test]
    fn anchored_matching() {
        let p = HistoryPattern::parse(".*14.*?89").unwrap();
        assert!(p.matches(&toks(&[14, 89])));
        assert!(p.matches(&toks(&[7, 14, 5, 89])));
        assert!(p.matches(&toks(&[14, 89, 14, 89])));
        assert!(!p.matches(&toks(&[14])));
        assert!(!p.matches(&toks(&[89, 14])));
        assert!(!p.matches(&toks(&[7, 14, 89, 5])));

        let exact = HistoryPattern::parse("3,4").unwrap();
        assert!(exact.matches(&toks(&[3, 4])));
        assert!(!exact.matches(&toks(&[3, 4, 5])));
        assert!(!exact.matches(&toks(&[3])));

        let empty = HistoryPattern::parse("").unwrap();
        assert!(empty.matches(&[]));
        assert!(!empty.matches(&toks(&[1])));

        let any_star = HistoryPattern::parse(".*").unwrap();
        assert!(any_star.matches(&[]));
        assert!(any_star.matches(&toks(&[1, 2, 3])));
    }

    #[test]
    fn greediness_does_not_change_boolean_outcome() {
        let greedy = HistoryPattern::parse(".*14.*").unwrap();
        let lazy = HistoryPattern::parse(".*?14.*?").unwrap();
        let cases: &[&[u32]] = &[&[14], &[1, 14, 2], &[14, 14], &[2, 3], &[]];
        for c in cases {
            let seq = toks(c);
            assert_eq!(greedy.matches(&seq), lazy.matches(&seq), "case {c:?}");
        }
    }

    #[test]
    fn match_positions_report_literal_sites() {
        let p = HistoryPattern::parse(".*14.*?89").unwrap();
        let pos = p.match_positions(&toks(&[7, 14, 5, 89])).unwrap();
        assert_eq!(pos, alloc::vec![1, 3]);
        assert!(p.match_positions(&toks(&[7, 5])).is_none());
        // Greedy prefix takes the latest viable 14.
        let pos2 = p.match_positions(&toks(&[14, 14, 89])).unwrap();
        assert_eq!(pos2, alloc::vec![1, 2]);
    }

    #[test]
    fn resume_and_demand_for_obligation_shape() {
        // 1014 is an observation token, 74 an action token.
        let p = HistoryPattern::parse(".*?1014,74").unwrap();
        assert_eq!(p.obs_action_demand_shape(), Some((Token(1014), Token(74))));

        // Current observation matches the literal: the action is demanded.
        assert_eq!(p.demanded_action(&toks(&[1014])), Some(Token(74)));
        assert_eq!(
            p.demanded_action(&toks(&[1000, 5, 1014])),
            Some(Token(74))
        );
        // Other current observation: no demand.
        assert_eq!(p.demanded_action(&toks(&[1000])), None);
        // Past compliance does not demand again unless the trigger recurs.
        assert_eq!(p.demanded_action(&toks(&[1014, 74, 1000])), None);
        assert_eq!(p.demanded_action(&toks(&[1014, 74, 1014])), Some(Token(74)));
    }

    #[test]
    fn greedy_star_obligations_never_demand() {
        let p = HistoryPattern::parse(".*1014,74").unwrap();
        assert_eq!(p.obs_action_demand_shape(), None);
        assert_eq!(p.demanded_action(&toks(&[1014])), None);
        assert_eq!(p.demanded_action(&toks(&[1000, 5, 1014])), None);
    }

    #[test]
    fn resume_point_prefix_semantics() {
        let p = HistoryPattern::parse("3,4,5").unwrap();
        assert_eq!(p.resume_point(&toks(&[3])), Some(1));
        assert_eq!(p.resume_point(&toks(&[3, 4])), Some(2));
        assert_eq!(p.resume_point(&toks(&[3, 4, 5])), Some(3));
        assert_eq!(p.resume_point(&toks(&[4])), None);
        assert_eq!(p.resume_point(&toks(&[3, 4, 5, 6])), None);
        assert_eq!(p.resume_point(&[]), Some(0));

        // A trailing unquantified action literal after a lazy star is
        // demanded immediately.
        let eventually = HistoryPattern::parse(".*?42").unwrap();
        assert_eq!(eventually.demanded_action(&toks(&[1000, 7, 1001])), Some(Token(42)));
    }

    #[test]
    fn optional_elements_are_passed_over_when_starved() {
        let p = HistoryPattern::parse("3?4").unwrap();
        assert_eq!(p.resume_point(&[]), Some(1));
        assert_eq!(p.resume_point(&toks(&[3])), Some(1));
        assert_eq!(p.resume_point(&toks(&[4])), Some(2));
    }
}
