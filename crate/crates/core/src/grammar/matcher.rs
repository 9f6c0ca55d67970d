use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::{Count, Direction, Grammar, Pattern};
use crate::address::Address;
use crate::factbase::{FactBase, PredicateRegistry};

/// A cell bound by a terminal, with the predicate it satisfied.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BoundCell {
    pub at: Address,
    pub terminal: String,
}

/// Cells bound directly by one rule instance's own terminals.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RuleBinding {
    pub rule: String,
    pub cells: Vec<BoundCell>,
}

/// One way a rule fits the sheet from an anchor.
///
/// `bindings` holds one entry per rule instance, the matched rule first,
/// then nested instances in the order they were entered.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Match {
    pub rule: String,
    pub anchor: Address,
    pub bindings: Vec<RuleBinding>,
    /// Cursor after the rule's last item.
    pub end: Address,
}

impl Match {
    /// Every bound cell in visiting order.
    pub fn cells(&self) -> impl Iterator<Item = &BoundCell> {
        self.bindings.iter().flat_map(|b| b.cells.iter())
    }

    pub fn addresses(&self) -> BTreeSet<&Address> {
        self.cells().map(|c| &c.at).collect()
    }
}

#[derive(Debug, Clone)]
struct State {
    at: Address,
    bindings: Vec<RuleBinding>,
    /// Entry receiving terminal bindings.
    current: usize,
}

/// Matches rules of one grammar against one fact base.
///
/// The grammar should pass [`super::validate_grammar`] first. Unknown
/// predicates then never match, and a rule re-entered at the cursor of an
/// enclosing instance of itself fails, so matching always terminates.
pub struct Matcher<'a> {
    grammar: &'a Grammar,
    registry: &'a PredicateRegistry,
    facts: &'a FactBase,
}

impl<'a> Matcher<'a> {
    pub fn new(grammar: &'a Grammar, registry: &'a PredicateRegistry, facts: &'a FactBase) -> Self {
        Matcher {
            grammar,
            registry,
            facts,
        }
    }

    /// Distinct matches of `rule` from `anchor`, in backtracking order.
    pub fn match_at(&self, rule: &str, anchor: &Address) -> Vec<Match> {
        let Some(body) = self.grammar.rule(rule) else {
            return Vec::new();
        };
        let bounds = self.facts.workbook().bounds(&anchor.sheet);
        let start = State {
            at: anchor.clone(),
            bindings: vec![RuleBinding {
                rule: rule.into(),
                cells: Vec::new(),
            }],
            current: 0,
        };
        let mut run = Run {
            m: self,
            bounds,
            active: vec![(rule, anchor.clone())],
        };
        let mut out: Vec<Match> = Vec::new();
        for s in run.pattern(body, start) {
            let candidate = Match {
                rule: rule.into(),
                anchor: anchor.clone(),
                bindings: s.bindings,
                end: s.at,
            };
            if !out.contains(&candidate) {
                out.push(candidate);
            }
        }
        out
    }

    /// [`Self::match_at`] from every non-empty cell in `(sheet, row, col)` order.
    pub fn match_all(&self, rule: &str) -> Vec<Match> {
        if self.grammar.rule(rule).is_none() {
            return Vec::new();
        }
        self.facts
            .workbook()
            .iter()
            .flat_map(|(at, _)| self.match_at(rule, at))
            .collect()
    }
}

struct Run<'m, 'a> {
    m: &'m Matcher<'a>,
    bounds: (u32, u32),
    /// Rule instances currently being matched and the cursor each began at.
    active: Vec<(&'a str, Address)>,
}

impl<'a> Run<'_, 'a> {
    fn in_bounds(&self, at: &Address) -> bool {
        at.col <= self.bounds.0 && at.row <= self.bounds.1
    }

    fn pattern(&mut self, p: &'a Pattern, s: State) -> Vec<State> {
        match p {
            Pattern::Terminal(name) => {
                let mut s = s;
                if self.m.registry.eval(name, self.m.facts, &s.at) != Ok(true) {
                    return Vec::new();
                }
                let cell = BoundCell {
                    at: s.at.clone(),
                    terminal: name.clone(),
                };
                let current = s.current;
                s.bindings[current].cells.push(cell);
                vec![s]
            }
            Pattern::Move(dir, n) => {
                let n = i64::from(*n);
                let next = match dir {
                    Direction::Down => s.at.offset(0, n),
                    Direction::Along => s.at.offset(n, 0),
                };
                match next {
                    Some(at) => vec![State { at, ..s }],
                    None => Vec::new(),
                }
            }
            Pattern::Seq(items) => self.sequence(items.iter(), 1, s),
            Pattern::Alt(options) => {
                let mut out = Vec::new();
                for o in options {
                    out.extend(self.pattern(o, s.clone()));
                }
                out
            }
            Pattern::Opt(inner) => {
                let mut out = self.pattern(inner, s.clone());
                out.push(s);
                out
            }
            Pattern::Repeat(inner, Count::Exact(n)) => self.sequence(core::iter::once(&**inner), *n, s),
            Pattern::Repeat(inner, Count::Star) => self.star(inner, s),
            Pattern::And(l, r) => {
                let origin = s.at.clone();
                let mut out = Vec::new();
                for left in self.pattern(l, s) {
                    let restart = State {
                        at: origin.clone(),
                        ..left
                    };
                    for right in self.pattern(r, restart) {
                        out.push(State {
                            at: origin.clone(),
                            ..right
                        });
                    }
                }
                out
            }
            Pattern::RuleRef(name) => {
                let Some(body) = self.m.grammar.rule(name) else {
                    return Vec::new();
                };
                let reentry = self.active.iter().any(|(r, _)| r == name);
                if reentry && (!self.in_bounds(&s.at) || self.active.iter().any(|(r, at)| r == name && *at == s.at)) {
                    return Vec::new();
                }
                let saved = s.current;
                let mut s = s;
                s.bindings.push(RuleBinding {
                    rule: name.clone(),
                    cells: Vec::new(),
                });
                s.current = s.bindings.len() - 1;
                self.active.push((name, s.at.clone()));
                let out = self.pattern(body, s);
                self.active.pop();
                out.into_iter().map(|st| State { current: saved, ..st }).collect()
            }
        }
    }

    /// Run `items` in order, `times` times over.
    fn sequence<I>(&mut self, items: I, times: u32, s: State) -> Vec<State>
    where
        I: Iterator<Item = &'a Pattern> + Clone,
    {
        let mut states = vec![s];
        for _ in 0..times {
            for item in items.clone() {
                let mut next = Vec::new();
                for st in states {
                    next.extend(self.pattern(item, st));
                }
                if next.is_empty() {
                    return next;
                }
                states = next;
            }
        }
        states
    }

    /// Longest first: every extension of an iteration precedes stopping
    /// there. An iteration starts only inside the sheet's bounds and must
    /// move the cursor.
    fn star(&mut self, inner: &'a Pattern, s: State) -> Vec<State> {
        let mut out = Vec::new();
        if self.in_bounds(&s.at) {
            for next in self.pattern(inner, s.clone()) {
                if next.at != s.at {
                    out.extend(self.star(inner, next));
                }
            }
        }
        out.push(s);
        out
    }
}

/// [`Matcher::match_at`] with the built-in predicates only.
pub fn match_at(g: &Grammar, rule: &str, fb: &FactBase, anchor: &Address) -> Vec<Match> {
    let reg = PredicateRegistry::new();
    Matcher::new(g, &reg, fb).match_at(rule, anchor)
}

/// [`Matcher::match_all`] with the built-in predicates only.
pub fn match_all(g: &Grammar, rule: &str, fb: &FactBase) -> Vec<Match> {
    let reg = PredicateRegistry::new();
    Matcher::new(g, &reg, fb).match_all(rule)
}

/// Greedy choice of pairwise disjoint matches: most distinct cells first,
/// then earliest anchor, then input order. Returned in the order chosen.
pub fn select_cover(matches: &[Match]) -> Vec<Match> {
    let cells: Vec<BTreeSet<&Address>> = matches.iter().map(Match::addresses).collect();
    let mut order: Vec<usize> = (0..matches.len()).collect();
    order.sort_by(|&a, &b| {
        cells[b]
            .len()
            .cmp(&cells[a].len())
            .then_with(|| matches[a].anchor.cmp(&matches[b].anchor))
            .then(a.cmp(&b))
    });
    let mut used: BTreeSet<&Address> = BTreeSet::new();
    let mut out = Vec::new();
    for i in order {
        if cells[i].is_disjoint(&used) {
            used.extend(cells[i].iter().copied());
            out.push(matches[i].clone());
        }
    }
    out
}
