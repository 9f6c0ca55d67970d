use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use super::{Count, Grammar, Pattern};
use crate::factbase::PredicateRegistry;

/// A problem that makes a grammar unsafe or meaningless to match.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Diagnostic {
    UnknownPredicate {
        rule: String,
        name: String,
    },
    UnresolvedRule {
        rule: String,
        name: String,
    },
    /// A `*` whose body can neither test a cell nor move.
    NonProgressStar {
        rule: String,
    },
    /// The rule can reach itself without moving the cursor.
    ZeroMoveRecursion {
        rule: String,
    },
    ShadowsPredicate {
        rule: String,
    },
    DuplicateRule {
        rule: String,
    },
    /// Zero move or repeat count, empty sequence, or a one-option choice.
    Malformed {
        rule: String,
        what: &'static str,
    },
}

impl Diagnostic {
    pub fn rule(&self) -> &str {
        match self {
            Diagnostic::UnknownPredicate { rule, .. }
            | Diagnostic::UnresolvedRule { rule, .. }
            | Diagnostic::NonProgressStar { rule }
            | Diagnostic::ZeroMoveRecursion { rule }
            | Diagnostic::ShadowsPredicate { rule }
            | Diagnostic::DuplicateRule { rule }
            | Diagnostic::Malformed { rule, .. } => rule,
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::UnknownPredicate { rule, name } => write!(f, "rule `{rule}`: unknown predicate `{name}`"),
            Diagnostic::UnresolvedRule { rule, name } => write!(f, "rule `{rule}`: no rule named `{name}`"),
            Diagnostic::NonProgressStar { rule } => {
                write!(
                    f,
                    "rule `{rule}`: `*` applied to a pattern that tests no cell and makes no move"
                )
            }
            Diagnostic::ZeroMoveRecursion { rule } => {
                write!(f, "rule `{rule}`: recursive without moving the cursor")
            }
            Diagnostic::ShadowsPredicate { rule } => write!(f, "rule `{rule}` has the name of a predicate"),
            Diagnostic::DuplicateRule { rule } => write!(f, "rule `{rule}` is defined more than once"),
            Diagnostic::Malformed { rule, what } => write!(f, "rule `{rule}`: {what}"),
        }
    }
}

/// All problems with `g`, including terminals `reg` does not define and
/// rules named like its predicates. Empty means `g` may be matched.
pub fn validate_grammar(g: &Grammar, reg: &PredicateRegistry) -> Vec<Diagnostic> {
    let mut out = structural_diagnostics(g);
    for (rule, body) in g.rules() {
        if reg.contains(rule) {
            out.push(Diagnostic::ShadowsPredicate { rule: rule.into() });
        }
        let mut seen = BTreeSet::new();
        body.visit(&mut |p| {
            if let Pattern::Terminal(name) = p {
                if !reg.contains(name) && seen.insert(name.clone()) {
                    out.push(Diagnostic::UnknownPredicate {
                        rule: rule.into(),
                        name: name.clone(),
                    });
                }
            }
        });
    }
    out
}

/// Checks that need no predicate registry: shape, references, progress of
/// `*` and recursion without movement.
pub fn structural_diagnostics(g: &Grammar) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut names = BTreeSet::new();
    for (rule, body) in g.rules() {
        if !names.insert(rule) {
            out.push(Diagnostic::DuplicateRule { rule: rule.into() });
        }
        let mut unresolved = BTreeSet::new();
        let mut malformed = BTreeSet::new();
        let mut stars = 0usize;
        body.visit(&mut |p| match p {
            Pattern::RuleRef(name) if g.rule(name).is_none() => {
                unresolved.insert(name.clone());
            }
            Pattern::Move(_, 0) | Pattern::Repeat(_, Count::Exact(0)) => {
                malformed.insert("count must be at least 1");
            }
            Pattern::Seq(items) if items.is_empty() => {
                malformed.insert("empty sequence");
            }
            Pattern::Alt(options) if options.len() < 2 => {
                malformed.insert("choice with fewer than two options");
            }
            Pattern::Repeat(inner, Count::Star) if !progresses(inner, g, &mut BTreeSet::new()) => {
                stars += 1;
            }
            _ => {}
        });
        for name in unresolved {
            out.push(Diagnostic::UnresolvedRule {
                rule: rule.into(),
                name,
            });
        }
        for what in malformed {
            out.push(Diagnostic::Malformed {
                rule: rule.into(),
                what,
            });
        }
        if stars > 0 {
            out.push(Diagnostic::NonProgressStar { rule: rule.into() });
        }
    }
    for rule in zero_move_recursive(g) {
        out.push(Diagnostic::ZeroMoveRecursion { rule });
    }
    out
}

/// Contains a terminal or a move, looking through rule references.
fn progresses<'a>(p: &'a Pattern, g: &'a Grammar, visiting: &mut BTreeSet<&'a str>) -> bool {
    match p {
        Pattern::Terminal(_) | Pattern::Move(..) => true,
        Pattern::RuleRef(name) => match g.rule(name) {
            Some(body) if visiting.insert(name) => progresses(body, g, visiting),
            _ => false,
        },
        Pattern::Seq(items) | Pattern::Alt(items) => items.iter().any(|q| progresses(q, g, visiting)),
        Pattern::Opt(inner) | Pattern::Repeat(inner, _) => progresses(inner, g, visiting),
        Pattern::And(l, r) => progresses(l, g, visiting) || progresses(r, g, visiting),
    }
}

/// Whether `p` can finish where it started, given the same for each rule.
fn can_stay(p: &Pattern, stays: &BTreeMap<&str, bool>) -> bool {
    match p {
        Pattern::Terminal(_) => true,
        Pattern::Move(_, n) => *n == 0,
        Pattern::Seq(items) => items.iter().all(|q| can_stay(q, stays)),
        Pattern::Alt(items) => items.iter().any(|q| can_stay(q, stays)),
        Pattern::Opt(_) | Pattern::And(..) | Pattern::Repeat(_, Count::Star) => true,
        Pattern::Repeat(inner, Count::Exact(_)) => can_stay(inner, stays),
        Pattern::RuleRef(name) => stays.get(name.as_str()).copied().unwrap_or(false),
    }
}

/// Rules `p` may enter at its own starting cursor.
fn calls_in_place<'a>(p: &'a Pattern, stays: &BTreeMap<&str, bool>, out: &mut BTreeSet<&'a str>) {
    match p {
        Pattern::Terminal(_) | Pattern::Move(..) => {}
        Pattern::RuleRef(name) => {
            out.insert(name);
        }
        Pattern::Seq(items) => {
            for q in items {
                calls_in_place(q, stays, out);
                if !can_stay(q, stays) {
                    break;
                }
            }
        }
        Pattern::Alt(items) => items.iter().for_each(|q| calls_in_place(q, stays, out)),
        Pattern::Opt(inner) | Pattern::Repeat(inner, _) => calls_in_place(inner, stays, out),
        Pattern::And(l, r) => {
            calls_in_place(l, stays, out);
            calls_in_place(r, stays, out);
        }
    }
}

fn zero_move_recursive(g: &Grammar) -> Vec<String> {
    let mut stays: BTreeMap<&str, bool> = g.rule_names().map(|n| (n, false)).collect();
    loop {
        let mut changed = false;
        for (name, body) in g.rules() {
            if !stays[name] && can_stay(body, &stays) {
                stays.insert(name, true);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let edges: BTreeMap<&str, BTreeSet<&str>> = g
        .rules()
        .map(|(name, body)| {
            let mut out = BTreeSet::new();
            calls_in_place(body, &stays, &mut out);
            (name, out)
        })
        .collect();
    let mut out = Vec::new();
    for (name, _) in g.rules() {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<&str> = edges[name].iter().copied().collect();
        while let Some(next) = stack.pop() {
            if next == name {
                out.push(name.to_string());
                break;
            }
            if seen.insert(next) {
                if let Some(more) = edges.get(next) {
                    stack.extend(more.iter().copied());
                }
            }
        }
    }
    out
}
