//! Two-dimensional layout grammars: rules built from cell predicates and
//! cursor moves, matched against a fact base by backtracking.

mod matcher;
mod parse;
mod validate;

pub use matcher::{match_all, match_at, select_cover, BoundCell, Match, Matcher, RuleBinding};
pub use parse::{parse_grammar, GrammarError, GrammarErrorKind};
pub use validate::{structural_diagnostics, validate_grammar, Diagnostic};

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    Down,
    Along,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Count {
    Exact(u32),
    Star,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Pattern {
    /// The cell under the cursor satisfies a named predicate.
    Terminal(String),
    Move(Direction, u32),
    Seq(Vec<Pattern>),
    Alt(Vec<Pattern>),
    Opt(Box<Pattern>),
    Repeat(Box<Pattern>, Count),
    /// Both sides from the same cursor, which is then restored.
    And(Box<Pattern>, Box<Pattern>),
    RuleRef(String),
}

impl Pattern {
    pub fn terminal(name: &str) -> Pattern {
        Pattern::Terminal(name.into())
    }

    pub fn down(n: u32) -> Pattern {
        Pattern::Move(Direction::Down, n)
    }

    pub fn along(n: u32) -> Pattern {
        Pattern::Move(Direction::Along, n)
    }

    pub fn repeat(inner: Pattern, count: Count) -> Pattern {
        Pattern::Repeat(Box::new(inner), count)
    }

    pub fn and(l: Pattern, r: Pattern) -> Pattern {
        Pattern::And(Box::new(l), Box::new(r))
    }

    pub fn opt(inner: Pattern) -> Pattern {
        Pattern::Opt(Box::new(inner))
    }

    /// Syntactically finishes with a move, so no implicit step is needed after it.
    pub(crate) fn ends_with_move(&self) -> bool {
        match self {
            Pattern::Move(..) => true,
            Pattern::Seq(items) => items.last().is_some_and(Pattern::ends_with_move),
            Pattern::Repeat(inner, _) | Pattern::Opt(inner) => inner.ends_with_move(),
            Pattern::Alt(options) => options.iter().all(Pattern::ends_with_move),
            _ => false,
        }
    }

    pub(crate) fn starts_with_move(&self) -> bool {
        match self {
            Pattern::Move(..) => true,
            Pattern::Seq(items) => items.first().is_some_and(Pattern::starts_with_move),
            Pattern::Repeat(inner, _) | Pattern::Opt(inner) => inner.starts_with_move(),
            Pattern::Alt(options) => options.iter().all(Pattern::starts_with_move),
            _ => false,
        }
    }

    /// Pre-order walk.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Pattern)) {
        f(self);
        match self {
            Pattern::Seq(items) | Pattern::Alt(items) => items.iter().for_each(|p| p.visit(f)),
            Pattern::Opt(inner) | Pattern::Repeat(inner, _) => inner.visit(f),
            Pattern::And(l, r) => {
                l.visit(f);
                r.visit(f);
            }
            Pattern::Terminal(_) | Pattern::Move(..) | Pattern::RuleRef(_) => {}
        }
    }

    fn prec(&self) -> u8 {
        match self {
            Pattern::Alt(_) => 0,
            Pattern::And(..) => 1,
            Pattern::Seq(_) => 2,
            Pattern::Opt(_) | Pattern::Repeat(..) => 3,
            _ => 4,
        }
    }

    fn fmt_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.prec() < min {
            f.write_str("(")?;
            self.fmt_at(f, 0)?;
            return f.write_str(")");
        }
        match self {
            Pattern::Terminal(n) | Pattern::RuleRef(n) => f.write_str(n),
            Pattern::Move(d, n) => {
                f.write_str(match d {
                    Direction::Down => "DOWN",
                    Direction::Along => "ALONG",
                })?;
                if *n != 1 {
                    write!(f, "({n})")?;
                }
                Ok(())
            }
            Pattern::Seq(items) => {
                for (i, p) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    p.fmt_at(f, 3)?;
                }
                Ok(())
            }
            Pattern::Alt(options) => {
                for (i, p) in options.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" | ")?;
                    }
                    p.fmt_at(f, 1)?;
                }
                Ok(())
            }
            Pattern::And(l, r) => {
                l.fmt_at(f, 1)?;
                f.write_str(" AND ")?;
                r.fmt_at(f, 2)
            }
            Pattern::Opt(inner) => {
                inner.fmt_at(f, 4)?;
                f.write_str("?")
            }
            Pattern::Repeat(inner, count) => {
                inner.fmt_at(f, 4)?;
                match count {
                    Count::Star => f.write_str("*"),
                    Count::Exact(n) => write!(f, "*{n}"),
                }
            }
        }
    }
}

/// Concrete syntax. Every move is written out, so implicit steps appear as `ALONG`.
impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_at(f, 0)
    }
}

/// Named rules in source order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Grammar {
    rules: Vec<(String, Pattern)>,
}

impl Grammar {
    /// Build without any checks; see [`validate_grammar`].
    pub fn from_rules(rules: Vec<(String, Pattern)>) -> Grammar {
        Grammar { rules }
    }

    pub fn rule(&self, name: &str) -> Option<&Pattern> {
        self.rules.iter().find(|(n, _)| n == name).map(|(_, p)| p)
    }

    pub fn rules(&self) -> impl Iterator<Item = (&str, &Pattern)> {
        self.rules.iter().map(|(n, p)| (n.as_str(), p))
    }

    pub fn rule_names(&self) -> impl Iterator<Item = &str> {
        self.rules.iter().map(|(n, _)| n.as_str())
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }
}

impl fmt::Display for Grammar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, body) in &self.rules {
            writeln!(f, "{name} --> {body}")?;
        }
        Ok(())
    }
}
