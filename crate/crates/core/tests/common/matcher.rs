//! The backtracking matcher against a set-based interpreter that expands
//! every alternative and every repetition count level by level.

use std::collections::BTreeSet;

use proptest::prelude::*;
use sheetgram_core::factbase::FactBase;
use sheetgram_core::grammar::{match_at, structural_diagnostics, Count, Direction, Grammar, Match, Pattern};
use sheetgram_core::{Address, CellContent, Number, Workbook};

use super::{at, pattern};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sym {
    Blank,
    Num,
    Text,
}

#[derive(Debug, Clone)]
pub struct Grid {
    pub cols: u32,
    pub rows: u32,
    pub cells: Vec<Sym>,
}

impl Grid {
    fn sym(&self, a: &Address) -> Sym {
        if a.col > self.cols || a.row > self.rows {
            return Sym::Blank;
        }
        self.cells[((a.row - 1) * self.cols + a.col - 1) as usize]
    }

    pub fn workbook(&self) -> Workbook {
        let mut wb = Workbook::new();
        for row in 1..=self.rows {
            for col in 1..=self.cols {
                let a = at(col, row);
                match self.sym(&a) {
                    Sym::Blank => {}
                    Sym::Num => wb.set(a, CellContent::Number(Number::from(col * 10 + row))),
                    Sym::Text => wb.set(a, CellContent::Text(format!("t{col}{row}"))),
                }
            }
        }
        wb
    }

    /// Largest occupied column and row.
    pub fn bounds(&self) -> (u32, u32) {
        let mut b = (0, 0);
        for row in 1..=self.rows {
            for col in 1..=self.cols {
                if self.sym(&at(col, row)) != Sym::Blank {
                    b = (b.0.max(col), b.1.max(row));
                }
            }
        }
        b
    }

    /// Without formulas every text cell is a label and only numbers are `cell`.
    pub fn holds(&self, predicate: &str, a: &Address) -> bool {
        match (predicate, self.sym(a)) {
            ("empty", s) => s == Sym::Blank,
            ("label" | "text", s) => s == Sym::Text,
            ("cell" | "number", s) => s == Sym::Num,
            _ => false,
        }
    }
}

pub type State = (Address, Vec<(Address, String)>);

pub struct Oracle<'g> {
    pub grid: &'g Grid,
    pub bounds: (u32, u32),
}

impl Oracle<'_> {
    pub fn run(&self, p: &Pattern, states: BTreeSet<State>) -> BTreeSet<State> {
        match p {
            Pattern::Terminal(name) => states
                .into_iter()
                .filter(|(a, _)| self.grid.holds(name, a))
                .map(|(a, mut cells)| {
                    cells.push((a.clone(), name.clone()));
                    (a, cells)
                })
                .collect(),
            Pattern::Move(dir, n) => states
                .into_iter()
                .filter_map(|(a, cells)| {
                    let n = i64::from(*n);
                    let next = match dir {
                        Direction::Down => a.offset(0, n),
                        Direction::Along => a.offset(n, 0),
                    }?;
                    Some((next, cells))
                })
                .collect(),
            Pattern::Seq(items) => items.iter().fold(states, |s, item| self.run(item, s)),
            Pattern::Alt(options) => options.iter().flat_map(|o| self.run(o, states.clone())).collect(),
            Pattern::Opt(inner) => {
                let mut out = self.run(inner, states.clone());
                out.extend(states);
                out
            }
            Pattern::Repeat(inner, Count::Exact(n)) => (0..*n).fold(states, |s, _| self.run(inner, s)),
            Pattern::Repeat(inner, Count::Star) => {
                let mut out = BTreeSet::new();
                let mut level = states;
                // Each kept iteration moves the cursor down or right and starts
                // inside the bounds, so there are at most cols + rows of them.
                for _ in 0..=(self.bounds.0 + self.bounds.1 + 1) {
                    let mut next = BTreeSet::new();
                    for s in &level {
                        if s.0.col > self.bounds.0 || s.0.row > self.bounds.1 {
                            continue;
                        }
                        for t in self.run(inner, BTreeSet::from([s.clone()])) {
                            if t.0 != s.0 {
                                next.insert(t);
                            }
                        }
                    }
                    out.extend(level);
                    level = next;
                }
                assert!(level.is_empty(), "repetition did not stop");
                out
            }
            Pattern::And(l, r) => {
                let mut out = BTreeSet::new();
                for s in states {
                    for (_, left) in self.run(l, BTreeSet::from([s.clone()])) {
                        for (_, both) in self.run(r, BTreeSet::from([(s.0.clone(), left)])) {
                            out.insert((s.0.clone(), both));
                        }
                    }
                }
                out
            }
            Pattern::RuleRef(_) => unreachable!("generated grammars have one rule"),
        }
    }
}

pub fn grid(max: u32) -> impl Strategy<Value = Grid> {
    (1..=max, 1..=max).prop_flat_map(|(cols, rows)| {
        prop::collection::vec(
            prop::sample::select(vec![Sym::Blank, Sym::Num, Sym::Text]),
            (cols * rows) as usize,
        )
        .prop_map(move |cells| Grid { cols, rows, cells })
    })
}

pub fn grammar() -> impl Strategy<Value = Grammar> {
    pattern()
        .prop_map(|p| Grammar::from_rules(vec![("r".into(), p)]))
        .prop_filter("structurally valid", |g| structural_diagnostics(g).is_empty())
}

pub fn as_states(ms: &[Match]) -> BTreeSet<State> {
    ms.iter()
        .map(|m| {
            assert_eq!(m.bindings.len(), 1);
            let cells = m.bindings[0]
                .cells
                .iter()
                .map(|c| (c.at.clone(), c.terminal.clone()))
                .collect();
            (m.end.clone(), cells)
        })
        .collect()
}

/// Compare `match_at` with the oracle at every anchor of a 5 by 5 window.
/// Returns how many matches were compared.
pub fn check_agreement(g: &Grammar, grids: &[Grid]) -> Result<usize, TestCaseError> {
    let body = g.rule("r").unwrap();
    let mut compared = 0;
    for grid in grids {
        let fb = FactBase::build(grid.workbook());
        let oracle = Oracle {
            grid,
            bounds: grid.bounds(),
        };
        for row in 1..=5 {
            for col in 1..=5 {
                let anchor = at(col, row);
                let got = match_at(g, "r", &fb, &anchor);
                let set = as_states(&got);
                prop_assert_eq!(set.len(), got.len(), "duplicate matches");
                let want = oracle.run(body, BTreeSet::from([(anchor.clone(), Vec::new())]));
                prop_assert_eq!(&set, &want, "grammar {} grid {:?} anchor {}", g, grid, anchor);
                for m in &got {
                    for c in m.cells() {
                        prop_assert!(grid.holds(&c.terminal, &c.at));
                    }
                    if matches!(body, Pattern::And(..)) {
                        prop_assert_eq!(&m.end, &anchor);
                    }
                }
                compared += got.len();
            }
        }
    }
    Ok(compared)
}
