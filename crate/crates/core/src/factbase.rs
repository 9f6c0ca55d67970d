//! Derived facts over a workbook: dependencies, labels, copies, and the
//! named cell predicates grammars are written against.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::address::Address;
use crate::formula::{refs_of, to_offset_form};
use crate::workbook::{CellContent, Workbook};

/// A workbook with its dependency graph and label set precomputed.
#[derive(Debug, Clone, Default)]
pub struct FactBase {
    wb: Workbook,
    precedents: BTreeMap<Address, BTreeSet<Address>>,
    dependents: BTreeMap<Address, BTreeSet<Address>>,
    labels: BTreeSet<Address>,
}

static NONE: BTreeSet<Address> = BTreeSet::new();

impl FactBase {
    /// Index a workbook. References to empty cells are kept; cycles are allowed.
    pub fn build(wb: Workbook) -> FactBase {
        let mut precedents = BTreeMap::new();
        let mut dependents: BTreeMap<Address, BTreeSet<Address>> = BTreeMap::new();
        for (at, content) in wb.iter() {
            let CellContent::Formula(f) = content else { continue };
            let refs: BTreeSet<Address> = refs_of(f.ast()).into_iter().collect();
            for d in &refs {
                dependents.entry(d.clone()).or_default().insert(at.clone());
            }
            precedents.insert(at.clone(), refs);
        }
        let labels = wb
            .iter()
            .filter(|(at, c)| matches!(c, CellContent::Text(_)) && !dependents.contains_key(*at))
            .map(|(at, _)| at.clone())
            .collect();
        FactBase {
            wb,
            precedents,
            dependents,
            labels,
        }
    }

    pub fn workbook(&self) -> &Workbook {
        &self.wb
    }

    pub fn into_workbook(self) -> Workbook {
        self.wb
    }

    /// Text that no formula refers to.
    pub fn is_label(&self, c: &Address) -> bool {
        self.labels.contains(c)
    }

    pub fn labels(&self) -> &BTreeSet<Address> {
        &self.labels
    }

    /// Cells `c`'s formula refers to directly.
    pub fn depends_on(&self, c: &Address) -> &BTreeSet<Address> {
        self.precedents.get(c).unwrap_or(&NONE)
    }

    /// Formula cells that refer to `c` directly.
    pub fn dependents(&self, c: &Address) -> &BTreeSet<Address> {
        self.dependents.get(c).unwrap_or(&NONE)
    }

    /// Everything `c` depends on through any chain of references. `c` itself
    /// is included only when it lies on a cycle.
    pub fn depends_on_transitive(&self, c: &Address) -> BTreeSet<Address> {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<&Address> = self.depends_on(c).iter().collect();
        while let Some(d) = stack.pop() {
            if seen.insert(d.clone()) {
                stack.extend(self.depends_on(d).iter());
            }
        }
        seen
    }

    /// Strongly connected components of size two or more, plus self-loops.
    /// Members are sorted; cycles are ordered by their first member.
    pub fn detect_cycles(&self) -> Vec<Vec<Address>> {
        let mut tarjan = Tarjan {
            fb: self,
            index: BTreeMap::new(),
            low: BTreeMap::new(),
            on_stack: BTreeSet::new(),
            stack: Vec::new(),
            next: 0,
            out: Vec::new(),
        };
        for c in self.precedents.keys() {
            if !tarjan.index.contains_key(c) {
                tarjan.connect(c);
            }
        }
        let mut out = tarjan.out;
        for scc in &mut out {
            scc.sort();
        }
        out.sort();
        out
    }

    /// Both cells hold formulas with the same relative shape.
    pub fn copy_of(&self, c: &Address, d: &Address) -> bool {
        match (self.wb.cell_at(c), self.wb.cell_at(d)) {
            (Some(CellContent::Formula(f)), Some(CellContent::Formula(g))) => {
                to_offset_form(f.ast(), c) == to_offset_form(g.ast(), d)
            }
            _ => false,
        }
    }

    /// Every cell in `col`, rows `row_from..=row_to`, is a copy of the first.
    pub fn column_all_copies(&self, sheet: &str, col: u32, row_from: u32, row_to: u32) -> bool {
        let first = Address::new(sheet, col, row_from);
        (row_from..=row_to).all(|row| self.copy_of(&first, &Address::new(sheet, col, row)))
    }
}

struct Tarjan<'a> {
    fb: &'a FactBase,
    index: BTreeMap<Address, usize>,
    low: BTreeMap<Address, usize>,
    on_stack: BTreeSet<Address>,
    stack: Vec<Address>,
    next: usize,
    out: Vec<Vec<Address>>,
}

impl Tarjan<'_> {
    // Recursion depth is bounded by the longest reference chain.
    fn connect(&mut self, v: &Address) {
        self.index.insert(v.clone(), self.next);
        self.low.insert(v.clone(), self.next);
        self.next += 1;
        self.stack.push(v.clone());
        self.on_stack.insert(v.clone());
        let fb = self.fb;
        for w in fb.depends_on(v) {
            if !self.index.contains_key(w) {
                self.connect(w);
                let lw = self.low[w];
                let lv = self.low.get_mut(v).unwrap();
                *lv = (*lv).min(lw);
            } else if self.on_stack.contains(w) {
                let iw = self.index[w];
                let lv = self.low.get_mut(v).unwrap();
                *lv = (*lv).min(iw);
            }
        }
        if self.low[v] == self.index[v] {
            let mut scc = Vec::new();
            loop {
                let w = self.stack.pop().unwrap();
                self.on_stack.remove(&w);
                let done = &w == v;
                scc.push(w);
                if done {
                    break;
                }
            }
            if scc.len() > 1 || fb.depends_on(v).contains(v) {
                self.out.push(scc);
            }
        }
    }
}

/// The always-available predicates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Builtin {
    /// Text no formula refers to.
    Label,
    /// A number, a formula, or text that some formula refers to.
    Cell,
    Empty,
    Number,
    Text,
    Formula,
}

impl Builtin {
    pub const ALL: [Builtin; 6] = [
        Builtin::Label,
        Builtin::Cell,
        Builtin::Empty,
        Builtin::Number,
        Builtin::Text,
        Builtin::Formula,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Label => "label",
            Builtin::Cell => "cell",
            Builtin::Empty => "empty",
            Builtin::Number => "number",
            Builtin::Text => "text",
            Builtin::Formula => "formula",
        }
    }

    pub fn from_name(name: &str) -> Option<Builtin> {
        Builtin::ALL.into_iter().find(|b| b.name() == name)
    }

    pub fn eval(self, fb: &FactBase, c: &Address) -> bool {
        let content = fb.wb.cell_at(c);
        match self {
            Builtin::Label => fb.is_label(c),
            Builtin::Cell => match content {
                Some(CellContent::Number(_) | CellContent::Formula(_)) => true,
                Some(CellContent::Text(_)) => !fb.is_label(c),
                None => false,
            },
            Builtin::Empty => content.is_none(),
            Builtin::Number => matches!(content, Some(CellContent::Number(_))),
            Builtin::Text => matches!(content, Some(CellContent::Text(_))),
            Builtin::Formula => matches!(content, Some(CellContent::Formula(_))),
        }
    }
}

/// A composition of built-ins and previously registered predicates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PredicateExpr {
    Named(String),
    And(Box<PredicateExpr>, Box<PredicateExpr>),
    Or(Box<PredicateExpr>, Box<PredicateExpr>),
    Not(Box<PredicateExpr>),
}

impl PredicateExpr {
    pub fn named(name: &str) -> Self {
        PredicateExpr::Named(name.to_string())
    }

    pub fn and(self, other: PredicateExpr) -> Self {
        PredicateExpr::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: PredicateExpr) -> Self {
        PredicateExpr::Or(Box::new(self), Box::new(other))
    }

    pub fn negate(self) -> Self {
        PredicateExpr::Not(Box::new(self))
    }

    fn names<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            PredicateExpr::Named(n) => out.push(n),
            PredicateExpr::And(a, b) | PredicateExpr::Or(a, b) => {
                a.names(out);
                b.names(out);
            }
            PredicateExpr::Not(a) => a.names(out),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PredicateError {
    Unknown(String),
    Shadowed(String),
    Duplicate(String),
}

impl fmt::Display for PredicateError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PredicateError::Unknown(n) => write!(f, "unknown predicate `{n}`"),
            PredicateError::Shadowed(n) => write!(f, "`{n}` is a built-in predicate and cannot be redefined"),
            PredicateError::Duplicate(n) => write!(f, "predicate `{n}` is already defined"),
        }
    }
}

impl core::error::Error for PredicateError {}

/// Named cell predicates: the built-ins plus user compositions of them.
///
/// A composition may only mention names already registered, so definitions
/// are never recursive.
#[derive(Debug, Clone, Default)]
pub struct PredicateRegistry {
    user: BTreeMap<String, PredicateExpr>,
}

impl PredicateRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn define(&mut self, name: &str, def: PredicateExpr) -> Result<(), PredicateError> {
        if Builtin::from_name(name).is_some() {
            return Err(PredicateError::Shadowed(name.to_string()));
        }
        if self.user.contains_key(name) {
            return Err(PredicateError::Duplicate(name.to_string()));
        }
        let mut names = Vec::new();
        def.names(&mut names);
        if let Some(bad) = names.into_iter().find(|n| !self.contains(n)) {
            return Err(PredicateError::Unknown(bad.to_string()));
        }
        self.user.insert(name.to_string(), def);
        Ok(())
    }

    pub fn contains(&self, name: &str) -> bool {
        Builtin::from_name(name).is_some() || self.user.contains_key(name)
    }

    /// Built-in names first, then user names alphabetically.
    pub fn names(&self) -> impl Iterator<Item = &str> {
        Builtin::ALL
            .into_iter()
            .map(|b| -> &str { b.name() })
            .chain(self.user.keys().map(String::as_str))
    }

    pub fn eval(&self, name: &str, fb: &FactBase, c: &Address) -> Result<bool, PredicateError> {
        if let Some(b) = Builtin::from_name(name) {
            return Ok(b.eval(fb, c));
        }
        let def = self
            .user
            .get(name)
            .ok_or_else(|| PredicateError::Unknown(name.to_string()))?;
        self.eval_expr(def, fb, c)
    }

    pub fn eval_expr(&self, e: &PredicateExpr, fb: &FactBase, c: &Address) -> Result<bool, PredicateError> {
        Ok(match e {
            PredicateExpr::Named(n) => self.eval(n, fb, c)?,
            PredicateExpr::And(a, b) => self.eval_expr(a, fb, c)? && self.eval_expr(b, fb, c)?,
            PredicateExpr::Or(a, b) => self.eval_expr(a, fb, c)? || self.eval_expr(b, fb, c)?,
            PredicateExpr::Not(a) => !self.eval_expr(a, fb, c)?,
        })
    }
}

/// Look up `name` in `reg` and apply it at `c`.
pub fn eval_predicate(reg: &PredicateRegistry, name: &str, fb: &FactBase, c: &Address) -> Result<bool, PredicateError> {
    reg.eval(name, fb, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::workbook::Formula;
    use alloc::vec;

    fn a(col: u32, row: u32) -> Address {
        Address::new("Sheet1", col, row)
    }

    fn with_formulas(cells: &[(u32, u32, &str)]) -> FactBase {
        let mut wb = Workbook::new();
        for &(c, r, src) in cells {
            let at = a(c, r);
            let content = if let Some(text) = src.strip_prefix('\'') {
                CellContent::Text(text.into())
            } else {
                CellContent::Formula(Formula::parse(src, &at).unwrap())
            };
            wb.set(at, content);
        }
        FactBase::build(wb)
    }

    fn set(cells: &[Address]) -> BTreeSet<Address> {
        cells.iter().cloned().collect()
    }

    #[test]
    fn income_dependencies() {
        let fb = FactBase::build(fixtures::income());
        assert_eq!(fb.depends_on(&a(3, 2)), &set(&[a(1, 2), a(2, 2)]));
        assert_eq!(fb.depends_on(&a(3, 3)), &set(&[a(1, 3), a(2, 3)]));
        assert_eq!(fb.dependents(&a(1, 2)), &set(&[a(3, 2)]));
        assert!(fb.depends_on(&a(1, 2)).is_empty());
        assert_eq!(fb.depends_on_transitive(&a(3, 2)), set(&[a(1, 2), a(2, 2)]));
        assert!(fb.detect_cycles().is_empty());
    }

    #[test]
    fn empty_workbook_has_no_facts() {
        let fb = FactBase::build(Workbook::new());
        assert!(fb.labels().is_empty());
        assert!(fb.depends_on(&a(1, 1)).is_empty());
        assert!(fb.detect_cycles().is_empty());
    }

    #[test]
    fn labels_are_unreferenced_text() {
        let fb = FactBase::build(fixtures::income());
        assert!(fb.is_label(&a(1, 1)));
        assert!(!fb.is_label(&a(9, 9)));
        assert!(!fb.is_label(&a(1, 2)));
        let fb = with_formulas(&[(1, 1, "'Hello"), (2, 1, "=CONCATENATE(A1,\"!\")")]);
        assert!(!fb.is_label(&a(1, 1)));
        assert!(Builtin::Cell.eval(&fb, &a(1, 1)));
    }

    #[test]
    fn ranges_expand_and_empty_refs_count() {
        let fb = with_formulas(&[(2, 1, "=SUM(A1:A3)")]);
        assert_eq!(fb.depends_on(&a(2, 1)), &set(&[a(1, 1), a(1, 2), a(1, 3)]));
        assert_eq!(fb.dependents(&a(1, 3)), &set(&[a(2, 1)]));
    }

    #[test]
    fn transitive_chain() {
        let fb = with_formulas(&[(1, 1, "=1"), (2, 1, "=A1"), (3, 1, "=B1")]);
        assert_eq!(fb.depends_on_transitive(&a(3, 1)), set(&[a(1, 1), a(2, 1)]));
        assert!(fb.depends_on_transitive(&a(1, 1)).is_empty());
    }

    #[test]
    fn cycles() {
        let fb = with_formulas(&[(1, 1, "=B1"), (2, 1, "=A1")]);
        assert_eq!(fb.detect_cycles(), vec![vec![a(1, 1), a(2, 1)]]);
        assert_eq!(fb.depends_on_transitive(&a(1, 1)), set(&[a(1, 1), a(2, 1)]));
        let fb = with_formulas(&[(1, 1, "=A1")]);
        assert_eq!(fb.detect_cycles(), vec![vec![a(1, 1)]]);
    }

    #[test]
    fn copies() {
        let fb = FactBase::build(fixtures::income());
        assert!(fb.copy_of(&a(3, 2), &a(3, 3)));
        assert!(fb.copy_of(&a(3, 2), &a(3, 2)));
        assert!(fb.column_all_copies("Sheet1", 3, 2, 4));
        assert!(fb.column_all_copies("Sheet1", 3, 2, 2));
        assert!(!fb.column_all_copies("Sheet1", 1, 2, 4));
        assert!(!fb.column_all_copies("Sheet1", 3, 1, 4));
        let fb = with_formulas(&[(3, 2, "=A2-B2"), (3, 3, "=B3-A3")]);
        assert!(!fb.copy_of(&a(3, 2), &a(3, 3)));
    }

    #[test]
    fn registry() {
        let fb = FactBase::build(fixtures::income());
        let mut reg = PredicateRegistry::new();
        assert_eq!(eval_predicate(&reg, "label", &fb, &a(1, 1)), Ok(true));
        assert_eq!(eval_predicate(&reg, "empty", &fb, &a(20, 20)), Ok(true));
        assert_eq!(eval_predicate(&reg, "formula", &fb, &a(3, 2)), Ok(true));
        assert_eq!(
            eval_predicate(&reg, "nope", &fb, &a(1, 1)),
            Err(PredicateError::Unknown("nope".into()))
        );
        let input = PredicateExpr::named("number").or(PredicateExpr::named("empty"));
        reg.define("input", input).unwrap();
        reg.define(
            "computed",
            PredicateExpr::named("cell").and(PredicateExpr::named("input").negate()),
        )
        .unwrap();
        assert_eq!(reg.eval("input", &fb, &a(1, 2)), Ok(true));
        assert_eq!(reg.eval("computed", &fb, &a(3, 2)), Ok(true));
        assert_eq!(reg.eval("computed", &fb, &a(1, 2)), Ok(false));
        assert_eq!(
            reg.define("label", PredicateExpr::named("text")),
            Err(PredicateError::Shadowed("label".into()))
        );
        assert_eq!(
            reg.define("x", PredicateExpr::named("y")),
            Err(PredicateError::Unknown("y".into()))
        );
        assert_eq!(
            reg.define("input", PredicateExpr::named("text")),
            Err(PredicateError::Duplicate("input".into()))
        );
    }
}
