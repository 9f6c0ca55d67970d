//! The spreadsheet as a finite mapping from addresses to cell contents.

use alloc::collections::btree_map::{self, BTreeMap};
use alloc::collections::BTreeSet;
use alloc::string::String;
use core::fmt;

use crate::address::Address;
use crate::formula::{self, Expr, FormulaError};
use crate::number::Number;

/// A formula cell: its source text and the AST it parses to.
///
/// Equality compares ASTs only. The source is kept so dumps can be
/// reproduced byte for byte, but `=a2 - b2` and `=A2-B2` are the same formula.
#[derive(Debug, Clone)]
pub struct Formula {
    source: String,
    ast: Expr,
}

impl Formula {
    pub fn parse(source: &str, host: &Address) -> Result<Formula, FormulaError> {
        let ast = formula::parse_formula(source, host)?;
        Ok(Formula {
            source: String::from(source),
            ast,
        })
    }

    /// Build from an AST, printing canonical source.
    pub fn from_ast(ast: Expr) -> Formula {
        Formula {
            source: formula::print_formula(&ast),
            ast,
        }
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn ast(&self) -> &Expr {
        &self.ast
    }
}

impl PartialEq for Formula {
    fn eq(&self, other: &Self) -> bool {
        self.ast == other.ast
    }
}

impl Eq for Formula {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CellContent {
    Number(Number),
    Text(String),
    Formula(Formula),
}

impl CellContent {
    pub fn as_formula(&self) -> Option<&Formula> {
        match self {
            CellContent::Formula(f) => Some(f),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            CellContent::Text(t) => Some(t),
            _ => None,
        }
    }
}

impl fmt::Display for CellContent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CellContent::Number(n) => write!(f, "{n}"),
            CellContent::Text(t) => f.write_str(t),
            CellContent::Formula(formula) => f.write_str(formula.source()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DuplicateCell(pub Address);

impl fmt::Display for DuplicateCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "duplicate cell {}", self.0)
    }
}

impl core::error::Error for DuplicateCell {}

/// Cells keyed by address. Empty cells are never stored; the set of sheets is
/// exactly the sheets that hold at least one cell.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Workbook {
    cells: BTreeMap<Address, CellContent>,
}

impl Workbook {
    pub fn new() -> Self {
        Self::default()
    }

    /// Insert a cell; an address may be filled only once.
    pub fn insert(&mut self, at: Address, content: CellContent) -> Result<(), DuplicateCell> {
        match self.cells.entry(at) {
            btree_map::Entry::Occupied(e) => Err(DuplicateCell(e.key().clone())),
            btree_map::Entry::Vacant(e) => {
                e.insert(content);
                Ok(())
            }
        }
    }

    /// Insert or replace.
    pub fn set(&mut self, at: Address, content: CellContent) {
        self.cells.insert(at, content);
    }

    pub fn cell_at(&self, at: &Address) -> Option<&CellContent> {
        self.cells.get(at)
    }

    /// Cells in `(sheet, row, col)` order.
    pub fn iter(&self) -> btree_map::Iter<'_, Address, CellContent> {
        self.cells.iter()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn sheets(&self) -> BTreeSet<&str> {
        self.cells.keys().map(|a| a.sheet.as_str()).collect()
    }

    /// `(max col, max row)` over the sheet's cells; `(0, 0)` when it has none.
    pub fn bounds(&self, sheet: &str) -> (u32, u32) {
        self.cells
            .keys()
            .filter(|a| a.sheet == sheet)
            .fold((0, 0), |(c, r), a| (c.max(a.col), r.max(a.row)))
    }
}

impl FromIterator<(Address, CellContent)> for Workbook {
    /// Later duplicates overwrite earlier ones.
    fn from_iter<I: IntoIterator<Item = (Address, CellContent)>>(iter: I) -> Self {
        Workbook {
            cells: iter.into_iter().collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn a(col: u32, row: u32) -> Address {
        Address::new("Sheet1", col, row)
    }

    #[test]
    fn lookups() {
        let wb = fixtures::income();
        assert_eq!(wb.cell_at(&a(1, 1)), Some(&CellContent::Text("Income".into())));
        let c2 = wb.cell_at(&a(3, 2)).unwrap().as_formula().unwrap();
        assert_eq!(c2.source(), "=A2-B2");
        assert_eq!(Workbook::new().cell_at(&a(1, 1)), None);
    }

    #[test]
    fn bounds_and_sheets() {
        let mut wb = Workbook::new();
        assert_eq!(wb.bounds("Sheet1"), (0, 0));
        wb.insert(a(2, 5), CellContent::Text("x".into())).unwrap();
        wb.insert(a(4, 1), CellContent::Text("y".into())).unwrap();
        assert_eq!(wb.bounds("Sheet1"), (4, 5));
        assert_eq!(wb.bounds("Other"), (0, 0));
        assert_eq!(wb.sheets().into_iter().collect::<alloc::vec::Vec<_>>(), ["Sheet1"]);
    }

    #[test]
    fn duplicate_insert_is_rejected() {
        let mut wb = Workbook::new();
        wb.insert(a(1, 1), CellContent::Text("x".into())).unwrap();
        assert_eq!(
            wb.insert(a(1, 1), CellContent::Text("y".into())),
            Err(DuplicateCell(a(1, 1)))
        );
    }

    #[test]
    fn formula_equality_ignores_spelling() {
        let host = a(3, 2);
        let f = Formula::parse("=A2-B2", &host).unwrap();
        let g = Formula::parse("= a2 - b2", &host).unwrap();
        assert_eq!(f, g);
        assert_ne!(f.source(), g.source());
    }

    proptest::proptest! {
        #[test]
        fn bounds_are_monotone(cells in proptest::collection::vec((1u32..30, 1u32..30), 0..20), extra in (1u32..30, 1u32..30)) {
            let wb: Workbook = cells.iter().map(|&(c, r)| (a(c, r), CellContent::Text("x".into()))).collect();
            let before = wb.bounds("Sheet1");
            let mut after_wb = wb.clone();
            after_wb.set(a(extra.0, extra.1), CellContent::Text("y".into()));
            let after = after_wb.bounds("Sheet1");
            proptest::prop_assert!(after.0 >= before.0 && after.1 >= before.1);
        }
    }
}
