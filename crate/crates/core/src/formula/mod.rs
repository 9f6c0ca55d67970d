//! Formula ASTs: parsing, printing, offset normal form and reference rewriting.
//!
//! Two formulas are copies of each other when their offset forms are equal:
//! every relative reference axis is replaced by its distance from the host
//! cell, absolute axes keep their coordinate, and the sheet stays absolute.

mod parse;
mod print;

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::convert::Infallible;
use core::fmt;

use crate::address::Address;
use crate::number::Number;

pub use parse::parse_formula;
pub use print::{print_expr, print_formula, PrintStyle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Eq,
    Lt,
    Gt,
    Le,
    Ge,
    Ne,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
            BinOp::Eq => "=",
            BinOp::Lt => "<",
            BinOp::Gt => ">",
            BinOp::Le => "<=",
            BinOp::Ge => ">=",
            BinOp::Ne => "<>",
        }
    }

    /// Binding strength, low to high: comparisons, additive, multiplicative, power.
    pub(crate) fn precedence(self) -> u8 {
        match self {
            BinOp::Eq | BinOp::Lt | BinOp::Gt | BinOp::Le | BinOp::Ge | BinOp::Ne => 1,
            BinOp::Add | BinOp::Sub => 2,
            BinOp::Mul | BinOp::Div => 3,
            BinOp::Pow => 5,
        }
    }

    pub fn is_comparison(self) -> bool {
        self.precedence() == 1
    }
}

/// How a reference was written: `$` markers and an explicit `Sheet!` prefix.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct RefStyle {
    pub col_abs: bool,
    pub row_abs: bool,
    pub sheet_explicit: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CellRef {
    pub target: Address,
    pub style: RefStyle,
}

impl CellRef {
    /// A relative, same-sheet reference.
    pub fn relative(target: Address) -> Self {
        CellRef {
            target,
            style: RefStyle::default(),
        }
    }
}

/// One axis of an offset reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    /// Distance from the host cell.
    Rel(i64),
    /// Absolute coordinate (`$` in A1 notation).
    Abs(u32),
}

/// A reference expressed relative to its host cell, R1C1 style.
#[derive(Debug, Clone, Eq)]
pub struct OffsetRef {
    pub sheet: String,
    pub col: Axis,
    pub row: Axis,
    /// Kept so the offset form can be inverted exactly; not part of equality.
    pub sheet_explicit: bool,
}

impl PartialEq for OffsetRef {
    fn eq(&self, other: &Self) -> bool {
        self.sheet == other.sheet && self.col == other.col && self.row == other.row
    }
}

impl core::hash::Hash for OffsetRef {
    fn hash<H: core::hash::Hasher>(&self, state: &mut H) {
        self.sheet.hash(state);
        self.col.hash(state);
        self.row.hash(state);
    }
}

/// Index into an attribute.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum IndexExpr {
    Const(i64),
    /// The quantified index plus an offset; only inside generalized equations.
    Param(i64),
    Enum(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Num(Number),
    Str(String),
    Ref(CellRef),
    Range(CellRef, CellRef),
    OffsetRef(OffsetRef),
    OffsetRange(OffsetRef, OffsetRef),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    /// Uninterpreted function call; the name is uppercase.
    Call(String, Vec<Expr>),
    /// Element of a grouped attribute. Never produced by the parser.
    AttrRef {
        attr: String,
        index: IndexExpr,
        style: RefStyle,
    },
    /// Consecutive slice `attr[from..to]` of a grouped attribute.
    AttrRange {
        attr: String,
        from: IndexExpr,
        to: IndexExpr,
        style: (RefStyle, RefStyle),
    },
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(Number::new(v).expect("finite literal"))
    }

    pub fn cell(target: Address) -> Expr {
        Expr::Ref(CellRef::relative(target))
    }

    pub fn bin(op: BinOp, left: Expr, right: Expr) -> Expr {
        Expr::Bin(op, Box::new(left), Box::new(right))
    }

    pub fn attr(attr: impl Into<String>, index: IndexExpr) -> Expr {
        Expr::AttrRef {
            attr: attr.into(),
            index,
            style: RefStyle::default(),
        }
    }

    /// Rebuild the tree. `f` sees each node before its children; returning
    /// `Some` replaces the node without descending into it.
    pub fn try_map<E>(&self, f: &mut impl FnMut(&Expr) -> Result<Option<Expr>, E>) -> Result<Expr, E> {
        if let Some(replacement) = f(self)? {
            return Ok(replacement);
        }
        Ok(match self {
            Expr::Bin(op, l, r) => Expr::Bin(*op, Box::new(l.try_map(f)?), Box::new(r.try_map(f)?)),
            Expr::Neg(inner) => Expr::Neg(Box::new(inner.try_map(f)?)),
            Expr::Call(name, args) => Expr::Call(
                name.clone(),
                args.iter().map(|a| a.try_map(f)).collect::<Result<_, _>>()?,
            ),
            leaf => leaf.clone(),
        })
    }

    pub fn map(&self, f: &mut impl FnMut(&Expr) -> Option<Expr>) -> Expr {
        match self.try_map::<Infallible>(&mut |e| Ok(f(e))) {
            Ok(e) => e,
            Err(never) => match never {},
        }
    }

    /// Pre-order walk over every node.
    pub fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Bin(_, l, r) => {
                l.visit(f);
                r.visit(f);
            }
            Expr::Neg(inner) => inner.visit(f),
            Expr::Call(_, args) => args.iter().for_each(|a| a.visit(f)),
            _ => {}
        }
    }

    pub fn has_cell_refs(&self) -> bool {
        let mut found = false;
        self.visit(&mut |e| found |= matches!(e, Expr::Ref(_) | Expr::Range(..)));
        found
    }

    /// Attribute names referenced, in first-occurrence order.
    pub fn attr_names(&self) -> Vec<&str> {
        fn walk<'a>(e: &'a Expr, out: &mut Vec<&'a str>) {
            match e {
                Expr::AttrRef { attr, .. } | Expr::AttrRange { attr, .. } => {
                    if !out.contains(&attr.as_str()) {
                        out.push(attr);
                    }
                }
                Expr::Bin(_, l, r) => {
                    walk(l, out);
                    walk(r, out);
                }
                Expr::Neg(inner) => walk(inner, out),
                Expr::Call(_, args) => args.iter().for_each(|a| walk(a, out)),
                _ => {}
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_expr(self, &PrintStyle::default()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FormulaErrorKind {
    MissingEquals,
    UnexpectedChar(char),
    UnexpectedToken(String),
    UnexpectedEnd,
    UnterminatedString,
    UnknownName(String),
    /// Row or column 0, or a coordinate that does not fit.
    BadReference(String),
    /// A range outside a call argument or comparison operand.
    MisplacedRange,
    /// Range endpoints on different sheets.
    CrossSheetRange,
    BadNumber(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormulaError {
    pub kind: FormulaErrorKind,
    /// Byte offset into the source text, which includes the leading `=`.
    pub position: usize,
}

impl fmt::Display for FormulaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            FormulaErrorKind::MissingEquals => f.write_str("formula must start with `=`")?,
            FormulaErrorKind::UnexpectedChar(c) => write!(f, "unexpected character `{c}`")?,
            FormulaErrorKind::UnexpectedToken(t) => write!(f, "unexpected `{t}`")?,
            FormulaErrorKind::UnexpectedEnd => f.write_str("unexpected end of formula")?,
            FormulaErrorKind::UnterminatedString => f.write_str("unterminated string literal")?,
            FormulaErrorKind::UnknownName(n) => write!(f, "unknown name `{n}`")?,
            FormulaErrorKind::BadReference(r) => write!(f, "invalid reference `{r}`")?,
            FormulaErrorKind::MisplacedRange => {
                f.write_str("ranges are only allowed as function arguments or comparison operands")?
            }
            FormulaErrorKind::CrossSheetRange => f.write_str("range endpoints must be on the same sheet")?,
            FormulaErrorKind::BadNumber(n) => write!(f, "invalid number `{n}`")?,
        }
        write!(f, " at position {}", self.position)
    }
}

impl core::error::Error for FormulaError {}

fn offset_of(r: &CellRef, host: &Address) -> OffsetRef {
    let axis = |abs: bool, coord: u32, host_coord: u32| {
        if abs {
            Axis::Abs(coord)
        } else {
            Axis::Rel(i64::from(coord) - i64::from(host_coord))
        }
    };
    OffsetRef {
        sheet: r.target.sheet.clone(),
        col: axis(r.style.col_abs, r.target.col, host.col),
        row: axis(r.style.row_abs, r.target.row, host.row),
        sheet_explicit: r.style.sheet_explicit,
    }
}

/// Range corners with each axis pair in a fixed order, so that a range and
/// its copy elsewhere agree whichever corner is top-left at each host.
fn offset_range(a: &CellRef, b: &CellRef, host: &Address) -> Expr {
    let (oa, ob) = (offset_of(a, host), offset_of(b, host));
    let (c0, c1) = if oa.col <= ob.col {
        (oa.col, ob.col)
    } else {
        (ob.col, oa.col)
    };
    let (r0, r1) = if oa.row <= ob.row {
        (oa.row, ob.row)
    } else {
        (ob.row, oa.row)
    };
    Expr::OffsetRange(
        OffsetRef { col: c0, row: r0, ..oa },
        OffsetRef { col: c1, row: r1, ..ob },
    )
}

/// Replace every reference with its host-relative form.
pub fn to_offset_form(e: &Expr, host: &Address) -> Expr {
    e.map(&mut |node| match node {
        Expr::Ref(r) => Some(Expr::OffsetRef(offset_of(r, host))),
        Expr::Range(a, b) => Some(offset_range(a, b, host)),
        _ => None,
    })
}

fn cell_of(o: &OffsetRef, host: &Address) -> Option<CellRef> {
    let resolve = |axis: Axis, host_coord: u32| -> Option<u32> {
        match axis {
            Axis::Abs(c) => Some(c),
            Axis::Rel(d) => {
                let v = i64::from(host_coord).checked_add(d)?;
                (1..=i64::from(u32::MAX)).contains(&v).then_some(v as u32)
            }
        }
    };
    Some(CellRef {
        target: Address {
            sheet: o.sheet.clone(),
            col: resolve(o.col, host.col)?,
            row: resolve(o.row, host.row)?,
        },
        style: RefStyle {
            col_abs: matches!(o.col, Axis::Abs(_)),
            row_abs: matches!(o.row, Axis::Abs(_)),
            sheet_explicit: o.sheet_explicit,
        },
    })
}

/// Inverse of [`to_offset_form`]. `None` when an offset lands outside the grid.
pub fn from_offset_form(e: &Expr, host: &Address) -> Option<Expr> {
    e.try_map(&mut |node| match node {
        Expr::OffsetRef(o) => cell_of(o, host).map(|r| Some(Expr::Ref(r))).ok_or(()),
        Expr::OffsetRange(a, b) => match (cell_of(a, host), cell_of(b, host)) {
            (Some(a), Some(b)) => Ok(Some(parse::normalize_range(a, b))),
            _ => Err(()),
        },
        _ => Ok(None),
    })
    .ok()
}

/// Every address in a range, row by row.
pub fn range_cells<'a>(from: &'a Address, to: &Address) -> impl Iterator<Item = Address> + 'a {
    let (c0, c1) = (from.col.min(to.col), from.col.max(to.col));
    let (r0, r1) = (from.row.min(to.row), from.row.max(to.row));
    (r0..=r1).flat_map(move |row| {
        (c0..=c1).map(move |col| Address {
            sheet: from.sheet.clone(),
            col,
            row,
        })
    })
}

/// Referenced addresses in left-to-right order, ranges expanded, duplicates dropped.
pub fn refs_of(e: &Expr) -> Vec<Address> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let mut push = |a: Address, out: &mut Vec<Address>| {
        if seen.insert(a.clone()) {
            out.push(a);
        }
    };
    e.visit(&mut |node| match node {
        Expr::Ref(r) => push(r.target.clone(), &mut out),
        Expr::Range(a, b) => range_cells(&a.target, &b.target).for_each(|c| push(c, &mut out)),
        _ => {}
    });
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RewriteError {
    /// Some but not all cells of the range are being replaced.
    PartialRange { range: String },
    /// All cells are replaced but not by consecutive indices of one attribute.
    ScatteredRange { range: String },
}

impl fmt::Display for RewriteError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RewriteError::PartialRange { range } => {
                write!(f, "range {range} only partly overlaps the cells being grouped")
            }
            RewriteError::ScatteredRange { range } => write!(
                f,
                "range {range} does not map onto consecutive indices of a single attribute"
            ),
        }
    }
}

impl core::error::Error for RewriteError {}

fn range_text(a: &CellRef, b: &CellRef) -> String {
    alloc::format!("{}!{}:{}", a.target.sheet, a.target.a1(), b.target.a1())
}

/// Substitute references whose target is in `subst`.
///
/// An `AttrRef` replacement inherits the `$`/sheet style of the reference it
/// replaces. A range is replaced only when all of its cells map, in reading
/// order, onto ascending consecutive `Const` indices of one attribute.
pub fn rewrite_refs(e: &Expr, subst: &BTreeMap<Address, Expr>) -> Result<Expr, RewriteError> {
    if subst.is_empty() {
        return Ok(e.clone());
    }
    e.try_map(&mut |node| match node {
        Expr::Ref(r) => Ok(subst.get(&r.target).map(|rep| match rep {
            Expr::AttrRef { attr, index, .. } => Expr::AttrRef {
                attr: attr.clone(),
                index: index.clone(),
                style: r.style,
            },
            other => other.clone(),
        })),
        Expr::Range(a, b) => {
            let cells: Vec<Address> = range_cells(&a.target, &b.target).collect();
            let mapped: Vec<&Expr> = cells.iter().filter_map(|c| subst.get(c)).collect();
            if mapped.is_empty() {
                return Ok(None);
            }
            if mapped.len() != cells.len() {
                return Err(RewriteError::PartialRange {
                    range: range_text(a, b),
                });
            }
            let scattered = || RewriteError::ScatteredRange {
                range: range_text(a, b),
            };
            let mut name: Option<&str> = None;
            let mut first = 0i64;
            for (k, rep) in mapped.iter().enumerate() {
                match rep {
                    Expr::AttrRef {
                        attr,
                        index: IndexExpr::Const(i),
                        ..
                    } => {
                        match name {
                            None => {
                                name = Some(attr);
                                first = *i;
                            }
                            Some(n) if n == attr => {}
                            Some(_) => return Err(scattered()),
                        }
                        if *i != first + k as i64 {
                            return Err(scattered());
                        }
                    }
                    _ => return Err(scattered()),
                }
            }
            Ok(Some(Expr::AttrRange {
                attr: String::from(name.unwrap_or_default()),
                from: IndexExpr::Const(first),
                to: IndexExpr::Const(first + mapped.len() as i64 - 1),
                style: (a.style, b.style),
            }))
        }
        _ => Ok(None),
    })
}
