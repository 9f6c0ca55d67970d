//! Models: named, indexed attributes whose layout maps each index to a cell.
//!
//! A model compiles to a workbook by placing every attribute's per-index
//! definitions at its layout cells; a workbook decompiles to the model with
//! one attribute per cell. Transforms regroup a model without changing what
//! it compiles to.

mod emit;
mod generalize;
mod transform;

pub use emit::emit_mm;
pub use generalize::{generalize, instantiate, GeneralizeError};
pub use transform::{
    apply, apply_group, apply_index_by, apply_name_from_label, apply_rename, apply_ungroup, infer_index_labels,
    infer_name, match_to_transforms, sanitize_identifier, Applied, Transform, TransformError,
};

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::address::Address;
use crate::formula::{CellRef, Expr, IndexExpr};
use crate::number::Number;
use crate::workbook::{CellContent, Formula, Workbook};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IndexDomain {
    /// Indices `1..=n`.
    Range(u32),
    /// Named indices, in order.
    Enum(Vec<String>),
}

impl IndexDomain {
    pub fn len(&self) -> usize {
        match self {
            IndexDomain::Range(n) => *n as usize,
            IndexDomain::Enum(labels) => labels.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The index expression naming position `i` (0-based).
    pub fn index(&self, i: usize) -> IndexExpr {
        match self {
            IndexDomain::Range(_) => IndexExpr::Const(i as i64 + 1),
            IndexDomain::Enum(labels) => IndexExpr::Enum(labels[i].clone()),
        }
    }

    /// 0-based position of a constant index, if it lies in the domain.
    pub fn position(&self, index: &IndexExpr) -> Option<usize> {
        match (self, index) {
            (IndexDomain::Range(n), IndexExpr::Const(j)) if *j >= 1 && *j <= i64::from(*n) => Some(*j as usize - 1),
            (IndexDomain::Enum(labels), IndexExpr::Enum(l)) => labels.iter().position(|x| x == l),
            _ => None,
        }
    }
}

impl fmt::Display for IndexDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexDomain::Range(n) => write!(f, "[1..{n}]"),
            IndexDomain::Enum(labels) => write!(f, "{{{}}}", labels.join(",")),
        }
    }
}

/// What one index of an attribute stands for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Def {
    pub expr: Expr,
    /// Distinguishes the formula `=7` from the number 7.
    pub is_formula: bool,
}

impl Def {
    pub fn of_cell(content: &CellContent) -> Def {
        match content {
            CellContent::Number(n) => Def {
                expr: Expr::Num(*n),
                is_formula: false,
            },
            CellContent::Text(t) => Def {
                expr: Expr::Str(t.clone()),
                is_formula: false,
            },
            CellContent::Formula(f) => Def {
                expr: f.ast().clone(),
                is_formula: true,
            },
        }
    }

    /// Numeric input rather than something computed or textual.
    pub fn is_number_data(&self) -> bool {
        !self.is_formula && matches!(self.expr, Expr::Num(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attribute {
    pub name: String,
    pub domain: IndexDomain,
    /// Cell of each index, in index order.
    pub layout: Vec<Address>,
    pub defs: Vec<Def>,
    /// Header label absorbed when the attribute was named after it.
    pub label_meta: Option<(Address, String)>,
}

impl Attribute {
    pub fn single(name: String, at: Address, def: Def) -> Attribute {
        Attribute {
            name,
            domain: IndexDomain::Range(1),
            layout: Vec::from([at]),
            defs: Vec::from([def]),
            label_meta: None,
        }
    }

    pub fn is_single_cell(&self) -> bool {
        self.layout.len() == 1 && self.domain == IndexDomain::Range(1)
    }

    /// Layout cells plus the absorbed label cell.
    pub fn cells(&self) -> impl Iterator<Item = &Address> {
        self.layout.iter().chain(self.label_meta.as_ref().map(|(a, _)| a))
    }

    /// The header signature: `Name[1..n]`, `Name{a,b}`, or the bare name for one cell.
    pub fn signature(&self) -> String {
        if self.domain == IndexDomain::Range(1) {
            self.name.clone()
        } else {
            format!("{}{}", self.name, self.domain)
        }
    }
}

/// Attributes kept in column-major order of their first layout cell.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Model {
    attributes: Vec<Attribute>,
    /// Name prefix of cell attributes per sheet; empty for one-sheet workbooks.
    sheet_prefixes: BTreeMap<String, String>,
}

fn cell_name_with(prefixes: &BTreeMap<String, String>, at: &Address) -> String {
    match prefixes.get(&at.sheet) {
        Some(prefix) => format!("{prefix}_{}", at.a1()),
        None => at.a1(),
    }
}

pub fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl Model {
    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn attribute(&self, name: &str) -> Option<&Attribute> {
        self.attributes.iter().find(|a| a.name == name)
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    /// Attribute whose layout holds `at`, with the 0-based position.
    pub fn attribute_at(&self, at: &Address) -> Option<(&Attribute, usize)> {
        self.attributes
            .iter()
            .find_map(|a| a.layout.iter().position(|c| c == at).map(|i| (a, i)))
    }

    /// Name a fresh single-cell attribute at `at` gets.
    pub fn cell_name(&self, at: &Address) -> String {
        cell_name_with(&self.sheet_prefixes, at)
    }

    pub(crate) fn from_parts(mut attributes: Vec<Attribute>, sheet_prefixes: BTreeMap<String, String>) -> Model {
        attributes.sort_by(|a, b| a.layout[0].column_major_cmp(&b.layout[0]));
        Model {
            attributes,
            sheet_prefixes,
        }
    }

    pub(crate) fn into_parts(self) -> (Vec<Attribute>, BTreeMap<String, String>) {
        (self.attributes, self.sheet_prefixes)
    }
}

/// One single-cell attribute per non-empty cell, holding the cell's content
/// with plain references.
pub fn decompile(wb: &Workbook) -> Model {
    let sheets = wb.sheets();
    let mut sheet_prefixes = BTreeMap::new();
    if sheets.len() > 1 {
        let mut used = BTreeSet::new();
        for sheet in sheets {
            let base = sanitize_identifier(sheet).unwrap_or_else(|| String::from("Sheet"));
            let mut prefix = base.clone();
            let mut k = 2;
            while !used.insert(prefix.clone()) {
                prefix = format!("{base}_{k}");
                k += 1;
            }
            sheet_prefixes.insert(sheet.to_string(), prefix);
        }
    }
    let attributes = wb
        .iter()
        .map(|(at, content)| Attribute::single(cell_name_with(&sheet_prefixes, at), at.clone(), Def::of_cell(content)))
        .collect();
    Model::from_parts(attributes, sheet_prefixes)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CompileError {
    Overlap { first: String, second: String, at: Address },
    Dangling { attr: String, reference: String },
    Malformed(String),
}

impl fmt::Display for CompileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CompileError::Overlap { first, second, at } => {
                write!(f, "attributes `{first}` and `{second}` both occupy {at}")
            }
            CompileError::Dangling { attr, reference } => {
                write!(f, "attribute `{attr}` refers to `{reference}`, which does not exist")
            }
            CompileError::Malformed(msg) => f.write_str(msg),
        }
    }
}

impl core::error::Error for CompileError {}

/// Replace attribute references by the cells they are laid out on.
pub(crate) fn lower_attr_refs(e: &Expr, m: &Model, owner: &str) -> Result<Expr, CompileError> {
    let dangling = |text: String| CompileError::Dangling {
        attr: owner.to_string(),
        reference: text,
    };
    let cell_of = |attr: &str, index: &IndexExpr| -> Option<Address> {
        let a = m.attribute(attr)?;
        a.domain.position(index).map(|i| a.layout[i].clone())
    };
    e.try_map(&mut |node| match node {
        Expr::AttrRef { attr, index, style } => {
            let target = cell_of(attr, index).ok_or_else(|| dangling(format!("{attr}[{index:?}]")))?;
            Ok(Some(Expr::Ref(CellRef { target, style: *style })))
        }
        Expr::AttrRange { attr, from, to, style } => {
            let a = cell_of(attr, from).ok_or_else(|| dangling(format!("{attr}[{from:?}]")))?;
            let b = cell_of(attr, to).ok_or_else(|| dangling(format!("{attr}[{to:?}]")))?;
            Ok(Some(Expr::Range(
                CellRef {
                    target: a,
                    style: style.0,
                },
                CellRef {
                    target: b,
                    style: style.1,
                },
            )))
        }
        _ => Ok(None),
    })
}

/// Place every definition at its layout cell and every absorbed label at its cell.
pub fn compile(m: &Model) -> Result<Workbook, CompileError> {
    let mut owner: BTreeMap<&Address, &str> = BTreeMap::new();
    for a in &m.attributes {
        if a.layout.len() != a.defs.len() || a.layout.len() != a.domain.len() {
            return Err(CompileError::Malformed(format!(
                "attribute `{}` has mismatched layout",
                a.name
            )));
        }
        for at in a.cells() {
            if let Some(first) = owner.insert(at, &a.name) {
                return Err(CompileError::Overlap {
                    first: first.to_string(),
                    second: a.name.clone(),
                    at: at.clone(),
                });
            }
        }
    }
    let mut wb = Workbook::new();
    for a in &m.attributes {
        for (at, def) in a.layout.iter().zip(&a.defs) {
            let content = if def.is_formula {
                CellContent::Formula(Formula::from_ast(lower_attr_refs(&def.expr, m, &a.name)?))
            } else {
                match &def.expr {
                    Expr::Num(n) => CellContent::Number(*n),
                    Expr::Str(s) => CellContent::Text(s.clone()),
                    other => {
                        return Err(CompileError::Malformed(format!(
                            "attribute `{}` holds non-literal data {other}",
                            a.name
                        )))
                    }
                }
            };
            wb.set(at.clone(), content);
        }
        if let Some((at, text)) = &a.label_meta {
            wb.set(at.clone(), CellContent::Text(text.clone()));
        }
    }
    Ok(wb)
}

/// Why a model breaks an invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelError(pub String);

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl core::error::Error for ModelError {}

/// Check every model invariant: unique well-formed names, consistent and
/// single-sheet layouts, disjoint cells, resolvable attribute references,
/// canonical order.
pub fn validate_model(m: &Model) -> Result<(), ModelError> {
    let fail = |msg: String| Err(ModelError(msg));
    let mut names = BTreeSet::new();
    let mut cells = BTreeSet::new();
    for a in &m.attributes {
        if !is_identifier(&a.name) {
            return fail(format!("`{}` is not an identifier", a.name));
        }
        if !names.insert(a.name.as_str()) {
            return fail(format!("duplicate attribute `{}`", a.name));
        }
        let n = a.domain.len();
        if n == 0 || a.layout.len() != n || a.defs.len() != n {
            return fail(format!("`{}`: domain, layout and definitions disagree", a.name));
        }
        if let IndexDomain::Enum(labels) = &a.domain {
            let distinct: BTreeSet<&String> = labels.iter().collect();
            if distinct.len() != labels.len() || !labels.iter().all(|l| is_identifier(l)) {
                return fail(format!("`{}`: index labels must be distinct identifiers", a.name));
            }
        }
        if a.layout.iter().any(|c| c.sheet != a.layout[0].sheet) {
            return fail(format!("`{}` spans several sheets", a.name));
        }
        for c in a.cells() {
            if !cells.insert(c) {
                return fail(format!("{c} is claimed twice"));
            }
        }
        for d in &a.defs {
            if !d.is_formula && !matches!(d.expr, Expr::Num(_) | Expr::Str(_)) {
                return fail(format!("`{}` holds non-literal data", a.name));
            }
        }
    }
    for a in &m.attributes {
        for d in &a.defs {
            let mut bad = None;
            d.expr.visit(&mut |node| {
                let (attr, idx): (&String, Vec<&IndexExpr>) = match node {
                    Expr::AttrRef { attr, index, .. } => (attr, Vec::from([index])),
                    Expr::AttrRange { attr, from, to, .. } => (attr, Vec::from([from, to])),
                    _ => return,
                };
                let ok = m
                    .attribute(attr)
                    .is_some_and(|target| idx.iter().all(|i| target.domain.position(i).is_some()));
                if !ok && bad.is_none() {
                    bad = Some(format!("`{}` has a dangling reference to `{attr}`", a.name));
                }
            });
            if let Some(msg) = bad {
                return fail(msg);
            }
        }
    }
    let sorted = m
        .attributes
        .windows(2)
        .all(|w| w[0].layout[0].column_major_cmp(&w[1].layout[0]).is_le());
    if !sorted {
        return fail(String::from("attributes are out of order"));
    }
    Ok(())
}

/// A numeric data definition.
pub fn number_def(v: f64) -> Def {
    Def {
        expr: Expr::Num(Number::new(v).expect("finite")),
        is_formula: false,
    }
}
