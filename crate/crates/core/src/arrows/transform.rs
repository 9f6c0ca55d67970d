//! The spreadsheet algebra: regroupings of a model that leave its compiled
//! workbook unchanged.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use super::{is_identifier, Attribute, IndexDomain, Model};
use crate::address::Address;
use crate::factbase::FactBase;
use crate::formula::{rewrite_refs, CellRef, Expr, IndexExpr, RewriteError};
use crate::grammar::Match;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Transform {
    /// Merge single-cell attributes into one indexed attribute, in the given order.
    Group {
        cells: Vec<Address>,
        name: String,
    },
    Rename {
        old: String,
        new: String,
    },
    /// Split an attribute back into single-cell attributes.
    Ungroup {
        name: String,
    },
    /// Rename after the label above or left of the first cell, absorbing it.
    NameFromLabel {
        name: String,
    },
    /// Replace numeric indices by labels.
    IndexBy {
        name: String,
        labels: Vec<String>,
    },
}

impl fmt::Display for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Transform::Group { cells, name } => {
                write!(f, "group {name}")?;
                for c in cells {
                    write!(f, " {c}")?;
                }
                Ok(())
            }
            Transform::Rename { old, new } => write!(f, "rename {old} {new}"),
            Transform::Ungroup { name } => write!(f, "ungroup {name}"),
            Transform::NameFromLabel { name } => write!(f, "name {name}"),
            Transform::IndexBy { name, labels } => write!(f, "index {name} {}", labels.join(" ")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransformError {
    UnknownAttribute(String),
    /// The cell is empty, grouped already, or carries an absorbed label.
    NotSingleCell(Address),
    RepeatedCell(Address),
    EmptyGroup,
    MixedSheets,
    NameTaken(String),
    BadName(String),
    Rewrite(RewriteError),
    LabelNotAttribute(Address),
    BadLabels(String),
}

impl fmt::Display for TransformError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransformError::UnknownAttribute(n) => write!(f, "no attribute named `{n}`"),
            TransformError::NotSingleCell(a) => write!(f, "{a} is not an ungrouped cell"),
            TransformError::RepeatedCell(a) => write!(f, "{a} is listed twice"),
            TransformError::EmptyGroup => f.write_str("a group needs at least one cell"),
            TransformError::MixedSheets => f.write_str("an attribute must lie on one sheet"),
            TransformError::NameTaken(n) => write!(f, "an attribute named `{n}` already exists"),
            TransformError::BadName(n) => write!(f, "`{n}` is not a valid attribute name"),
            TransformError::Rewrite(e) => write!(f, "{e}"),
            TransformError::LabelNotAttribute(a) => write!(f, "label {a} is already part of another attribute"),
            TransformError::BadLabels(msg) => f.write_str(msg),
        }
    }
}

impl core::error::Error for TransformError {}

impl From<RewriteError> for TransformError {
    fn from(e: RewriteError) -> Self {
        TransformError::Rewrite(e)
    }
}

/// Result of a transform. `note` explains a transform that changed nothing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Applied {
    pub model: Model,
    pub note: Option<String>,
}

impl Applied {
    fn changed(model: Model) -> Applied {
        Applied { model, note: None }
    }
}

pub fn apply(m: &Model, t: &Transform, fb: &FactBase) -> Result<Applied, TransformError> {
    match t {
        Transform::Group { cells, name } => apply_group(m, cells, name).map(Applied::changed),
        Transform::Rename { old, new } => apply_rename(m, old, new).map(Applied::changed),
        Transform::Ungroup { name } => apply_ungroup(m, name).map(Applied::changed),
        Transform::NameFromLabel { name } => apply_name_from_label(m, name, fb),
        Transform::IndexBy { name, labels } => apply_index_by(m, name, labels).map(Applied::changed),
    }
}

fn map_defs(
    attrs: &mut [Attribute],
    f: &mut impl FnMut(&Expr) -> Result<Expr, TransformError>,
) -> Result<(), TransformError> {
    for a in attrs {
        for d in &mut a.defs {
            d.expr = f(&d.expr)?;
        }
    }
    Ok(())
}

/// References to `target` become plain cell references again.
fn lower_refs_to(e: &Expr, target: &Attribute) -> Expr {
    let cell = |index: &IndexExpr| target.domain.position(index).map(|i| target.layout[i].clone());
    e.map(&mut |node| match node {
        Expr::AttrRef { attr, index, style } if *attr == target.name => cell(index).map(|at| {
            Expr::Ref(CellRef {
                target: at,
                style: *style,
            })
        }),
        Expr::AttrRange { attr, from, to, style } if *attr == target.name => match (cell(from), cell(to)) {
            (Some(a), Some(b)) => Some(Expr::Range(
                CellRef {
                    target: a,
                    style: style.0,
                },
                CellRef {
                    target: b,
                    style: style.1,
                },
            )),
            _ => None,
        },
        _ => None,
    })
}

fn rename_refs(e: &Expr, old: &str, new: &str) -> Expr {
    e.map(&mut |node| match node {
        Expr::AttrRef { attr, index, style } if attr == old => Some(Expr::AttrRef {
            attr: new.to_string(),
            index: index.clone(),
            style: *style,
        }),
        Expr::AttrRange { attr, from, to, style } if attr == old => Some(Expr::AttrRange {
            attr: new.to_string(),
            from: from.clone(),
            to: to.clone(),
            style: *style,
        }),
        _ => None,
    })
}

pub fn apply_group(m: &Model, cells: &[Address], name: &str) -> Result<Model, TransformError> {
    if cells.is_empty() {
        return Err(TransformError::EmptyGroup);
    }
    if !is_identifier(name) {
        return Err(TransformError::BadName(name.to_string()));
    }
    let mut seen = BTreeSet::new();
    let mut merged: Vec<&Attribute> = Vec::new();
    for c in cells {
        if !seen.insert(c) {
            return Err(TransformError::RepeatedCell(c.clone()));
        }
        match m.attribute_at(c) {
            Some((a, _)) if a.is_single_cell() && a.label_meta.is_none() => merged.push(a),
            _ => return Err(TransformError::NotSingleCell(c.clone())),
        }
    }
    if cells.iter().any(|c| c.sheet != cells[0].sheet) {
        return Err(TransformError::MixedSheets);
    }
    let merged_names: BTreeSet<&str> = merged.iter().map(|a| a.name.as_str()).collect();
    if m.attribute(name).is_some() && !merged_names.contains(name) {
        return Err(TransformError::NameTaken(name.to_string()));
    }
    let grouped = Attribute {
        name: name.to_string(),
        domain: IndexDomain::Range(cells.len() as u32),
        layout: cells.to_vec(),
        defs: merged.iter().map(|a| a.defs[0].clone()).collect(),
        label_meta: None,
    };
    let lowered: Vec<Attribute> = merged.iter().map(|a| (*a).clone()).collect();
    let (attrs, prefixes) = m.clone().into_parts();
    let mut attrs: Vec<Attribute> = attrs
        .into_iter()
        .filter(|a| !merged_names.contains(a.name.as_str()))
        .chain([grouped])
        .collect();
    let subst: BTreeMap<Address, Expr> = cells
        .iter()
        .enumerate()
        .map(|(i, c)| (c.clone(), Expr::attr(name, IndexExpr::Const(i as i64 + 1))))
        .collect();
    map_defs(&mut attrs, &mut |e| {
        let plain = lowered.iter().fold(e.clone(), |acc, a| lower_refs_to(&acc, a));
        Ok(rewrite_refs(&plain, &subst)?)
    })?;
    Ok(Model::from_parts(attrs, prefixes))
}

pub fn apply_rename(m: &Model, old: &str, new: &str) -> Result<Model, TransformError> {
    if m.attribute(old).is_none() {
        return Err(TransformError::UnknownAttribute(old.to_string()));
    }
    if old == new {
        return Ok(m.clone());
    }
    if !is_identifier(new) {
        return Err(TransformError::BadName(new.to_string()));
    }
    if m.attribute(new).is_some() {
        return Err(TransformError::NameTaken(new.to_string()));
    }
    let (mut attrs, prefixes) = m.clone().into_parts();
    for a in &mut attrs {
        if a.name == old {
            a.name = new.to_string();
        }
    }
    map_defs(&mut attrs, &mut |e| Ok(rename_refs(e, old, new)))?;
    Ok(Model::from_parts(attrs, prefixes))
}

pub fn apply_ungroup(m: &Model, name: &str) -> Result<Model, TransformError> {
    let target = m
        .attribute(name)
        .ok_or_else(|| TransformError::UnknownAttribute(name.to_string()))?
        .clone();
    let mut singles: Vec<Attribute> = target
        .layout
        .iter()
        .zip(&target.defs)
        .map(|(at, def)| Attribute::single(m.cell_name(at), at.clone(), def.clone()))
        .collect();
    if let Some((at, text)) = &target.label_meta {
        let def = super::Def {
            expr: Expr::Str(text.clone()),
            is_formula: false,
        };
        singles.push(Attribute::single(m.cell_name(at), at.clone(), def));
    }
    for s in &singles {
        if s.name != name && m.attribute(&s.name).is_some() {
            return Err(TransformError::NameTaken(s.name.clone()));
        }
    }
    let (attrs, prefixes) = m.clone().into_parts();
    let mut attrs: Vec<Attribute> = attrs.into_iter().filter(|a| a.name != name).chain(singles).collect();
    map_defs(&mut attrs, &mut |e| Ok(lower_refs_to(e, &target)))?;
    Ok(Model::from_parts(attrs, prefixes))
}

/// Turn label text into an identifier: runs of other characters become a
/// single `_`, outer underscores go, and a leading digit gets `_` in front.
pub fn sanitize_identifier(text: &str) -> Option<String> {
    let mut out = String::new();
    for c in text.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c);
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    let trimmed = out.trim_matches('_');
    if trimmed.is_empty() {
        return None;
    }
    if trimmed.starts_with(|c: char| c.is_ascii_digit()) {
        Some(format!("_{trimmed}"))
    } else {
        Some(trimmed.to_string())
    }
}

fn label_near(fb: &FactBase, first: &Address) -> Option<(Address, String)> {
    [first.offset(0, -1), first.offset(-1, 0)]
        .into_iter()
        .flatten()
        .find(|c| fb.is_label(c))
        .and_then(|c| {
            let text = fb.workbook().cell_at(&c)?.as_text()?.to_string();
            Some((c, text))
        })
}

/// A name suggested by the label directly above, or else directly left of,
/// the attribute's first cell.
pub fn infer_name(m: &Model, name: &str, fb: &FactBase) -> Option<String> {
    let a = m.attribute(name)?;
    label_near(fb, &a.layout[0]).and_then(|(_, text)| sanitize_identifier(&text))
}

pub fn apply_name_from_label(m: &Model, name: &str, fb: &FactBase) -> Result<Applied, TransformError> {
    let a = m
        .attribute(name)
        .ok_or_else(|| TransformError::UnknownAttribute(name.to_string()))?;
    let unchanged = |note: String| {
        Ok(Applied {
            model: m.clone(),
            note: Some(note),
        })
    };
    if a.label_meta.is_some() {
        return unchanged(format!("`{name}` is already named after its label"));
    }
    let found = label_near(fb, &a.layout[0]).and_then(|(at, text)| Some((at, sanitize_identifier(&text)?)));
    let Some((label_at, base)) = found else {
        return unchanged(format!("no label next to {} to name `{name}` after", a.layout[0]));
    };
    let label_attr = match m.attribute_at(&label_at) {
        Some((l, _)) if l.is_single_cell() && l.label_meta.is_none() && l.name != name => l,
        _ => return Err(TransformError::LabelNotAttribute(label_at)),
    };
    let text = match &label_attr.defs[0].expr {
        Expr::Str(s) => s.clone(),
        _ => return Err(TransformError::LabelNotAttribute(label_at)),
    };
    let taken = |n: &str| n != name && n != label_attr.name && m.attribute(n).is_some();
    let mut new = base.clone();
    let mut k = 2;
    while taken(&new) {
        new = format!("{base}_{k}");
        k += 1;
    }
    let label_name = label_attr.name.clone();
    let (attrs, prefixes) = m.clone().into_parts();
    let mut attrs: Vec<Attribute> = attrs.into_iter().filter(|x| x.name != label_name).collect();
    for x in &mut attrs {
        if x.name == name {
            x.name = new.clone();
            x.label_meta = Some((label_at.clone(), text.clone()));
        }
    }
    map_defs(&mut attrs, &mut |e| Ok(rename_refs(e, name, &new)))?;
    Ok(Applied::changed(Model::from_parts(attrs, prefixes)))
}

pub fn apply_index_by(m: &Model, name: &str, labels: &[String]) -> Result<Model, TransformError> {
    let a = m
        .attribute(name)
        .ok_or_else(|| TransformError::UnknownAttribute(name.to_string()))?;
    let IndexDomain::Range(n) = a.domain else {
        return Err(TransformError::BadLabels(format!(
            "`{name}` is already indexed by labels"
        )));
    };
    if labels.len() != n as usize {
        return Err(TransformError::BadLabels(format!(
            "`{name}` has {n} indices but {} labels were given",
            labels.len()
        )));
    }
    if let Some(bad) = labels.iter().find(|l| !is_identifier(l)) {
        return Err(TransformError::BadLabels(format!("`{bad}` is not an identifier")));
    }
    if labels.iter().collect::<BTreeSet<_>>().len() != labels.len() {
        return Err(TransformError::BadLabels(String::from("index labels must be distinct")));
    }
    let relabel = |index: &IndexExpr| match index {
        IndexExpr::Const(j) if *j >= 1 && *j <= i64::from(n) => IndexExpr::Enum(labels[*j as usize - 1].clone()),
        other => other.clone(),
    };
    let (mut attrs, prefixes) = m.clone().into_parts();
    for x in &mut attrs {
        if x.name == name {
            x.domain = IndexDomain::Enum(labels.to_vec());
        }
    }
    map_defs(&mut attrs, &mut |e| {
        Ok(e.map(&mut |node| match node {
            Expr::AttrRef { attr, index, style } if attr == name => Some(Expr::AttrRef {
                attr: attr.clone(),
                index: relabel(index),
                style: *style,
            }),
            Expr::AttrRange { attr, from, to, style } if attr == name => Some(Expr::AttrRange {
                attr: attr.clone(),
                from: relabel(from),
                to: relabel(to),
                style: *style,
            }),
            _ => None,
        }))
    })?;
    Ok(Model::from_parts(attrs, prefixes))
}

/// Labels for each index of `name`: the nearest label up the cell's column,
/// or failing that along its row to the left. `None` unless every index
/// gets a distinct one.
pub fn infer_index_labels(m: &Model, name: &str, fb: &FactBase) -> Option<Vec<String>> {
    let a = m.attribute(name)?;
    let mut out = Vec::new();
    for c in &a.layout {
        let up = (1..c.row).rev().map(|r| Address::new(c.sheet.clone(), c.col, r));
        let left = (1..c.col).rev().map(|col| Address::new(c.sheet.clone(), col, c.row));
        let label = up.chain(left).find(|x| fb.is_label(x))?;
        out.push(sanitize_identifier(fb.workbook().cell_at(&label)?.as_text()?)?);
    }
    let distinct: BTreeSet<&String> = out.iter().collect();
    (distinct.len() == out.len()).then_some(out)
}

/// Suggested transforms for chosen matches: one group per rule instance that
/// bound cells other than labels, named after the rule (`rule`, `rule_2`, …
/// across all matches), then a naming step for each group.
pub fn match_to_transforms(matches: &[Match]) -> Vec<Transform> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    let mut groups = Vec::new();
    for m in matches {
        for b in &m.bindings {
            let mut seen = BTreeSet::new();
            let cells: Vec<Address> = b
                .cells
                .iter()
                .filter(|c| c.terminal != "label" && seen.insert(&c.at))
                .map(|c| c.at.clone())
                .collect();
            if cells.is_empty() {
                continue;
            }
            let k = counts.entry(b.rule.as_str()).or_insert(0);
            *k += 1;
            let name = if *k == 1 {
                b.rule.clone()
            } else {
                format!("{}_{k}", b.rule)
            };
            groups.push((cells, name));
        }
    }
    let naming: Vec<Transform> = groups
        .iter()
        .map(|(_, name)| Transform::NameFromLabel { name: name.clone() })
        .collect();
    groups
        .into_iter()
        .map(|(cells, name)| Transform::Group { cells, name })
        .chain(naming)
        .collect()
}
