//! One equation for every index of an attribute.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use super::{Attribute, IndexDomain, Model};
use crate::formula::{Expr, IndexExpr};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GeneralizeError {
    UnknownAttribute(String),
    /// Some definition still refers to cells directly.
    PlainRefs(String),
}

impl fmt::Display for GeneralizeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeneralizeError::UnknownAttribute(n) => write!(f, "no attribute named `{n}`"),
            GeneralizeError::PlainRefs(n) => write!(
                f,
                "`{n}` still refers to ungrouped cells; group the cells it uses first"
            ),
        }
    }
}

impl core::error::Error for GeneralizeError {}

/// A template `T` with `T` at index `i` equal to the definition at `i` for
/// every index, or `None` when the definitions differ in shape.
///
/// An index into another attribute becomes `Param(k)` when it is always the
/// current position shifted by `k`, and stays constant when it never
/// changes. With a single index the shifted form is used.
pub fn generalize(m: &Model, name: &str) -> Result<Option<Expr>, GeneralizeError> {
    let a = m
        .attribute(name)
        .ok_or_else(|| GeneralizeError::UnknownAttribute(name.to_string()))?;
    if a.defs.iter().any(|d| d.expr.has_cell_refs()) {
        return Err(GeneralizeError::PlainRefs(name.to_string()));
    }
    let exprs: Vec<&Expr> = a.defs.iter().map(|d| &d.expr).collect();
    let u = Unifier { m, owner: a };
    let Some(template) = u.expr(&exprs) else {
        return Ok(None);
    };
    let exact = (0..exprs.len()).all(|i| instantiate(&template, m, name, i).as_ref() == Some(exprs[i]));
    Ok(exact.then_some(template))
}

/// The template at 0-based position `i` of `name`.
pub fn instantiate(template: &Expr, m: &Model, name: &str, i: usize) -> Option<Expr> {
    m.attribute(name)?;
    let concrete = |attr: &str, index: &IndexExpr| -> Result<IndexExpr, ()> {
        let IndexExpr::Param(k) = index else {
            return Ok(index.clone());
        };
        let pos = i as i64 + k;
        match &m.attribute(attr).ok_or(())?.domain {
            IndexDomain::Range(_) => Ok(IndexExpr::Const(pos + 1)),
            IndexDomain::Enum(labels) => usize::try_from(pos)
                .ok()
                .and_then(|p| labels.get(p))
                .map(|l| IndexExpr::Enum(l.clone()))
                .ok_or(()),
        }
    };
    template
        .try_map(&mut |node| match node {
            Expr::AttrRef { attr, index, style } => Ok::<_, ()>(Some(Expr::AttrRef {
                attr: attr.clone(),
                index: concrete(attr, index)?,
                style: *style,
            })),
            Expr::AttrRange { attr, from, to, style } => Ok(Some(Expr::AttrRange {
                attr: attr.clone(),
                from: concrete(attr, from)?,
                to: concrete(attr, to)?,
                style: *style,
            })),
            _ => Ok(None),
        })
        .ok()
}

struct Unifier<'a> {
    m: &'a Model,
    owner: &'a Attribute,
}

impl Unifier<'_> {
    fn expr(&self, es: &[&Expr]) -> Option<Expr> {
        let first = es[0];
        let all = |f: &dyn Fn(&Expr) -> bool| es.iter().all(|e| f(e));
        match first {
            Expr::Num(_) | Expr::Str(_) => all(&|e| e == first).then(|| first.clone()),
            Expr::Bin(op, ..) => {
                let mut ls = Vec::new();
                let mut rs = Vec::new();
                for e in es {
                    let Expr::Bin(o, l, r) = e else { return None };
                    if o != op {
                        return None;
                    }
                    ls.push(&**l);
                    rs.push(&**r);
                }
                Some(Expr::Bin(*op, Box::new(self.expr(&ls)?), Box::new(self.expr(&rs)?)))
            }
            Expr::Neg(_) => {
                let inner: Vec<&Expr> = es
                    .iter()
                    .map(|e| match e {
                        Expr::Neg(x) => Some(&**x),
                        _ => None,
                    })
                    .collect::<Option<_>>()?;
                Some(Expr::Neg(Box::new(self.expr(&inner)?)))
            }
            Expr::Call(name, args) => {
                let mut columns: Vec<Vec<&Expr>> = args.iter().map(|_| Vec::new()).collect();
                for e in es {
                    let Expr::Call(n, a) = e else { return None };
                    if n != name || a.len() != args.len() {
                        return None;
                    }
                    for (col, x) in columns.iter_mut().zip(a) {
                        col.push(x);
                    }
                }
                let unified = columns.iter().map(|c| self.expr(c)).collect::<Option<_>>()?;
                Some(Expr::Call(name.clone(), unified))
            }
            Expr::AttrRef { attr, style, .. } => {
                let mut idx = Vec::new();
                for e in es {
                    match e {
                        Expr::AttrRef {
                            attr: a,
                            index,
                            style: s,
                        } if a == attr && s == style => idx.push(index),
                        _ => return None,
                    }
                }
                Some(Expr::AttrRef {
                    attr: attr.clone(),
                    index: self.index(attr, &idx)?,
                    style: *style,
                })
            }
            Expr::AttrRange { attr, style, .. } => {
                let mut froms = Vec::new();
                let mut tos = Vec::new();
                for e in es {
                    match e {
                        Expr::AttrRange {
                            attr: a,
                            from,
                            to,
                            style: s,
                        } if a == attr && s == style => {
                            froms.push(from);
                            tos.push(to);
                        }
                        _ => return None,
                    }
                }
                Some(Expr::AttrRange {
                    attr: attr.clone(),
                    from: self.index(attr, &froms)?,
                    to: self.index(attr, &tos)?,
                    style: *style,
                })
            }
            Expr::Ref(_) | Expr::Range(..) | Expr::OffsetRef(_) | Expr::OffsetRange(..) => None,
        }
    }

    fn index(&self, attr: &str, idx: &[&IndexExpr]) -> Option<IndexExpr> {
        let target = self.m.attribute(attr)?;
        let n = idx.len();
        if n > 1 && idx.iter().all(|x| *x == idx[0]) {
            return Some(idx[0].clone());
        }
        let positions: Vec<i64> = idx
            .iter()
            .map(|x| target.domain.position(x).map(|p| p as i64))
            .collect::<Option<_>>()?;
        let k = positions[0];
        let shifted = positions.iter().enumerate().all(|(i, p)| p - i as i64 == k);
        match (&self.owner.domain, &target.domain) {
            (IndexDomain::Range(_), IndexDomain::Range(_)) if shifted => Some(IndexExpr::Param(k)),
            (IndexDomain::Enum(a), IndexDomain::Enum(b)) if shifted && k == 0 && a == b => Some(IndexExpr::Param(0)),
            _ if n == 1 => Some(idx[0].clone()),
            _ => None,
        }
    }
}
