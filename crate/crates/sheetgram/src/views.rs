//! JSON shapes of grids, matches and models.

use serde::Serialize;
use sheetgram_core::arrows::{Attribute, IndexDomain, Model};
use sheetgram_core::factbase::FactBase;
use sheetgram_core::formula::{print_expr, IndexExpr, PrintStyle};
use sheetgram_core::grammar::Match;
use sheetgram_core::{Address, CellContent};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CellPos {
    pub sheet: String,
    pub col: u32,
    pub row: u32,
    pub a1: String,
}

impl From<&Address> for CellPos {
    fn from(a: &Address) -> Self {
        CellPos {
            sheet: a.sheet.clone(),
            col: a.col,
            row: a.row,
            a1: a.a1(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GridCell {
    pub sheet: String,
    pub col: u32,
    pub row: u32,
    /// `num`, `str`, `formula` or `label`.
    pub kind: &'static str,
    pub display: String,
}

pub fn grid(fb: &FactBase) -> Vec<GridCell> {
    fb.workbook()
        .iter()
        .map(|(at, content)| GridCell {
            sheet: at.sheet.clone(),
            col: at.col,
            row: at.row,
            kind: match content {
                _ if fb.is_label(at) => "label",
                CellContent::Number(_) => "num",
                CellContent::Text(_) => "str",
                CellContent::Formula(_) => "formula",
            },
            display: content.to_string(),
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundView {
    #[serde(flatten)]
    pub at: CellPos,
    pub terminal: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct BindingView {
    pub rule: String,
    pub cells: Vec<BoundView>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MatchView {
    pub index: usize,
    pub rule: String,
    pub anchor: CellPos,
    pub end: CellPos,
    pub bindings: Vec<BindingView>,
    /// Distinct bound cells.
    pub cells: Vec<CellPos>,
}

pub fn matches(ms: &[Match]) -> Vec<MatchView> {
    ms.iter()
        .enumerate()
        .map(|(index, m)| MatchView {
            index,
            rule: m.rule.clone(),
            anchor: (&m.anchor).into(),
            end: (&m.end).into(),
            bindings: m
                .bindings
                .iter()
                .map(|b| BindingView {
                    rule: b.rule.clone(),
                    cells: b
                        .cells
                        .iter()
                        .map(|c| BoundView {
                            at: (&c.at).into(),
                            terminal: c.terminal.clone(),
                        })
                        .collect(),
                })
                .collect(),
            cells: m.addresses().into_iter().map(CellPos::from).collect(),
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainView {
    Range { size: u32 },
    Labels { labels: Vec<String> },
}

#[derive(Debug, Clone, Serialize)]
pub struct DefView {
    pub index: String,
    pub expr: String,
    pub formula: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LabelView {
    pub cell: CellPos,
    pub text: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct AttributeView {
    pub name: String,
    pub signature: String,
    pub domain: DomainView,
    pub cells: Vec<CellPos>,
    pub defs: Vec<DefView>,
    pub label: Option<LabelView>,
}

fn index_text(i: &IndexExpr) -> String {
    match i {
        IndexExpr::Const(j) => j.to_string(),
        IndexExpr::Enum(l) => l.clone(),
        IndexExpr::Param(k) => format!("t{k:+}"),
    }
}

fn attribute(a: &Attribute) -> AttributeView {
    let style = PrintStyle {
        spaced: true,
        param: "t",
    };
    AttributeView {
        name: a.name.clone(),
        signature: a.signature(),
        domain: match &a.domain {
            IndexDomain::Range(n) => DomainView::Range { size: *n },
            IndexDomain::Enum(labels) => DomainView::Labels { labels: labels.clone() },
        },
        cells: a.layout.iter().map(CellPos::from).collect(),
        defs: a
            .defs
            .iter()
            .enumerate()
            .map(|(i, d)| DefView {
                index: index_text(&a.domain.index(i)),
                expr: print_expr(&d.expr, &style),
                formula: d.is_formula,
            })
            .collect(),
        label: a.label_meta.as_ref().map(|(at, text)| LabelView {
            cell: at.into(),
            text: text.clone(),
        }),
    }
}

pub fn attributes(m: &Model) -> Vec<AttributeView> {
    m.attributes().iter().map(attribute).collect()
}
