#![allow(dead_code)]

pub mod graph;
pub mod matcher;
pub mod steps;

use proptest::prelude::*;
use sheetgram_core::address::col_to_letters;
use sheetgram_core::grammar::{Count, Pattern};
use sheetgram_core::{Address, CellContent, Formula, Number, Workbook};

pub const SHEET: &str = "Sheet1";

pub fn at(col: u32, row: u32) -> Address {
    Address::new(SHEET, col, row)
}

pub fn formula(src: &str, host: &Address) -> CellContent {
    CellContent::Formula(Formula::parse(src, host).unwrap_or_else(|e| panic!("{src} at {host}: {e}")))
}

pub fn num(v: f64) -> CellContent {
    CellContent::Number(Number::new(v).unwrap())
}

/// A1 reference text inside a `cols` by `rows` grid, with random `$` markers.
pub fn ref_text(cols: u32, rows: u32) -> impl Strategy<Value = String> {
    (1..=cols, 1..=rows, any::<bool>(), any::<bool>()).prop_map(|(c, r, ca, ra)| {
        format!(
            "{}{}{}{}",
            if ca { "$" } else { "" },
            col_to_letters(c),
            if ra { "$" } else { "" },
            r
        )
    })
}

/// Formula body text (no leading `=`) over references inside the grid.
pub fn expr_text(cols: u32, rows: u32) -> BoxedStrategy<String> {
    let leaf = prop_oneof![
        4 => ref_text(cols, rows),
        2 => (0u32..1000).prop_map(|n| n.to_string()),
        1 => Just("2.5".to_string()),
        1 => Just("\"x\"".to_string()),
        1 => (ref_text(cols, rows), ref_text(cols, rows)).prop_map(|(a, b)| format!("SUM({a}:{b})")),
    ];
    leaf.prop_recursive(3, 12, 2, |inner| {
        let op = prop::sample::select(vec!["+", "-", "*", "/", "^", "<", "=", "<>"]);
        prop_oneof![
            4 => (inner.clone(), op, inner.clone()).prop_map(|(l, o, r)| format!("({l}{o}{r})")),
            1 => inner.clone().prop_map(|e| format!("-({e})")),
            1 => (inner.clone(), inner).prop_map(|(a, b)| format!("max({a},{b})")),
        ]
    })
    .boxed()
}

#[derive(Debug, Clone)]
pub enum CellSpec {
    Num(u32),
    Text(u8),
    Formula(String),
}

fn cell_spec(cols: u32, rows: u32) -> impl Strategy<Value = Option<CellSpec>> {
    prop_oneof![
        3 => Just(None),
        2 => (0u32..5000).prop_map(|n| Some(CellSpec::Num(n))),
        1 => (0u8..6).prop_map(|t| Some(CellSpec::Text(t))),
        2 => expr_text(cols, rows).prop_map(|e| Some(CellSpec::Formula(format!("={e}")))),
    ]
}

pub fn build(sheet: &str, cols: u32, specs: &[Option<CellSpec>]) -> Workbook {
    let mut wb = Workbook::new();
    for (i, spec) in specs.iter().enumerate() {
        let Some(spec) = spec else { continue };
        let host = Address::new(sheet, i as u32 % cols + 1, i as u32 / cols + 1);
        let content = match spec {
            CellSpec::Num(n) => num(f64::from(*n) / 4.0),
            CellSpec::Text(t) => CellContent::Text(format!("t{t}")),
            CellSpec::Formula(src) => formula(src, &host),
        };
        wb.set(host, content);
    }
    wb
}

/// A random one-sheet workbook of at most `max` by `max` cells.
pub fn workbook(max: u32) -> impl Strategy<Value = Workbook> {
    (1..=max, 1..=max).prop_flat_map(|(cols, rows)| {
        prop::collection::vec(cell_spec(cols, rows), (cols * rows) as usize)
            .prop_map(move |specs| build(SHEET, cols, &specs))
    })
}

/// Formula text for `host` following one of a few relative shapes, so
/// copies are common. Falls back to absolute references near the edges.
pub fn shaped_formula(shape: u8, host: &Address) -> String {
    let rel = |dc: i64, dr: i64| host.offset(dc, dr).map(|a| a.a1());
    match shape % 5 {
        0 => match (rel(-1, 0), rel(0, -1)) {
            (Some(a), Some(b)) => format!("={a}-{b}"),
            _ => "=$A$1-1".into(),
        },
        1 => match (rel(-1, -1), rel(-1, 0)) {
            (Some(a), Some(b)) => format!("=SUM({a}:{b})"),
            _ => "=SUM($A$1:$A$2)".into(),
        },
        2 => match rel(0, -1) {
            Some(a) => format!("={a}*2"),
            None => "=2".into(),
        },
        3 => match rel(-1, 0) {
            Some(a) => format!("=$A$1+{a}"),
            None => "=$A$1".into(),
        },
        _ => match rel(1, 1) {
            Some(a) => format!("={a}"),
            None => "=1".into(),
        },
    }
}

/// Random workbooks of at most `max` by `max` whose formulas come from
/// [`shaped_formula`], including references that form cycles.
pub fn shaped_workbook(max: u32) -> impl Strategy<Value = Workbook> {
    (1..=max, 1..=max).prop_flat_map(|(cols, rows)| {
        prop::collection::vec(
            prop_oneof![2 => Just(None), 1 => Just(Some(255u8)), 1 => Just(Some(254u8)), 4 => (0u8..5).prop_map(Some)],
            (cols * rows) as usize,
        )
        .prop_map(move |kinds| {
            let mut wb = Workbook::new();
            for (i, k) in kinds.into_iter().enumerate() {
                let Some(k) = k else { continue };
                let host = at(i as u32 % cols + 1, i as u32 / cols + 1);
                let content = match k {
                    255 => num(i as f64),
                    254 => CellContent::Text(format!("h{i}")),
                    shape => formula(&shaped_formula(shape, &host), &host),
                };
                wb.set(host, content);
            }
            wb
        })
    })
}

/// Grammar bodies of nesting depth at most 3 over the built-in predicates.
pub fn pattern() -> impl Strategy<Value = Pattern> {
    let leaf = prop_oneof![
        3 => prop::sample::select(vec!["label", "cell", "empty", "number", "text"]).prop_map(Pattern::terminal),
        2 => (any::<bool>(), 1u32..=2).prop_map(|(down, n)| if down { Pattern::down(n) } else { Pattern::along(n) }),
    ];
    leaf.prop_recursive(3, 12, 3, |inner| {
        prop_oneof![
            2 => prop::collection::vec(inner.clone(), 2..=3).prop_map(Pattern::Seq),
            1 => prop::collection::vec(inner.clone(), 2..=3).prop_map(Pattern::Alt),
            1 => inner.clone().prop_map(Pattern::opt),
            1 => (inner.clone(), 1u32..=3).prop_map(|(p, n)| Pattern::repeat(p, Count::Exact(n))),
            1 => inner.clone().prop_map(|p| Pattern::repeat(p, Count::Star)),
            1 => (inner.clone(), inner).prop_map(|(l, r)| Pattern::and(l, r)),
        ]
    })
}
