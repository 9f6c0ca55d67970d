//! Dependency graph laws checked against the formulas themselves.

use std::collections::{BTreeSet, VecDeque};

use proptest::prelude::*;
use sheetgram_core::factbase::FactBase;
use sheetgram_core::formula::refs_of;
use sheetgram_core::{Address, CellContent, Workbook};

use super::{at, formula};

/// Two-cell loop, a self reference and two cells depending on the loop.
pub fn cycles() -> Workbook {
    let mut wb = Workbook::new();
    for (col, src) in [(1, "=B1"), (2, "=A1"), (3, "=C1"), (4, "=A1+1"), (5, "=D1*2")] {
        let host = at(col, 1);
        wb.set(host.clone(), formula(src, &host));
    }
    wb
}

/// Every address that appears anywhere in the graph.
pub fn universe(fb: &FactBase) -> BTreeSet<Address> {
    let mut all: BTreeSet<Address> = fb.workbook().iter().map(|(a, _)| a.clone()).collect();
    for (_, c) in fb.workbook().iter() {
        if let CellContent::Formula(f) = c {
            all.extend(refs_of(f.ast()));
        }
    }
    all
}

pub fn check_graph(fb: &FactBase) -> Result<(), TestCaseError> {
    let all = universe(fb);
    for c in &all {
        let expected: BTreeSet<Address> = match fb.workbook().cell_at(c) {
            Some(CellContent::Formula(f)) => refs_of(f.ast()).into_iter().collect(),
            _ => BTreeSet::new(),
        };
        prop_assert_eq!(fb.depends_on(c), &expected, "precedents of {}", c);
        for d in &all {
            prop_assert_eq!(
                fb.depends_on(c).contains(d),
                fb.dependents(d).contains(c),
                "{} / {}",
                c,
                d
            );
        }
        let is_label = matches!(fb.workbook().cell_at(c), Some(CellContent::Text(_))) && fb.dependents(c).is_empty();
        prop_assert_eq!(fb.is_label(c), is_label, "label {}", c);
        if fb.is_label(c) {
            prop_assert!(all.iter().all(|f| !fb.depends_on(f).contains(c)));
        }
        prop_assert_eq!(fb.depends_on_transitive(c), bfs(fb, c), "closure of {}", c);
    }
    Ok(())
}

pub fn bfs(fb: &FactBase, start: &Address) -> BTreeSet<Address> {
    let mut seen = BTreeSet::new();
    let mut queue: VecDeque<Address> = fb.depends_on(start).iter().cloned().collect();
    while let Some(next) = queue.pop_front() {
        if seen.insert(next.clone()) {
            queue.extend(fb.depends_on(&next).iter().cloned());
        }
    }
    seen
}

/// `copy_of` is an equivalence on formula cells, and `column_all_copies`
/// agrees with pairwise checks on every span of the first 8 by 8 cells.
pub fn check_copy_laws(fb: &FactBase) -> Result<(), TestCaseError> {
    let cells: Vec<&Address> = fb.workbook().iter().map(|(a, _)| a).collect();
    let n = cells.len();
    let rel: Vec<Vec<bool>> = cells
        .iter()
        .map(|a| cells.iter().map(|b| fb.copy_of(a, b)).collect())
        .collect();
    for i in 0..n {
        let is_formula = matches!(fb.workbook().cell_at(cells[i]), Some(CellContent::Formula(_)));
        prop_assert_eq!(rel[i][i], is_formula);
        for j in 0..n {
            prop_assert_eq!(rel[i][j], rel[j][i]);
            if rel[i][j] {
                for k in 0..n {
                    prop_assert!(!rel[j][k] || rel[i][k], "{} {} {}", cells[i], cells[j], cells[k]);
                }
            }
        }
    }
    for col in 1..=8 {
        for from in 1..=8 {
            for to in from..=8 {
                let span: Vec<Address> = (from..=to).map(|r| at(col, r)).collect();
                let oracle = span.iter().all(|c| fb.copy_of(c, &span[0]));
                prop_assert_eq!(fb.column_all_copies("Sheet1", col, from, to), oracle);
            }
        }
    }
    Ok(())
}
