//! Reference spreadsheets and grammars used by tests, examples and the CLI demo.

use alloc::format;
use alloc::string::String;

use crate::address::Address;
use crate::workbook::{CellContent, Formula, Workbook};
use crate::Number;

pub const SHEET: &str = "Sheet1";

/// Rule describing a labelled column of any length.
pub const COLUMN_GRAMMAR: &str = "column --> label (DOWN cell)*\n";

/// Rule describing a labelled column of exactly three cells.
pub const COLUMN3_GRAMMAR: &str = "column --> label (DOWN cell)*3\n";

/// Block-structured description of the rental spreadsheet.
pub const BLOCK_GRAMMAR: &str = "\
spreadsheet --> (block ALONG(12))*3
block       --> label DOWN
              (mortgage ALONG(2) other_costs) DOWN
              rent DOWN profit
mortgage    --> cell
other_costs --> cell
rent        --> cell
profit      --> cell
";

/// Attribute-centric description of the same layout: each attribute is a
/// run of cells read off from the shared origin, superimposed with `AND`.
///
/// Offsets are those the block grammar produces: a block's cursor finishes
/// on its profit cell, two columns right and three rows down of its label,
/// so consecutive blocks are 14 columns and 3 rows apart.
pub const ATTRIBUTE_GRAMMAR: &str = "\
spreadsheet       --> mortgage_parts AND other_costs_parts AND
                      rent_parts AND profit_parts
mortgage_parts    --> DOWN               (cell ALONG(14) DOWN(3)) *3
other_costs_parts --> DOWN ALONG(2)      (cell ALONG(14) DOWN(3)) *3
rent_parts        --> DOWN(2) ALONG(2)   (cell ALONG(14) DOWN(3)) *3
profit_parts      --> DOWN(3) ALONG(2)   (cell ALONG(14) DOWN(3)) *3
";

fn at(col: u32, row: u32) -> Address {
    Address::new(SHEET, col, row)
}

fn num(v: f64) -> CellContent {
    CellContent::Number(Number::new(v).expect("finite"))
}

fn formula(source: &str, host: &Address) -> CellContent {
    CellContent::Formula(Formula::parse(source, host).expect("fixture formula parses"))
}

/// Income / Outgoings / Profit: labels in row 1, inputs in A2:B4 and
/// `=An-Bn` in C2:C4.
pub fn income() -> Workbook {
    let mut wb = Workbook::new();
    for (col, label) in [(1, "Income"), (2, "Outgoings"), (3, "Profit")] {
        wb.set(at(col, 1), CellContent::Text(label.into()));
    }
    let inputs = [(1200.0, 700.0), (1350.0, 720.5), (990.0, 1010.0)];
    for (i, (income, outgoings)) in inputs.into_iter().enumerate() {
        let row = i as u32 + 2;
        wb.set(at(1, row), num(income));
        wb.set(at(2, row), num(outgoings));
        let host = at(3, row);
        wb.set(host.clone(), formula(&format!("=A{row}-B{row}"), &host));
    }
    wb
}

/// Anchor (label cell) of each rental block: the block grammar moves twelve
/// columns along from where the previous block's cursor stopped.
pub fn property_anchors() -> [Address; 3] {
    [at(1, 1), at(15, 4), at(29, 7)]
}

/// Three rental blocks laid out as the block grammar reads them: label at
/// the anchor, mortgage one row down, other costs two columns right of the
/// mortgage, rent and profit stacked beneath other costs.
pub fn property() -> Workbook {
    let mut wb = Workbook::new();
    let figures = [(650.0, 120.0, 950.0), (540.0, 95.5, 800.0), (720.0, 130.0, 1100.0)];
    for (k, anchor) in property_anchors().into_iter().enumerate() {
        let (c, r) = (anchor.col, anchor.row);
        let (mortgage, other, rent) = figures[k];
        wb.set(anchor.clone(), CellContent::Text(format!("Property {}", k + 1)));
        let m = at(c, r + 1);
        let o = at(c + 2, r + 1);
        let rent_at = at(c + 2, r + 2);
        let p = at(c + 2, r + 3);
        wb.set(m.clone(), num(mortgage));
        wb.set(o.clone(), num(other));
        wb.set(rent_at.clone(), num(rent));
        let src = format!("={}-({}+{})", rent_at.a1(), o.a1(), m.a1());
        wb.set(p.clone(), formula(&src, &p));
    }
    wb
}

/// The twelve attribute cells of [`property`], grouped by role.
pub fn property_attribute_cells() -> [(&'static str, [Address; 3]); 4] {
    let [a, b, c] = property_anchors();
    let pick = |dc: u32, dr: u32| -> [Address; 3] { [&a, &b, &c].map(|x| at(x.col + dc, x.row + dr)) };
    [
        ("mortgage", pick(0, 1)),
        ("other_costs", pick(2, 1)),
        ("rent", pick(2, 2)),
        ("profit", pick(2, 3)),
    ]
}

/// The grouped listing expected for [`income`].
pub fn income_grouped_listing() -> String {
    String::from("<Income[1..3] Outgoings[1..3] Profit[1..3]>\nwhere\nProfit[all t] = Income[t] - Outgoings[t]\n")
}
