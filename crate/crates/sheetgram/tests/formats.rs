use proptest::prelude::*;
use sheetgram::core::{fixtures, Address, CellContent, Formula, Number, Workbook};
use sheetgram::io::{load_csv_grid, load_facts, write_facts};

const INCOME: &str = include_str!("data/income.facts");
const INCOME_CSV: &str = include_str!("data/income.csv");

fn without_comments(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect()
}

#[test]
fn data_files_hold_the_income_fixture() {
    assert_eq!(load_facts(INCOME).unwrap(), fixtures::income());
    assert_eq!(write_facts(&fixtures::income()).unwrap(), without_comments(INCOME));
    assert_eq!(load_csv_grid(INCOME_CSV, "Sheet1").unwrap(), fixtures::income());
}

#[test]
fn csv_then_facts_then_load() {
    let wb = load_csv_grid(INCOME_CSV, "Sheet1").unwrap();
    let text = write_facts(&wb).unwrap();
    assert_eq!(load_facts(&text).unwrap(), wb);
    let quoted = "\"a,b\",\"line\nbreak\",\\x\n,2,\"=A1=\"\"!\"\"\"\n";
    let wb = load_csv_grid(quoted, "Q").unwrap();
    assert_eq!(
        wb.cell_at(&Address::new("Q", 2, 1)),
        Some(&CellContent::Text("line\nbreak".into()))
    );
    assert_eq!(load_facts(&write_facts(&wb).unwrap()).unwrap(), wb);
}

#[test]
fn property_fixture_round_trips() {
    let text = write_facts(&fixtures::property()).unwrap();
    let back = load_facts(&text).unwrap();
    assert_eq!(back, fixtures::property());
    assert_eq!(write_facts(&back).unwrap(), text);
}

const FORMULAS: &[&str] = &[
    "=A1+1",
    "= A1 * 2",
    "=SUM($A$1:B3)",
    "=max(A1, 3.5)",
    "=Other!B2-1",
    "='My Sheet'!$C4",
    "=\"quoted\ttab\"",
    "=-(A2^2)<>B1",
];

fn content() -> impl Strategy<Value = CellContent> {
    prop_oneof![
        any::<f64>()
            .prop_filter_map("finite", Number::new)
            .prop_map(CellContent::Number),
        (-1_000_000i64..1_000_000, 0u32..4)
            .prop_map(|(n, d)| { CellContent::Number(Number::new(n as f64 / 10f64.powi(d as i32)).unwrap()) }),
        ".*".prop_map(CellContent::Text),
        "[\\\\\t\r\n #a=]{0,6}".prop_map(CellContent::Text),
        prop::sample::select(FORMULAS)
            .prop_map(|s| s.to_string())
            .prop_map(CellContent::Text),
    ]
}

fn facts_workbook() -> impl Strategy<Value = Workbook> {
    let sheet = prop::sample::select(vec!["Sheet1", "Other", "My Sheet", "Ünïcode", "x#"]);
    let cell = (
        sheet,
        1u32..40,
        1u32..40,
        content(),
        prop::option::of(prop::sample::select(FORMULAS)),
    );
    prop::collection::vec(cell, 0..30).prop_map(|cells| {
        let mut wb = Workbook::new();
        for (sheet, col, row, c, formula) in cells {
            let at = Address::new(sheet, col, row);
            let c = match formula {
                Some(src) if row % 3 == 0 => CellContent::Formula(Formula::parse(src, &at).unwrap()),
                _ => c,
            };
            wb.set(at, c);
        }
        wb
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn facts_export_is_a_fixed_point(wb in facts_workbook()) {
        let text = write_facts(&wb).unwrap();
        let back = load_facts(&text).unwrap();
        prop_assert_eq!(&back, &wb);
        prop_assert_eq!(write_facts(&back).unwrap(), text);
    }

    #[test]
    fn loading_never_panics(text in "([A-Za-z1-9#\\\\=+ ]{0,8}\t?){0,6}(\n[A-Za-z1-9\t\\\\]{0,10}){0,4}") {
        if let Ok(wb) = load_facts(&text) {
            let out = write_facts(&wb).unwrap();
            prop_assert_eq!(load_facts(&out).unwrap(), wb);
        }
    }
}
