//! Fact files and CSV grids.
//!
//! A fact file holds one cell per line as five tab-separated fields:
//! `sheet  col-letters  row  kind  payload`, with kind one of `num`, `str`
//! or `formula`. Text payloads escape tab, newline, carriage return and
//! backslash. Blank lines and lines starting with `#` are skipped.

use std::fmt::Write as _;

use sheetgram_core::address::{col_to_letters, letters_to_col};
use sheetgram_core::formula::FormulaError;
use sheetgram_core::{Address, CellContent, Formula, Number, Workbook};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LoadError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: duplicate cell {at}")]
    Duplicate { line: usize, at: Address },
    #[error("{at}: {source}")]
    Formula {
        at: Address,
        /// Line in a fact file or CSV record number.
        line: usize,
        source: FormulaError,
    },
    #[error("csv: {0}")]
    Csv(String),
}

impl LoadError {
    pub fn line(&self) -> Option<usize> {
        match self {
            LoadError::Malformed { line, .. } | LoadError::Duplicate { line, .. } | LoadError::Formula { line, .. } => {
                Some(*line)
            }
            LoadError::Csv(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WriteError {
    #[error("sheet name {0:?} cannot be written to a fact file")]
    BadSheetName(String),
    #[error("{0}: formula source spans several lines")]
    MultilineFormula(Address),
}

fn unescape(text: &str, line: usize) -> Result<String, LoadError> {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some('\\') => out.push('\\'),
            other => {
                return Err(LoadError::Malformed {
                    line,
                    message: match other {
                        Some(c) => format!("unknown escape `\\{c}`"),
                        None => "trailing backslash".into(),
                    },
                })
            }
        }
    }
    Ok(out)
}

fn escape(text: &str, out: &mut String) {
    for c in text.chars() {
        match c {
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\\' => out.push_str("\\\\"),
            c => out.push(c),
        }
    }
}

fn parse_line(raw: &str, line: usize) -> Result<(Address, CellContent), LoadError> {
    let bad = |message: String| LoadError::Malformed { line, message };
    let fields: Vec<&str> = raw.splitn(5, '\t').collect();
    let [sheet, col, row, kind, payload] = fields[..] else {
        return Err(bad(format!("expected 5 tab-separated fields, found {}", fields.len())));
    };
    if sheet.is_empty() {
        return Err(bad("empty sheet name".into()));
    }
    let col = letters_to_col(col).map_err(|e| bad(e.to_string()))?;
    let row: u32 = row
        .parse()
        .ok()
        .filter(|r| *r >= 1)
        .ok_or_else(|| bad(format!("invalid row `{row}`")))?;
    let at = Address::new(sheet, col, row);
    let content = match kind {
        "num" => CellContent::Number(
            Number::parse_decimal(payload).ok_or_else(|| bad(format!("invalid number `{payload}`")))?,
        ),
        "str" => CellContent::Text(unescape(payload, line)?),
        "formula" => CellContent::Formula(Formula::parse(payload, &at).map_err(|source| LoadError::Formula {
            at: at.clone(),
            line,
            source,
        })?),
        other => return Err(bad(format!("unknown kind `{other}` (expected num, str or formula)"))),
    };
    Ok((at, content))
}

/// Parse a fact file.
pub fn load_facts(text: &str) -> Result<Workbook, LoadError> {
    let mut wb = Workbook::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() || raw.starts_with('#') {
            continue;
        }
        let (at, content) = parse_line(raw, line)?;
        wb.insert(at, content)
            .map_err(|d| LoadError::Duplicate { line, at: d.0 })?;
    }
    Ok(wb)
}

/// Render a workbook as a fact file, ordered by sheet, row, then column.
/// Formula sources are written as they were loaded.
pub fn write_facts(wb: &Workbook) -> Result<String, WriteError> {
    let mut out = String::new();
    for (at, content) in wb.iter() {
        if at.sheet.is_empty() || at.sheet.contains(['\t', '\n', '\r']) || at.sheet.starts_with('#') {
            return Err(WriteError::BadSheetName(at.sheet.clone()));
        }
        let _ = write!(out, "{}\t{}\t{}\t", at.sheet, col_to_letters(at.col), at.row);
        match content {
            CellContent::Number(n) => {
                let _ = write!(out, "num\t{n}");
            }
            CellContent::Text(t) => {
                out.push_str("str\t");
                escape(t, &mut out);
            }
            CellContent::Formula(f) => {
                if f.source().contains(['\n', '\r']) {
                    return Err(WriteError::MultilineFormula(at.clone()));
                }
                out.push_str("formula\t");
                out.push_str(f.source());
            }
        }
        out.push('\n');
    }
    Ok(out)
}

/// Parse a CSV grid into one sheet. Row `i`, field `j` lands at column `j`,
/// row `i`. Fields starting with `=` are formulas, decimal literals are
/// numbers, empty fields are skipped and anything else is text.
pub fn load_csv_grid(text: &str, sheet: &str) -> Result<Workbook, LoadError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut wb = Workbook::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| LoadError::Csv(e.to_string()))?;
        let row = u32::try_from(i + 1).map_err(|_| LoadError::Csv("too many rows".into()))?;
        for (j, field) in record.iter().enumerate() {
            if field.is_empty() {
                continue;
            }
            let col = u32::try_from(j + 1).map_err(|_| LoadError::Csv("too many columns".into()))?;
            let at = Address::new(sheet, col, row);
            let content = if field.starts_with('=') {
                CellContent::Formula(Formula::parse(field, &at).map_err(|source| LoadError::Formula {
                    at: at.clone(),
                    line: i + 1,
                    source,
                })?)
            } else if let Some(n) = Number::parse_decimal(field) {
                CellContent::Number(n)
            } else {
                CellContent::Text(field.to_string())
            };
            wb.set(at, content);
        }
    }
    Ok(wb)
}
