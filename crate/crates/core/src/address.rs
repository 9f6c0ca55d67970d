//! Cell addresses and A1-style column lettering.

use alloc::string::{String, ToString};
use core::cmp::Ordering;
use core::fmt;

/// A cell position: worksheet name plus 1-based column and row.
///
/// Addresses order by `(sheet, row, col)`, which is reading order within a
/// sheet. Every ordered set handed out by this crate uses that order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Address {
    pub sheet: String,
    pub col: u32,
    pub row: u32,
}

impl Address {
    /// Panics if `col` or `row` is zero.
    pub fn new(sheet: impl Into<String>, col: u32, row: u32) -> Self {
        assert!(col >= 1 && row >= 1, "addresses are 1-based");
        Address {
            sheet: sheet.into(),
            col,
            row,
        }
    }

    /// `C2`-style text without the sheet.
    pub fn a1(&self) -> String {
        let mut s = col_to_letters(self.col);
        s.push_str(&self.row.to_string());
        s
    }

    /// Shift by a signed offset; `None` when the result leaves the positive quadrant.
    pub fn offset(&self, d_col: i64, d_row: i64) -> Option<Address> {
        let col = i64::from(self.col).checked_add(d_col)?;
        let row = i64::from(self.row).checked_add(d_row)?;
        if col < 1 || row < 1 || col > i64::from(u32::MAX) || row > i64::from(u32::MAX) {
            return None;
        }
        Some(Address {
            sheet: self.sheet.clone(),
            col: col as u32,
            row: row as u32,
        })
    }

    /// Column-major key `(sheet, col, row)`.
    pub fn column_major_cmp(&self, other: &Address) -> Ordering {
        (self.sheet.as_str(), self.col, self.row).cmp(&(other.sheet.as_str(), other.col, other.row))
    }
}

impl Ord for Address {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.sheet.as_str(), self.row, self.col).cmp(&(other.sheet.as_str(), other.row, other.col))
    }
}

impl PartialOrd for Address {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}!{}", self.sheet, self.a1())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AddressError {
    ZeroColumn,
    NotLetters(String),
    ColumnOverflow(String),
    Malformed { text: String, position: usize },
}

impl fmt::Display for AddressError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AddressError::ZeroColumn => f.write_str("column numbers start at 1"),
            AddressError::NotLetters(s) => write!(f, "`{s}` is not a column name (expected A-Z letters)"),
            AddressError::ColumnOverflow(s) => write!(f, "column `{s}` is out of range"),
            AddressError::Malformed { text, position } => {
                write!(f, "malformed cell reference `{text}` at position {position}")
            }
        }
    }
}

impl core::error::Error for AddressError {}

/// Bijective base-26 column name: 1 → `A`, 26 → `Z`, 27 → `AA`.
pub fn col_to_letters(col: u32) -> String {
    let mut n = col;
    let mut buf = [0u8; 8];
    let mut i = buf.len();
    while n > 0 {
        let rem = (n - 1) % 26;
        i -= 1;
        buf[i] = b'A' + rem as u8;
        n = (n - 1) / 26;
    }
    // ASCII only.
    String::from_utf8_lossy(&buf[i..]).into_owned()
}

/// Checked variant of [`col_to_letters`].
pub fn try_col_to_letters(col: i64) -> Result<String, AddressError> {
    if col < 1 || col > i64::from(u32::MAX) {
        return Err(AddressError::ZeroColumn);
    }
    Ok(col_to_letters(col as u32))
}

/// Inverse of [`col_to_letters`]. Accepts uppercase letters only.
pub fn letters_to_col(text: &str) -> Result<u32, AddressError> {
    if text.is_empty() || !text.bytes().all(|b| b.is_ascii_uppercase()) {
        return Err(AddressError::NotLetters(text.to_string()));
    }
    let mut n: u32 = 0;
    for b in text.bytes() {
        n = n
            .checked_mul(26)
            .and_then(|n| n.checked_add(u32::from(b - b'A') + 1))
            .ok_or_else(|| AddressError::ColumnOverflow(text.to_string()))?;
    }
    Ok(n)
}

/// Parse `A1`, `$C$2`, `Sheet2!AA10` into an address.
///
/// `$` markers are accepted and dropped; lowercase letters are not.
pub fn parse_address(text: &str, default_sheet: &str) -> Result<Address, AddressError> {
    let malformed = |position: usize| AddressError::Malformed {
        text: text.to_string(),
        position,
    };
    let (sheet, body, base) = match text.rfind('!') {
        Some(i) => {
            let raw = &text[..i];
            let sheet = if raw.len() >= 2 && raw.starts_with('\'') && raw.ends_with('\'') {
                raw[1..raw.len() - 1].replace("''", "'")
            } else {
                raw.to_string()
            };
            if sheet.is_empty() {
                return Err(malformed(0));
            }
            (sheet, &text[i + 1..], i + 1)
        }
        None => (default_sheet.to_string(), text, 0),
    };
    let bytes = body.as_bytes();
    let mut i = 0;
    if bytes.get(i) == Some(&b'$') {
        i += 1;
    }
    let letters_start = i;
    while i < bytes.len() && bytes[i].is_ascii_uppercase() {
        i += 1;
    }
    if i == letters_start {
        return Err(malformed(base + i));
    }
    let letters = &body[letters_start..i];
    if bytes.get(i) == Some(&b'$') {
        i += 1;
    }
    let digits_start = i;
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    if i == digits_start || i != bytes.len() {
        return Err(malformed(base + i));
    }
    let col = letters_to_col(letters)?;
    let row: u32 = body[digits_start..]
        .parse()
        .map_err(|_| malformed(base + digits_start))?;
    if row == 0 {
        return Err(malformed(base + digits_start));
    }
    Ok(Address { sheet, col, row })
}
