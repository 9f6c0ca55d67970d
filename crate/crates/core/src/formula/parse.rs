//! Recursive-descent parser for A1-dialect formulas.
//!
//! ```text
//! formula := '=' cmp
//! cmp     := add (('=' | '<' | '>' | '<=' | '>=' | '<>') add)*
//! add     := mul (('+' | '-') mul)*
//! mul     := unary (('*' | '/') unary)*
//! unary   := ('-' | '+') unary | pow
//! pow     := primary ('^' unary)?
//! primary := number | string | TRUE | FALSE | ref (':' ref)? | NAME '(' args ')' | '(' cmp ')'
//! ```

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{BinOp, CellRef, Expr, FormulaError, FormulaErrorKind, RefStyle};
use crate::address::{letters_to_col, Address};
use crate::number::Number;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(Number),
    Str(String),
    Ref(CellRef),
    Func(String),
    Bool(String),
    Op(&'static str),
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    host: &'a Address,
}

impl<'a> Lexer<'a> {
    fn err(&self, kind: FormulaErrorKind, position: usize) -> FormulaError {
        FormulaError { kind, position }
    }

    fn peek_char(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek_char() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    /// Next token and its start offset.
    fn next(&mut self) -> Result<(Tok, usize), FormulaError> {
        self.skip_ws();
        let start = self.pos;
        let Some(c) = self.peek_char() else {
            return Ok((Tok::End, start));
        };
        let rest = &self.src[start..];
        for op in ["<=", ">=", "<>"] {
            if rest.starts_with(op) {
                self.pos += 2;
                return Ok((Tok::Op(op), start));
            }
        }
        let single = match c {
            '+' => Some("+"),
            '-' => Some("-"),
            '*' => Some("*"),
            '/' => Some("/"),
            '^' => Some("^"),
            '=' => Some("="),
            '<' => Some("<"),
            '>' => Some(">"),
            '(' => Some("("),
            ')' => Some(")"),
            ',' => Some(","),
            ':' => Some(":"),
            _ => None,
        };
        if let Some(op) = single {
            self.pos += 1;
            return Ok((Tok::Op(op), start));
        }
        if c.is_ascii_digit() || c == '.' {
            return self.number(start).map(|t| (t, start));
        }
        if c == '"' {
            return self.string(start).map(|t| (t, start));
        }
        if c == '\'' {
            let sheet = self.quoted_sheet(start)?;
            return self.reference(Some(sheet), start).map(|t| (t, start));
        }
        if c.is_ascii_alphabetic() || c == '$' || c == '_' {
            return self.word(start).map(|t| (t, start));
        }
        Err(self.err(FormulaErrorKind::UnexpectedChar(c), start))
    }

    fn number(&mut self, start: usize) -> Result<Tok, FormulaError> {
        let b = self.src.as_bytes();
        let mut i = start;
        while i < b.len() && (b[i].is_ascii_digit() || b[i] == b'.') {
            i += 1;
        }
        if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
            let mut j = i + 1;
            if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
                j += 1;
            }
            if j < b.len() && b[j].is_ascii_digit() {
                while j < b.len() && b[j].is_ascii_digit() {
                    j += 1;
                }
                i = j;
            }
        }
        let text = &self.src[start..i];
        self.pos = i;
        Number::parse_decimal(text)
            .map(Tok::Num)
            .ok_or_else(|| self.err(FormulaErrorKind::BadNumber(text.to_string()), start))
    }

    fn string(&mut self, start: usize) -> Result<Tok, FormulaError> {
        let mut out = String::new();
        let mut chars = self.src[start + 1..].char_indices();
        while let Some((i, c)) = chars.next() {
            if c == '"' {
                if self.src[start + 1 + i + 1..].starts_with('"') {
                    out.push('"');
                    chars.next();
                } else {
                    self.pos = start + 1 + i + 1;
                    return Ok(Tok::Str(out));
                }
            } else {
                out.push(c);
            }
        }
        Err(self.err(FormulaErrorKind::UnterminatedString, start))
    }

    /// `'Sheet name'!` including the bang.
    fn quoted_sheet(&mut self, start: usize) -> Result<String, FormulaError> {
        let mut out = String::new();
        let mut chars = self.src[start + 1..].char_indices();
        while let Some((i, c)) = chars.next() {
            if c == '\'' {
                let after = start + 1 + i + 1;
                if self.src[after..].starts_with('\'') {
                    out.push('\'');
                    chars.next();
                } else if self.src[after..].starts_with('!') && !out.is_empty() {
                    self.pos = after + 1;
                    return Ok(out);
                } else {
                    return Err(self.err(
                        FormulaErrorKind::UnexpectedToken(self.src[start..after].to_string()),
                        start,
                    ));
                }
            } else {
                out.push(c);
            }
        }
        Err(self.err(FormulaErrorKind::UnterminatedString, start))
    }

    fn word(&mut self, start: usize) -> Result<Tok, FormulaError> {
        let b = self.src.as_bytes();
        let mut i = start;
        while i < b.len() && (b[i].is_ascii_alphanumeric() || matches!(b[i], b'_' | b'.' | b'$')) {
            i += 1;
        }
        let word = &self.src[start..i];
        match b.get(i) {
            Some(b'(') if !word.contains('$') => {
                self.pos = i + 1;
                Ok(Tok::Func(word.to_ascii_uppercase()))
            }
            Some(b'!') if !word.contains('$') => {
                self.pos = i + 1;
                self.reference(Some(word.to_string()), start)
            }
            _ => {
                if let Some(r) = split_ref(word) {
                    self.pos = i;
                    self.finish_ref(r, None, start)
                } else if word.eq_ignore_ascii_case("TRUE") || word.eq_ignore_ascii_case("FALSE") {
                    self.pos = i;
                    Ok(Tok::Bool(word.to_ascii_uppercase()))
                } else {
                    Err(self.err(FormulaErrorKind::UnknownName(word.to_string()), start))
                }
            }
        }
    }

    /// A reference following a sheet prefix.
    fn reference(&mut self, sheet: Option<String>, start: usize) -> Result<Tok, FormulaError> {
        let b = self.src.as_bytes();
        let ref_start = self.pos;
        let mut i = ref_start;
        while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'$') {
            i += 1;
        }
        let word = &self.src[ref_start..i];
        match split_ref(word) {
            Some(parts) => {
                self.pos = i;
                self.finish_ref(parts, sheet, start)
            }
            None => Err(self.err(FormulaErrorKind::BadReference(self.src[start..i].to_string()), start)),
        }
    }

    fn finish_ref(&self, parts: RefParts<'_>, sheet: Option<String>, start: usize) -> Result<Tok, FormulaError> {
        let bad = || {
            self.err(
                FormulaErrorKind::BadReference(self.src[start..self.pos].to_string()),
                start,
            )
        };
        let col = letters_to_col(&parts.letters.to_ascii_uppercase()).map_err(|_| bad())?;
        let row: u32 = parts.digits.parse().map_err(|_| bad())?;
        if row == 0 {
            return Err(bad());
        }
        let sheet_explicit = sheet.is_some();
        Ok(Tok::Ref(CellRef {
            target: Address {
                sheet: sheet.unwrap_or_else(|| self.host.sheet.clone()),
                col,
                row,
            },
            style: RefStyle {
                col_abs: parts.col_abs,
                row_abs: parts.row_abs,
                sheet_explicit,
            },
        }))
    }
}

struct RefParts<'a> {
    col_abs: bool,
    letters: &'a str,
    row_abs: bool,
    digits: &'a str,
}

/// Split `$AB$12` into its parts; `None` if the word is not shaped like a reference.
fn split_ref(word: &str) -> Option<RefParts<'_>> {
    let b = word.as_bytes();
    let mut i = 0;
    let col_abs = b.first() == Some(&b'$');
    if col_abs {
        i += 1;
    }
    let ls = i;
    while i < b.len() && b[i].is_ascii_alphabetic() {
        i += 1;
    }
    let letters = &word[ls..i];
    let row_abs = b.get(i) == Some(&b'$');
    if row_abs {
        i += 1;
    }
    let ds = i;
    while i < b.len() && b[i].is_ascii_digit() {
        i += 1;
    }
    let digits = &word[ds..i];
    (!letters.is_empty() && !digits.is_empty() && i == b.len()).then_some(RefParts {
        col_abs,
        letters,
        row_abs,
        digits,
    })
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    tok_pos: usize,
}

impl<'a> Parser<'a> {
    fn advance(&mut self) -> Result<(Tok, usize), FormulaError> {
        let (next, pos) = self.lexer.next()?;
        let prev = core::mem::replace(&mut self.tok, next);
        let prev_pos = core::mem::replace(&mut self.tok_pos, pos);
        Ok((prev, prev_pos))
    }

    fn unexpected(&self) -> FormulaError {
        let kind = match &self.tok {
            Tok::End => FormulaErrorKind::UnexpectedEnd,
            Tok::Op(op) => FormulaErrorKind::UnexpectedToken(op.to_string()),
            _ => {
                let end = self.lexer.pos;
                FormulaErrorKind::UnexpectedToken(self.lexer.src[self.tok_pos..end].trim().to_string())
            }
        };
        FormulaError {
            kind,
            position: self.tok_pos,
        }
    }

    fn expect_op(&mut self, op: &'static str) -> Result<(), FormulaError> {
        if self.tok == Tok::Op(op) {
            self.advance()?;
            Ok(())
        } else {
            Err(self.unexpected())
        }
    }

    fn no_range(e: Expr, position: usize) -> Result<Expr, FormulaError> {
        if matches!(e, Expr::Range(..)) {
            Err(FormulaError {
                kind: FormulaErrorKind::MisplacedRange,
                position,
            })
        } else {
            Ok(e)
        }
    }

    fn cmp(&mut self) -> Result<Expr, FormulaError> {
        let mut left = self.add()?;
        loop {
            let op = match self.tok {
                Tok::Op("=") => BinOp::Eq,
                Tok::Op("<") => BinOp::Lt,
                Tok::Op(">") => BinOp::Gt,
                Tok::Op("<=") => BinOp::Le,
                Tok::Op(">=") => BinOp::Ge,
                Tok::Op("<>") => BinOp::Ne,
                _ => return Ok(left),
            };
            self.advance()?;
            let right = self.add()?;
            left = Expr::Bin(op, Box::new(left), Box::new(right));
        }
    }

    fn add(&mut self) -> Result<Expr, FormulaError> {
        let start = self.tok_pos;
        let mut left = self.mul()?;
        loop {
            let op = match self.tok {
                Tok::Op("+") => BinOp::Add,
                Tok::Op("-") => BinOp::Sub,
                _ => return Ok(left),
            };
            left = Self::no_range(left, start)?;
            self.advance()?;
            let right_pos = self.tok_pos;
            let right = Self::no_range(self.mul()?, right_pos)?;
            left = Expr::Bin(op, Box::new(left), Box::new(right));
        }
    }

    fn mul(&mut self) -> Result<Expr, FormulaError> {
        let start = self.tok_pos;
        let mut left = self.unary()?;
        loop {
            let op = match self.tok {
                Tok::Op("*") => BinOp::Mul,
                Tok::Op("/") => BinOp::Div,
                _ => return Ok(left),
            };
            left = Self::no_range(left, start)?;
            self.advance()?;
            let right_pos = self.tok_pos;
            let right = Self::no_range(self.unary()?, right_pos)?;
            left = Expr::Bin(op, Box::new(left), Box::new(right));
        }
    }

    fn unary(&mut self) -> Result<Expr, FormulaError> {
        match self.tok {
            Tok::Op("-") => {
                self.advance()?;
                let pos = self.tok_pos;
                Ok(Expr::Neg(Box::new(Self::no_range(self.unary()?, pos)?)))
            }
            Tok::Op("+") => {
                self.advance()?;
                let pos = self.tok_pos;
                Self::no_range(self.unary()?, pos)
            }
            _ => self.pow(),
        }
    }

    fn pow(&mut self) -> Result<Expr, FormulaError> {
        let start = self.tok_pos;
        let base = self.primary()?;
        if self.tok != Tok::Op("^") {
            return Ok(base);
        }
        let base = Self::no_range(base, start)?;
        self.advance()?;
        let pos = self.tok_pos;
        let exponent = Self::no_range(self.unary()?, pos)?;
        Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exponent)))
    }

    fn primary(&mut self) -> Result<Expr, FormulaError> {
        let (tok, pos) = self.advance()?;
        match tok {
            Tok::Num(n) => Ok(Expr::Num(n)),
            Tok::Str(s) => Ok(Expr::Str(s)),
            Tok::Bool(b) => Ok(Expr::Call(b, Vec::new())),
            Tok::Ref(from) => {
                if self.tok != Tok::Op(":") {
                    return Ok(Expr::Ref(from));
                }
                self.advance()?;
                let (tok, to_pos) = self.advance()?;
                let Tok::Ref(to) = tok else {
                    self.tok_pos = to_pos;
                    return Err(FormulaError {
                        kind: FormulaErrorKind::BadReference(":".into()),
                        position: to_pos,
                    });
                };
                if to.style.sheet_explicit && to.target.sheet != from.target.sheet {
                    return Err(FormulaError {
                        kind: FormulaErrorKind::CrossSheetRange,
                        position: to_pos,
                    });
                }
                let to = CellRef {
                    target: Address {
                        sheet: from.target.sheet.clone(),
                        ..to.target
                    },
                    style: RefStyle {
                        sheet_explicit: false,
                        ..to.style
                    },
                };
                Ok(normalize_range(from, to))
            }
            Tok::Func(name) => {
                let mut args = Vec::new();
                if self.tok == Tok::Op(")") {
                    self.advance()?;
                    return Ok(Expr::Call(name, args));
                }
                loop {
                    args.push(self.cmp()?);
                    match self.tok {
                        Tok::Op(",") => {
                            self.advance()?;
                        }
                        Tok::Op(")") => {
                            self.advance()?;
                            return Ok(Expr::Call(name, args));
                        }
                        _ => return Err(self.unexpected()),
                    }
                }
            }
            Tok::Op("(") => {
                let inner = self.cmp()?;
                self.expect_op(")")?;
                Ok(inner)
            }
            other => {
                // Put the token back for error reporting.
                self.tok = other;
                self.tok_pos = pos;
                Err(self.unexpected())
            }
        }
    }
}

/// Order endpoints so `from` is the top-left corner; each axis keeps its `$`.
/// On a tie the relative axis comes first, so the result does not depend on
/// the order the endpoints were written in.
pub(crate) fn normalize_range(a: CellRef, b: CellRef) -> Expr {
    let (c0, c0_abs, c1, c1_abs) = if (a.target.col, a.style.col_abs) <= (b.target.col, b.style.col_abs) {
        (a.target.col, a.style.col_abs, b.target.col, b.style.col_abs)
    } else {
        (b.target.col, b.style.col_abs, a.target.col, a.style.col_abs)
    };
    let (r0, r0_abs, r1, r1_abs) = if (a.target.row, a.style.row_abs) <= (b.target.row, b.style.row_abs) {
        (a.target.row, a.style.row_abs, b.target.row, b.style.row_abs)
    } else {
        (b.target.row, b.style.row_abs, a.target.row, a.style.row_abs)
    };
    let sheet = a.target.sheet;
    Expr::Range(
        CellRef {
            target: Address {
                sheet: sheet.clone(),
                col: c0,
                row: r0,
            },
            style: RefStyle {
                col_abs: c0_abs,
                row_abs: r0_abs,
                sheet_explicit: a.style.sheet_explicit,
            },
        },
        CellRef {
            target: Address {
                sheet,
                col: c1,
                row: r1,
            },
            style: RefStyle {
                col_abs: c1_abs,
                row_abs: r1_abs,
                sheet_explicit: false,
            },
        },
    )
}

/// Parse a formula hosted at `host`. Unprefixed references resolve to the host's sheet.
pub fn parse_formula(source: &str, host: &Address) -> Result<Expr, FormulaError> {
    let leading = source.len() - source.trim_start().len();
    if !source[leading..].starts_with('=') {
        return Err(FormulaError {
            kind: FormulaErrorKind::MissingEquals,
            position: leading,
        });
    }
    let mut lexer = Lexer {
        src: source,
        pos: leading + 1,
        host,
    };
    let (tok, tok_pos) = lexer.next()?;
    let mut parser = Parser { lexer, tok, tok_pos };
    let start = parser.tok_pos;
    let e = parser.cmp()?;
    if parser.tok != Tok::End {
        return Err(parser.unexpected());
    }
    Parser::no_range(e, start)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::print_formula;
    use alloc::vec;

    fn host() -> Address {
        Address::new("Sheet1", 3, 2)
    }

    fn at(col: u32, row: u32) -> Address {
        Address::new("Sheet1", col, row)
    }

    fn p(src: &str) -> Expr {
        parse_formula(src, &host()).unwrap()
    }

    fn err(src: &str) -> FormulaError {
        parse_formula(src, &host()).unwrap_err()
    }

    #[test]
    fn difference_of_row_mates() {
        assert_eq!(
            p("=A2-B2"),
            Expr::bin(BinOp::Sub, Expr::cell(at(1, 2)), Expr::cell(at(2, 2)))
        );
        assert_eq!(p("=7"), Expr::num(7.0));
    }

    #[test]
    fn sum_of_range_times_two() {
        let range = Expr::Range(CellRef::relative(at(1, 1)), CellRef::relative(at(1, 3)));
        assert_eq!(
            p("=SUM(A1:A3)*2"),
            Expr::bin(BinOp::Mul, Expr::Call("SUM".into(), vec![range]), Expr::num(2.0))
        );
    }

    #[test]
    fn precedence_and_associativity() {
        // 1-2-3 = (1-2)-3
        assert_eq!(
            p("=1-2-3"),
            Expr::bin(
                BinOp::Sub,
                Expr::bin(BinOp::Sub, Expr::num(1.0), Expr::num(2.0)),
                Expr::num(3.0)
            )
        );
        // 2^3^2 = 2^(3^2)
        assert_eq!(
            p("=2^3^2"),
            Expr::bin(
                BinOp::Pow,
                Expr::num(2.0),
                Expr::bin(BinOp::Pow, Expr::num(3.0), Expr::num(2.0))
            )
        );
        // -2^2 = -(2^2)
        assert_eq!(
            p("=-2^2"),
            Expr::Neg(Box::new(Expr::bin(BinOp::Pow, Expr::num(2.0), Expr::num(2.0))))
        );
        // 1+2*3>4 = (1+(2*3))>4
        assert_eq!(
            p("=1+2*3>4"),
            Expr::bin(
                BinOp::Gt,
                Expr::bin(
                    BinOp::Add,
                    Expr::num(1.0),
                    Expr::bin(BinOp::Mul, Expr::num(2.0), Expr::num(3.0))
                ),
                Expr::num(4.0)
            )
        );
        assert_eq!(
            p("=A1<>B1"),
            Expr::bin(BinOp::Ne, Expr::cell(at(1, 1)), Expr::cell(at(2, 1)))
        );
    }

    #[test]
    fn references() {
        let e = p("=$A2+B$3+Other!C4+'My Sheet'!$D$5+aa10");
        let mut refs = vec![];
        e.visit(&mut |n| {
            if let Expr::Ref(r) = n {
                refs.push(r.clone())
            }
        });
        assert_eq!(refs.len(), 5);
        assert!(refs[0].style.col_abs && !refs[0].style.row_abs);
        assert!(!refs[1].style.col_abs && refs[1].style.row_abs);
        assert_eq!(refs[2].target, Address::new("Other", 3, 4));
        assert!(refs[2].style.sheet_explicit);
        assert_eq!(refs[3].target, Address::new("My Sheet", 4, 5));
        assert_eq!(refs[4].target, at(27, 10));
    }

    #[test]
    fn ranges_are_normalized_and_confined() {
        assert_eq!(p("=SUM(B3:A1)"), p("=SUM(A1:B3)"));
        assert!(matches!(p("=A1:A3=B1"), Expr::Bin(BinOp::Eq, ..)));
        assert_eq!(err("=A1:A3").kind, FormulaErrorKind::MisplacedRange);
        assert_eq!(err("=A1:A3+1").kind, FormulaErrorKind::MisplacedRange);
        assert_eq!(err("=1+A1:A3").kind, FormulaErrorKind::MisplacedRange);
        assert_eq!(err("=-A1:A3").kind, FormulaErrorKind::MisplacedRange);
        assert_eq!(err("=SUM(S1!A1:S2!A3)").kind, FormulaErrorKind::CrossSheetRange);
        // Sheet prefix on the first endpoint covers both.
        match p("=SUM(Other!A1:A3)") {
            Expr::Call(_, args) => match &args[0] {
                Expr::Range(a, b) => {
                    assert_eq!(a.target.sheet, "Other");
                    assert_eq!(b.target.sheet, "Other");
                }
                other => panic!("{other:?}"),
            },
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn function_names_are_uppercased() {
        assert_eq!(p("=sum(A1)"), Expr::Call("SUM".into(), vec![Expr::cell(at(1, 1))]));
        assert_eq!(p("=NOW()"), Expr::Call("NOW".into(), vec![]));
        assert_eq!(p("=true"), Expr::Call("TRUE".into(), vec![]));
    }

    #[test]
    fn strings() {
        assert_eq!(p("=\"say \"\"hi\"\"\""), Expr::Str("say \"hi\"".into()));
        assert_eq!(err("=\"open").kind, FormulaErrorKind::UnterminatedString);
    }

    #[test]
    fn errors_carry_positions() {
        assert_eq!(err("A1").kind, FormulaErrorKind::MissingEquals);
        let e = err("=A1 + # 2");
        assert_eq!(e.kind, FormulaErrorKind::UnexpectedChar('#'));
        assert_eq!(e.position, 6);
        assert_eq!(err("=A0").kind, FormulaErrorKind::BadReference("A0".into()));
        assert_eq!(err("=A1+").kind, FormulaErrorKind::UnexpectedEnd);
        assert_eq!(err("=(A1").kind, FormulaErrorKind::UnexpectedEnd);
        assert_eq!(err("=A1 B1").position, 4);
        assert_eq!(err("=FOO").kind, FormulaErrorKind::UnknownName("FOO".into()));
        assert_eq!(err("=SUM(1,)").position, 7);
    }

    #[test]
    fn print_then_parse_examples() {
        for src in [
            "=A2-B2",
            "=7",
            "=(A1+B1)*2",
            "=SUM(A1:A3)*2",
            "=-A1^2",
            "=(-A1)^2",
            "=2^-1",
            "=1-(2-3)",
            "=IF(A1>=0,\"pos\",\"neg\")",
            "=Other!$B$2/'My Sheet'!C3",
            "=A1:A2=B1:B2",
        ] {
            let e = p(src);
            let printed = print_formula(&e);
            assert_eq!(parse_formula(&printed, &host()).unwrap(), e, "{src} -> {printed}");
        }
    }
}
