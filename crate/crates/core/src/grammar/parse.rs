use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use super::{Count, Direction, Grammar, Pattern};
use crate::factbase::Builtin;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GrammarErrorKind {
    UnknownToken(String),
    UnexpectedToken(String),
    UnexpectedEnd,
    MissingArrow,
    BadRuleName(String),
    DuplicateRule(String),
    /// A move distance or repeat count below one.
    BadCount(i64),
    EmptyBody,
    ContinuationWithoutRule,
    ShadowsPredicate(String),
    /// Structural check failed; see [`super::Diagnostic`].
    Invalid(String),
}

/// Position is 1-based line and column of the offending text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrammarError {
    pub kind: GrammarErrorKind,
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for GrammarError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: ", self.line, self.col)?;
        match &self.kind {
            GrammarErrorKind::UnknownToken(t) => write!(f, "unknown token `{t}`"),
            GrammarErrorKind::UnexpectedToken(t) => write!(f, "unexpected `{t}`"),
            GrammarErrorKind::UnexpectedEnd => f.write_str("rule ends unexpectedly"),
            GrammarErrorKind::MissingArrow => f.write_str("expected `name --> body`"),
            GrammarErrorKind::BadRuleName(n) => write!(f, "`{n}` is not a valid rule name"),
            GrammarErrorKind::DuplicateRule(n) => write!(f, "rule `{n}` is defined twice"),
            GrammarErrorKind::BadCount(n) => write!(f, "count must be at least 1, got {n}"),
            GrammarErrorKind::EmptyBody => f.write_str("empty rule body"),
            GrammarErrorKind::ContinuationWithoutRule => f.write_str("continuation line before the first rule"),
            GrammarErrorKind::ShadowsPredicate(n) => write!(f, "rule `{n}` has the name of a built-in predicate"),
            GrammarErrorKind::Invalid(msg) => f.write_str(msg),
        }
    }
}

impl core::error::Error for GrammarError {}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Move(Direction, u32),
    And,
    Bar,
    Question,
    Star(Option<u32>),
    LParen,
    RParen,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(n) => f.write_str(n),
            Tok::Move(d, n) => {
                let p = Pattern::Move(*d, *n);
                write!(f, "{p}")
            }
            Tok::And => f.write_str("AND"),
            Tok::Bar => f.write_str("|"),
            Tok::Question => f.write_str("?"),
            Tok::Star(None) => f.write_str("*"),
            Tok::Star(Some(n)) => write!(f, "*{n}"),
            Tok::LParen => f.write_str("("),
            Tok::RParen => f.write_str(")"),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn err(kind: GrammarErrorKind, line: usize, col: usize) -> GrammarError {
    GrammarError { kind, line, col }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_lowercase() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_'
}

/// Tokenize one physical line. `col0` is the 1-based column of `text[0]`.
fn lex_line(text: &str, line: usize, col0: usize, out: &mut Vec<Spanned>) -> Result<(), GrammarError> {
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = col0 + i;
        let single = match c {
            ' ' | '\t' | '\r' => {
                i += 1;
                continue;
            }
            '|' => Some(Tok::Bar),
            '?' => Some(Tok::Question),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(tok) = single {
            out.push(Spanned { tok, line, col });
            i += 1;
            continue;
        }
        if c == '*' {
            let start = i + 1;
            let mut j = start;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            let count = if j > start {
                let n = digits_value(&chars[start..j]);
                if n < 1 {
                    return Err(err(GrammarErrorKind::BadCount(n), line, col));
                }
                Some(n as u32)
            } else {
                None
            };
            out.push(Spanned {
                tok: Tok::Star(count),
                line,
                col,
            });
            i = j;
            continue;
        }
        let start = i;
        while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
            i += 1;
        }
        if i == start {
            return Err(err(GrammarErrorKind::UnknownToken(c.to_string()), line, col));
        }
        let word: String = chars[start..i].iter().collect();
        let tok = match word.as_str() {
            "AND" => Tok::And,
            "DOWN" | "ALONG" => {
                let dir = if word == "DOWN" {
                    Direction::Down
                } else {
                    Direction::Along
                };
                let (n, next) = move_argument(&chars, i, line, col0)?;
                i = next;
                Tok::Move(dir, n)
            }
            _ if word.starts_with(is_ident_start) && word.chars().all(is_ident_char) => Tok::Ident(word),
            _ => return Err(err(GrammarErrorKind::UnknownToken(word), line, col)),
        };
        out.push(Spanned { tok, line, col });
    }
    Ok(())
}

fn digits_value(ds: &[char]) -> i64 {
    ds.iter()
        .fold(0i64, |acc, d| {
            acc.saturating_mul(10).saturating_add(d.to_digit(10).unwrap() as i64)
        })
        .min(u32::MAX as i64)
}

/// `(n)` directly following a move keyword, or distance 1 when the next
/// parenthesis opens something other than a number.
fn move_argument(chars: &[char], at: usize, line: usize, col0: usize) -> Result<(u32, usize), GrammarError> {
    let skip_ws = |mut k: usize| {
        while k < chars.len() && (chars[k] == ' ' || chars[k] == '\t') {
            k += 1;
        }
        k
    };
    let open = skip_ws(at);
    if open >= chars.len() || chars[open] != '(' {
        return Ok((1, at));
    }
    let mut k = skip_ws(open + 1);
    let negative = k < chars.len() && chars[k] == '-';
    if negative {
        k = skip_ws(k + 1);
    }
    let digits_start = k;
    while k < chars.len() && chars[k].is_ascii_digit() {
        k += 1;
    }
    if k == digits_start {
        return Ok((1, at));
    }
    let close = skip_ws(k);
    if close >= chars.len() || chars[close] != ')' {
        return Err(err(
            GrammarErrorKind::UnexpectedToken(chars.get(close).map_or(String::new(), |c| c.to_string())),
            line,
            col0 + close,
        ));
    }
    let mut n = digits_value(&chars[digits_start..k]);
    if negative {
        n = -n;
    }
    if n < 1 {
        return Err(err(GrammarErrorKind::BadCount(n), line, col0 + digits_start));
    }
    Ok((n as u32, close + 1))
}

struct RuleSource {
    name: String,
    line: usize,
    col: usize,
    tokens: Vec<Spanned>,
    /// Where the body ends, for end-of-input errors.
    end: (usize, usize),
}

struct Parser<'a> {
    toks: &'a [Spanned],
    pos: usize,
    end: (usize, usize),
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn unexpected(&self) -> GrammarError {
        match self.toks.get(self.pos) {
            Some(s) => err(GrammarErrorKind::UnexpectedToken(s.tok.to_string()), s.line, s.col),
            None => err(GrammarErrorKind::UnexpectedEnd, self.end.0, self.end.1),
        }
    }

    fn alt(&mut self) -> Result<Pattern, GrammarError> {
        let mut options = Vec::from([self.and()?]);
        while self.peek() == Some(&Tok::Bar) {
            self.pos += 1;
            options.push(self.and()?);
        }
        Ok(if options.len() == 1 {
            options.pop().unwrap()
        } else {
            Pattern::Alt(options)
        })
    }

    fn and(&mut self) -> Result<Pattern, GrammarError> {
        let mut left = self.seq()?;
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            let right = self.seq()?;
            left = Pattern::And(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn seq(&mut self) -> Result<Pattern, GrammarError> {
        let mut items: Vec<Pattern> = Vec::new();
        while matches!(self.peek(), Some(Tok::Ident(_) | Tok::Move(..) | Tok::LParen)) {
            let item = self.postfix()?;
            if let Some(prev) = items.last() {
                if !prev.ends_with_move() && !item.starts_with_move() {
                    items.push(Pattern::along(1));
                }
            }
            items.push(item);
        }
        match items.len() {
            0 => Err(self.unexpected()),
            1 => Ok(items.pop().unwrap()),
            _ => Ok(Pattern::Seq(items)),
        }
    }

    fn postfix(&mut self) -> Result<Pattern, GrammarError> {
        let mut p = self.primary()?;
        loop {
            match self.peek() {
                Some(Tok::Question) => p = Pattern::Opt(Box::new(p)),
                Some(Tok::Star(None)) => p = Pattern::Repeat(Box::new(p), Count::Star),
                Some(Tok::Star(Some(n))) => p = Pattern::Repeat(Box::new(p), Count::Exact(*n)),
                _ => return Ok(p),
            }
            self.pos += 1;
        }
    }

    fn primary(&mut self) -> Result<Pattern, GrammarError> {
        let tok = self.peek().cloned();
        match tok {
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                Ok(Pattern::Terminal(name))
            }
            Some(Tok::Move(d, n)) => {
                self.pos += 1;
                Ok(Pattern::Move(d, n))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.alt()?;
                if self.peek() != Some(&Tok::RParen) {
                    return Err(self.unexpected());
                }
                self.pos += 1;
                Ok(inner)
            }
            _ => Err(self.unexpected()),
        }
    }
}

/// Identifiers naming a rule become rule references; the rest are predicates.
fn resolve(p: Pattern, rules: &[String]) -> Pattern {
    match p {
        Pattern::Terminal(n) if rules.contains(&n) => Pattern::RuleRef(n),
        Pattern::Seq(items) => Pattern::Seq(items.into_iter().map(|q| resolve(q, rules)).collect()),
        Pattern::Alt(items) => Pattern::Alt(items.into_iter().map(|q| resolve(q, rules)).collect()),
        Pattern::Opt(inner) => Pattern::Opt(Box::new(resolve(*inner, rules))),
        Pattern::Repeat(inner, c) => Pattern::Repeat(Box::new(resolve(*inner, rules)), c),
        Pattern::And(l, r) => Pattern::And(Box::new(resolve(*l, rules)), Box::new(resolve(*r, rules))),
        other => other,
    }
}

/// Parse grammar text: one `name --> body` rule per line, `#` comments, and
/// continuation lines (any line without `-->`) appended to the rule above.
///
/// Also rejects grammars that fail the structural checks of
/// [`super::structural_diagnostics`]; predicate names are checked later
/// against a registry.
pub fn parse_grammar(text: &str) -> Result<Grammar, GrammarError> {
    let mut sources: Vec<RuleSource> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("");
        if body.trim().is_empty() {
            continue;
        }
        if let Some(arrow) = body.find("-->") {
            let head = &body[..arrow];
            let name = head.trim();
            let name_col = head.find(name).unwrap_or(0) + 1;
            if name.is_empty() {
                return Err(err(GrammarErrorKind::MissingArrow, line, 1));
            }
            if !(name.starts_with(is_ident_start) && name.chars().all(is_ident_char)) {
                return Err(err(GrammarErrorKind::BadRuleName(name.into()), line, name_col));
            }
            if sources.iter().any(|s| s.name == name) {
                return Err(err(GrammarErrorKind::DuplicateRule(name.into()), line, name_col));
            }
            if Builtin::from_name(name).is_some() {
                return Err(err(GrammarErrorKind::ShadowsPredicate(name.into()), line, name_col));
            }
            let rest = &body[arrow + 3..];
            let col0 = body[..arrow + 3].chars().count() + 1;
            let mut tokens = Vec::new();
            lex_line(rest, line, col0, &mut tokens)?;
            sources.push(RuleSource {
                name: name.into(),
                line,
                col: name_col,
                tokens,
                end: (line, body.chars().count() + 1),
            });
        } else {
            let Some(current) = sources.last_mut() else {
                let col = body.len() - body.trim_start().len() + 1;
                return Err(err(GrammarErrorKind::ContinuationWithoutRule, line, col));
            };
            lex_line(body, line, 1, &mut current.tokens)?;
            current.end = (line, body.chars().count() + 1);
        }
    }
    let names: Vec<String> = sources.iter().map(|s| s.name.clone()).collect();
    let mut rules = Vec::new();
    for src in &sources {
        if src.tokens.is_empty() {
            return Err(err(GrammarErrorKind::EmptyBody, src.line, src.col));
        }
        let mut p = Parser {
            toks: &src.tokens,
            pos: 0,
            end: src.end,
        };
        let body = p.alt()?;
        if p.pos < src.tokens.len() {
            return Err(p.unexpected());
        }
        rules.push((src.name.clone(), resolve(body, &names)));
    }
    let grammar = Grammar::from_rules(rules);
    if let Some(d) = super::structural_diagnostics(&grammar).into_iter().next() {
        let src = sources
            .iter()
            .find(|s| s.name == d.rule())
            .expect("diagnostic names a rule");
        return Err(err(GrammarErrorKind::Invalid(d.to_string()), src.line, src.col));
    }
    Ok(grammar)
}
