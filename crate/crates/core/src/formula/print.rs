use alloc::format;
use alloc::string::String;

use super::{Axis, BinOp, CellRef, Expr, IndexExpr, OffsetRef};
use crate::address::col_to_letters;

/// Printer options.
#[derive(Debug, Clone)]
pub struct PrintStyle {
    /// Surround binary operators with spaces and follow commas with one.
    pub spaced: bool,
    /// Name of the quantified index in generalized equations.
    pub param: &'static str,
}

impl Default for PrintStyle {
    fn default() -> Self {
        PrintStyle {
            spaced: false,
            param: "t",
        }
    }
}

/// `=` followed by the expression with minimal parentheses.
pub fn print_formula(e: &Expr) -> String {
    let mut out = String::from("=");
    write_expr(&mut out, e, &PrintStyle::default());
    out
}

pub fn print_expr(e: &Expr, style: &PrintStyle) -> String {
    let mut out = String::new();
    write_expr(&mut out, e, style);
    out
}

// Binding levels used for parenthesization; binary operators use
// `BinOp::precedence` (1 to 3, and 5 for `^`).
const NEG: u8 = 4;
const ATOM: u8 = 6;

fn level(e: &Expr) -> u8 {
    match e {
        Expr::Bin(op, ..) => op.precedence(),
        Expr::Neg(_) => NEG,
        Expr::Num(n) if n.value() < 0.0 => NEG,
        _ => ATOM,
    }
}

fn write_child(out: &mut String, e: &Expr, min_level: u8, style: &PrintStyle) {
    if level(e) < min_level {
        out.push('(');
        write_expr(out, e, style);
        out.push(')');
    } else {
        write_expr(out, e, style);
    }
}

fn write_expr(out: &mut String, e: &Expr, style: &PrintStyle) {
    match e {
        Expr::Num(n) => out.push_str(&format!("{n}")),
        Expr::Str(s) => {
            out.push('"');
            out.push_str(&s.replace('"', "\"\""));
            out.push('"');
        }
        Expr::Ref(r) => write_ref(out, r, true),
        Expr::Range(a, b) => {
            write_ref(out, a, true);
            out.push(':');
            write_ref(out, b, false);
        }
        Expr::OffsetRef(o) => write_offset(out, o),
        Expr::OffsetRange(a, b) => {
            write_offset(out, a);
            out.push(':');
            write_offset(out, b);
        }
        Expr::Bin(op, l, r) => {
            // Left-associative operators accept an equal-level left child;
            // `^` is right-associative and takes a unary right operand.
            let (left_min, right_min) = match op {
                BinOp::Pow => (ATOM, NEG),
                _ => {
                    let p = op.precedence();
                    (p, p + 1)
                }
            };
            write_child(out, l, left_min, style);
            if style.spaced {
                out.push(' ');
                out.push_str(op.symbol());
                out.push(' ');
            } else {
                out.push_str(op.symbol());
            }
            write_child(out, r, right_min, style);
        }
        Expr::Neg(inner) => {
            out.push('-');
            write_child(out, inner, NEG, style);
        }
        Expr::Call(name, args) => {
            out.push_str(name);
            if args.is_empty() && (name == "TRUE" || name == "FALSE") {
                return;
            }
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(if style.spaced { ", " } else { "," });
                }
                write_expr(out, a, style);
            }
            out.push(')');
        }
        Expr::AttrRef { attr, index, .. } => {
            out.push_str(attr);
            out.push('[');
            write_index(out, index, style);
            out.push(']');
        }
        Expr::AttrRange { attr, from, to, .. } => {
            out.push_str(attr);
            out.push('[');
            write_index(out, from, style);
            out.push_str("..");
            write_index(out, to, style);
            out.push(']');
        }
    }
}

fn write_index(out: &mut String, index: &IndexExpr, style: &PrintStyle) {
    match index {
        IndexExpr::Const(i) => out.push_str(&format!("{i}")),
        IndexExpr::Param(0) => out.push_str(style.param),
        IndexExpr::Param(k) if *k > 0 => out.push_str(&format!("{}+{k}", style.param)),
        IndexExpr::Param(k) => out.push_str(&format!("{}-{}", style.param, -k)),
        IndexExpr::Enum(label) => out.push_str(label),
    }
}

fn is_plain_sheet_name(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
}

fn write_sheet(out: &mut String, sheet: &str) {
    if is_plain_sheet_name(sheet) {
        out.push_str(sheet);
    } else {
        out.push('\'');
        out.push_str(&sheet.replace('\'', "''"));
        out.push('\'');
    }
    out.push('!');
}

fn write_ref(out: &mut String, r: &CellRef, allow_sheet: bool) {
    if allow_sheet && r.style.sheet_explicit {
        write_sheet(out, &r.target.sheet);
    }
    if r.style.col_abs {
        out.push('$');
    }
    out.push_str(&col_to_letters(r.target.col));
    if r.style.row_abs {
        out.push('$');
    }
    out.push_str(&format!("{}", r.target.row));
}

fn write_offset(out: &mut String, o: &OffsetRef) {
    if o.sheet_explicit {
        write_sheet(out, &o.sheet);
    }
    for (tag, axis) in [('R', o.row), ('C', o.col)] {
        out.push(tag);
        match axis {
            Axis::Abs(c) => out.push_str(&format!("{c}")),
            Axis::Rel(0) => {}
            Axis::Rel(d) => out.push_str(&format!("[{d}]")),
        }
    }
}
