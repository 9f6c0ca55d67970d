use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{generalize, Attribute, IndexDomain, Model};
use crate::formula::{print_expr, Expr, IndexExpr, PrintStyle};

fn print(e: &Expr, param: &'static str) -> String {
    print_expr(e, &PrintStyle { spaced: true, param })
}

fn equations(m: &Model, a: &Attribute, out: &mut Vec<String>) {
    if a.domain == IndexDomain::Range(1) {
        let d = &a.defs[0];
        if !d.is_number_data() {
            out.push(format!("{} = {}", a.name, print(&d.expr, "t")));
        }
        return;
    }
    let param = match a.domain {
        IndexDomain::Range(_) => "t",
        IndexDomain::Enum(_) => "p",
    };
    if a.defs.iter().all(|d| d.is_formula) {
        if let Ok(Some(template)) = generalize(m, &a.name) {
            out.push(format!("{}[all {param}] = {}", a.name, print(&template, param)));
            return;
        }
    }
    for (i, d) in a.defs.iter().enumerate() {
        if d.is_number_data() {
            continue;
        }
        let index = match a.domain.index(i) {
            IndexExpr::Const(j) => format!("{j}"),
            IndexExpr::Enum(l) => l,
            IndexExpr::Param(_) => unreachable!("domains name concrete indices"),
        };
        out.push(format!("{}[{index}] = {}", a.name, print(&d.expr, param)));
    }
}

/// The model as an MM program: a `<...>` line of attribute signatures, then
/// `where` and one equation per line.
///
/// Attributes whose definitions are all formulas print one quantified
/// equation when [`generalize`] finds a template. Numeric inputs are data,
/// not equations, and are left out; text prints as a quoted literal.
pub fn emit_mm(m: &Model) -> String {
    let sigs: Vec<String> = m.attributes().iter().map(Attribute::signature).collect();
    let mut out = format!("<{}>\n", sigs.join(" "));
    let mut lines = Vec::new();
    for a in m.attributes() {
        equations(m, a, &mut lines);
    }
    if !lines.is_empty() {
        out.push_str("where\n");
        for l in lines {
            out.push_str(&l);
            out.push('\n');
        }
    }
    out
}
