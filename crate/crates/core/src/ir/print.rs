use num_traits::{One, Signed, Zero};

use super::{Decl, Document, LinearExpr};
use crate::rational::format_magnitude;

/// Renders a document in canonical surface syntax, declarations joined by `" ; "`.
pub fn print_ir(doc: &Document) -> String {
    doc.decls().iter().map(print_decl).collect::<Vec<_>>().join(" ; ")
}

pub(crate) fn print_decl(decl: &Decl) -> String {
    match decl {
        Decl::Objective { direction, expr } => format!("{} {}", direction.keyword(), print_expr(expr)),
        Decl::Constraint { lhs, op, rhs } => format!("{} {} {}", print_expr(lhs), op.symbol(), print_expr(rhs)),
    }
}

pub(crate) fn print_expr(expr: &LinearExpr) -> String {
    let mut out = String::new();
    let mut push = |negative: bool, body: String| {
        match (out.is_empty(), negative) {
            (true, true) => out.push('-'),
            (true, false) => {}
            (false, true) => out.push_str(" - "),
            (false, false) => out.push_str(" + "),
        }
        out.push_str(&body);
    };
    for (v, c) in expr.terms() {
        let body = if c.abs().is_one() { v.to_string() } else { format!("{}{v}", format_magnitude(c)) };
        push(c.is_negative(), body);
    }
    let k = expr.constant_term();
    if !k.is_zero() {
        push(k.is_negative(), format_magnitude(k));
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}
