use std::collections::BTreeSet;

use super::{CombKind, Expr, QName};

/// Variables with at least one occurrence not bound by an enclosing
/// pattern or `free` binder inside `expr`.
pub fn free_vars_of(expr: &Expr) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let mut bound = Vec::new();
    walk_free(expr, &mut bound, &mut out);
    out
}

fn walk_free<'a>(expr: &'a Expr, bound: &mut Vec<&'a str>, out: &mut BTreeSet<String>) {
    match expr {
        Expr::Var(v) => {
            if !bound.contains(&v.as_str()) {
                out.insert(v.clone());
            }
        }
        Expr::Comb(_, _, args) => {
            for a in args {
                walk_free(a, bound, out);
            }
        }
        Expr::Case(_, scrutinee, branches) => {
            walk_free(scrutinee, bound, out);
            for b in branches {
                let mark = bound.len();
                bound.extend(b.pattern.vars.iter().map(String::as_str));
                walk_free(&b.body, bound, out);
                bound.truncate(mark);
            }
        }
        Expr::Or(l, r) => {
            walk_free(l, bound, out);
            walk_free(r, bound, out);
        }
        Expr::Free(vars, body) => {
            let mark = bound.len();
            bound.extend(vars.iter().map(String::as_str));
            walk_free(body, bound, out);
            bound.truncate(mark);
        }
    }
}

/// Names of all function calls (saturated or partial) in `expr`.
pub fn collect_calls(expr: &Expr) -> BTreeSet<QName> {
    let mut out = BTreeSet::new();
    expr.any(&mut |e| {
        if let Expr::Comb(CombKind::FuncCall, name, _) = e {
            out.insert(name.clone());
        }
        false
    });
    out
}

/// Every subexpression of `expr` in pre-order, including `expr` itself.
pub fn subexpressions(expr: &Expr) -> Vec<&Expr> {
    let mut out = Vec::new();
    let mut stack = vec![expr];
    while let Some(e) = stack.pop() {
        out.push(e);
        match e {
            Expr::Var(_) => {}
            Expr::Comb(_, _, args) => stack.extend(args.iter().rev()),
            Expr::Case(_, s, branches) => {
                stack.extend(branches.iter().rev().map(|b| &b.body));
                stack.push(s);
            }
            Expr::Or(l, r) => {
                stack.push(r);
                stack.push(l);
            }
            Expr::Free(_, b) => stack.push(b),
        }
    }
    out
}
