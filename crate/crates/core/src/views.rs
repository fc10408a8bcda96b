//! Textual views of whole modules.

use std::collections::HashMap;

use crate::flat::{emit_text, op_decl, to_interface, type_var_name, Names};
use crate::ir::{CaseMode, CombKind, Expr, FuncDecl, Pattern, Prog, QName, Rule};

/// The equality primitive whose rigid case with a single `True` branch is
/// shown as a guard.
pub fn guard_equality() -> QName {
    QName::new("Prelude", "constrEq")
}

fn is_true(q: &QName) -> bool {
    q.module == "Prelude" && q.name == "True"
}

pub fn flat_view(program: &Prog) -> String {
    emit_text(program)
}

pub fn interface_view(program: &Prog) -> String {
    emit_text(&to_interface(program))
}

/// `name :: type` per function, type variables renamed a, b, c… by first
/// occurrence.
pub fn signature_report(program: &Prog) -> String {
    let names = Names::new(program);
    let mut out = String::new();
    for f in &program.functions {
        let mut order: HashMap<u32, u32> = HashMap::new();
        f.type_sig.for_each_var(&mut |v| {
            let next = order.len() as u32;
            order.entry(v).or_insert(next);
        });
        let ty = names.type_expr(&f.type_sig, &|v| type_var_name(order[&v]));
        out.push_str(&format!("{} :: {ty}\n", names.decl_name(&f.name)));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum LhsPattern {
    Var(String),
    Cons(Pattern),
}

/// One equation `f p1 … pn | guard = rhs where v1, … free`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SurfaceRule {
    pub lhs: Vec<LhsPattern>,
    /// A call of [`guard_equality`].
    pub guard: Option<Expr>,
    pub rhs: Expr,
    /// Variables bound by a `free` directly above the guard or rhs.
    pub free: Vec<String>,
}

/// Equations for a function whose body is a tree of flexible cases on
/// argument variables, disjunctions allowed anywhere. `None` for externals
/// and for bodies of any other shape.
pub fn source_rules(func: &FuncDecl) -> Option<Vec<SurfaceRule>> {
    let Rule::Defined { args, body } = &func.rule else {
        return None;
    };
    let lhs: Vec<LhsPattern> = args.iter().cloned().map(LhsPattern::Var).collect();
    let mut out = Vec::new();
    expand(body, lhs, &mut out)?;
    Some(out)
}

fn lhs_binds(lhs: &[LhsPattern], name: &str) -> bool {
    lhs.iter().any(|p| match p {
        LhsPattern::Var(v) => v == name,
        LhsPattern::Cons(p) => p.vars.iter().any(|v| v == name),
    })
}

fn expand(e: &Expr, lhs: Vec<LhsPattern>, out: &mut Vec<SurfaceRule>) -> Option<()> {
    match e {
        Expr::Or(l, r) => {
            expand(l, lhs.clone(), out)?;
            expand(r, lhs, out)
        }
        Expr::Case(CaseMode::Flex, s, branches) => {
            let pos = match s.as_ref() {
                Expr::Var(v) => lhs
                    .iter()
                    .position(|p| matches!(p, LhsPattern::Var(x) if x == v)),
                _ => None,
            };
            let Some(pos) = pos else {
                out.push(guarded(e, lhs, Vec::new()));
                return Some(());
            };
            for b in branches {
                let mut vars = b.pattern.vars.clone();
                vars.sort();
                vars.dedup();
                if vars.len() != b.pattern.vars.len()
                    || b.pattern.vars.iter().any(|x| lhs_binds(&lhs, x))
                {
                    return None;
                }
                let mut next = lhs.clone();
                next[pos] = LhsPattern::Cons(b.pattern.clone());
                expand(&b.body, next, out)?;
            }
            Some(())
        }
        Expr::Free(vs, body)
            if !vs.iter().any(|v| lhs_binds(&lhs, v))
                && !matches!(
                    body.as_ref(),
                    Expr::Or(..) | Expr::Case(CaseMode::Flex, ..) | Expr::Free(..)
                ) =>
        {
            out.push(guarded(body, lhs, vs.clone()));
            Some(())
        }
        _ => {
            out.push(guarded(e, lhs, Vec::new()));
            Some(())
        }
    }
}

/// Equation for a body that is not expanded further.
fn guarded(e: &Expr, lhs: Vec<LhsPattern>, free: Vec<String>) -> SurfaceRule {
    if let Expr::Case(CaseMode::Rigid, s, branches) = e {
        if let (Expr::Comb(CombKind::FuncCall, eq, eq_args), [b]) =
            (s.as_ref(), branches.as_slice())
        {
            if *eq == guard_equality()
                && eq_args.len() == 2
                && is_true(&b.pattern.constructor)
                && b.pattern.vars.is_empty()
            {
                return SurfaceRule {
                    lhs,
                    guard: Some(s.as_ref().clone()),
                    rhs: b.body.clone(),
                    free,
                };
            }
        }
    }
    SurfaceRule {
        lhs,
        guard: None,
        rhs: e.clone(),
        free,
    }
}

/// The module with functions shown as pattern-matching equations where
/// their bodies allow it, and in flat form otherwise.
pub fn source_view(program: &Prog) -> String {
    let names = Names::new(program);
    let mut out = format!(
        "module {} imports ({})\n",
        program.name,
        program.imports.join(", ")
    );
    for op in &program.operators {
        out.push('\n');
        out.push_str(&op_decl(op));
        out.push('\n');
    }
    for t in &program.types {
        out.push('\n');
        out.push_str(&names.type_decl(t));
        out.push('\n');
    }
    for f in &program.functions {
        out.push('\n');
        out.push_str(&names.signature(f));
        out.push('\n');
        match source_rules(f) {
            Some(rules) => {
                for r in &rules {
                    out.push_str(&equation(&names, f, r));
                    out.push('\n');
                }
            }
            None => {
                out.push_str(&names.rule(f));
                out.push('\n');
            }
        }
    }
    out
}

fn equation(names: &Names<'_>, f: &FuncDecl, rule: &SurfaceRule) -> String {
    let mut s = names.decl_name(&f.name);
    let mut scope: Vec<&str> = Vec::new();
    for p in &rule.lhs {
        s.push(' ');
        match p {
            LhsPattern::Var(v) => {
                s.push_str(v);
                scope.push(v);
            }
            LhsPattern::Cons(p) if p.vars.is_empty() => s.push_str(&names.pattern(p)),
            LhsPattern::Cons(p) => {
                s.push('(');
                s.push_str(&names.pattern(p));
                s.push(')');
                scope.extend(p.vars.iter().map(String::as_str));
            }
        }
    }
    scope.extend(rule.free.iter().map(String::as_str));
    if let Some(Expr::Comb(_, _, args)) = &rule.guard {
        let a = names.expr(&args[0], 0, &mut scope);
        let b = names.expr(&args[1], 0, &mut scope);
        s.push_str(&format!(" | {a} =:= {b}"));
    }
    s.push_str(" = ");
    s.push_str(&names.expr(&rule.rhs, 0, &mut scope));
    if !rule.free.is_empty() {
        s.push_str(&format!(" where {} free", rule.free.join(", ")));
    }
    s
}
