use std::collections::BTreeSet;
use std::fmt::Write as _;

use super::lexer::is_keyword;
use super::parser::type_var_name;
use crate::ir::{
    is_identifier, is_operator, CaseMode, CombKind, ConsDecl, Expr, Fixity, FuncDecl, OpDecl,
    Pattern, Prog, QName, Rule, TypeDecl, TypeExpr, Visibility,
};

/// Prints a program in canonical FlatLang layout.
///
/// Operators come first, then types, then functions (signature directly
/// above its rule), with one blank line between declarations. Case branches
/// go on their own lines, indented two spaces per nesting level.
pub fn emit_text(program: &Prog) -> String {
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
        out.push_str(&names.rule(f));
        out.push('\n');
    }
    out
}

pub(crate) fn op_decl(op: &OpDecl) -> String {
    let kw = match op.fixity {
        Fixity::InfixLeft => "infixl",
        Fixity::InfixRight => "infixr",
        Fixity::InfixNone => "infix",
    };
    format!("{kw} {} {}", op.precedence, op.name.name)
}

pub(crate) fn quote_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Decides how names are spelled so that parsing the output reproduces
/// exactly the same qualified names.
pub(crate) struct Names<'p> {
    module: &'p str,
    prelude_imported: bool,
    local_types: BTreeSet<&'p str>,
    local_cons: BTreeSet<&'p str>,
}

impl<'p> Names<'p> {
    pub(crate) fn new(program: &'p Prog) -> Self {
        Names {
            module: &program.name,
            prelude_imported: program.imports.iter().any(|i| i == "Prelude"),
            local_types: program.types.iter().map(|t| t.name.name.as_str()).collect(),
            local_cons: program
                .types
                .iter()
                .flat_map(|t| t.constructors.iter().map(|c| c.name.name.as_str()))
                .collect(),
        }
    }

    fn upper(&self, q: &QName, local: &BTreeSet<&str>) -> String {
        let declared_here = local.contains(q.name.as_str());
        let bare = (q.module == self.module && declared_here)
            || (q.module == "Prelude" && self.prelude_imported && !declared_here);
        if bare {
            q.name.clone()
        } else {
            q.to_string()
        }
    }

    pub(crate) fn type_name(&self, q: &QName) -> String {
        self.upper(q, &self.local_types)
    }

    pub(crate) fn cons_name(&self, q: &QName) -> String {
        self.upper(q, &self.local_cons)
    }

    pub(crate) fn func_name(&self, q: &QName, scope: &[&str]) -> String {
        if is_operator(&q.name) {
            return if q.module == self.module {
                format!("({})", q.name)
            } else {
                format!("{}.({})", q.module, q.name)
            };
        }
        let bare = q.module == self.module
            && q.name
                .starts_with(|c: char| c.is_ascii_lowercase() || c == '_')
            && is_identifier(&q.name)
            && !is_keyword(&q.name)
            && !scope.contains(&q.name.as_str());
        if bare {
            q.name.clone()
        } else {
            q.to_string()
        }
    }

    /// Name as written at the start of a declaration.
    pub(crate) fn decl_name(&self, q: &QName) -> String {
        if is_operator(&q.name) {
            format!("({})", q.name)
        } else {
            q.name.clone()
        }
    }

    pub(crate) fn type_expr(&self, t: &TypeExpr, var: &dyn Fn(u32) -> String) -> String {
        self.type_prec(t, var, 0)
    }

    /// prec 0: anywhere; 1: function domain; 2: constructor argument.
    fn type_prec(&self, t: &TypeExpr, var: &dyn Fn(u32) -> String, prec: u8) -> String {
        match t {
            TypeExpr::Var(i) => var(*i),
            TypeExpr::Cons(name, args) if args.is_empty() => self.type_name(name),
            TypeExpr::Cons(name, args) => {
                let mut s = self.type_name(name);
                for a in args {
                    s.push(' ');
                    s.push_str(&self.type_prec(a, var, 2));
                }
                if prec >= 2 {
                    format!("({s})")
                } else {
                    s
                }
            }
            TypeExpr::Func(d, r) => {
                let s = format!(
                    "{} -> {}",
                    self.type_prec(d, var, 1),
                    self.type_prec(r, var, 0)
                );
                if prec >= 1 {
                    format!("({s})")
                } else {
                    s
                }
            }
        }
    }

    pub(crate) fn type_decl(&self, t: &TypeDecl) -> String {
        let mut s = String::new();
        if t.visibility == Visibility::Private {
            s.push_str("private ");
        }
        let _ = write!(s, "data {}", t.name.name);
        for v in &t.type_vars {
            s.push(' ');
            s.push_str(&type_var_name(*v));
        }
        let cons: Vec<String> = t.constructors.iter().map(|c| self.cons_decl(c)).collect();
        if !cons.is_empty() {
            s.push_str(" = ");
            s.push_str(&cons.join(" | "));
        }
        s
    }

    fn cons_decl(&self, c: &ConsDecl) -> String {
        let mut s = String::new();
        if c.visibility == Visibility::Private {
            s.push_str("private ");
        }
        s.push_str(&c.name.name);
        for a in &c.arg_types {
            s.push(' ');
            s.push_str(&self.type_prec(a, &type_var_name, 2));
        }
        s
    }

    pub(crate) fn signature(&self, f: &FuncDecl) -> String {
        let private = if f.visibility == Visibility::Private {
            "private "
        } else {
            ""
        };
        format!(
            "{private}{} :: {}",
            self.decl_name(&f.name),
            self.type_expr(&f.type_sig, &type_var_name)
        )
    }

    pub(crate) fn rule(&self, f: &FuncDecl) -> String {
        let name = self.decl_name(&f.name);
        match &f.rule {
            Rule::External(entry) => {
                let mut s = name;
                let mut tail = String::new();
                if f.arity != f.type_sig.arrow_depth() {
                    if f.arity == 0 {
                        tail.push_str(" 0");
                    }
                    for i in 1..=f.arity {
                        let _ = write!(s, " x{i}");
                    }
                }
                let _ = write!(s, " external{tail} {}", quote_string(entry));
                s
            }
            Rule::Defined { args, body } => {
                let mut s = name;
                for a in args {
                    s.push(' ');
                    s.push_str(a);
                }
                let mut scope: Vec<&str> = args.iter().map(String::as_str).collect();
                s.push_str(" = ");
                s.push_str(&self.expr(body, 0, &mut scope));
                s
            }
        }
    }

    pub(crate) fn pattern(&self, p: &Pattern) -> String {
        let mut s = self.cons_name(&p.constructor);
        for v in &p.vars {
            s.push(' ');
            s.push_str(v);
        }
        s
    }

    /// Expression in a position that accepts any expression. `indent` is
    /// the indentation of the line the expression starts on.
    pub(crate) fn expr<'e>(&self, e: &'e Expr, indent: usize, scope: &mut Vec<&'e str>) -> String {
        match e {
            Expr::Var(v) => v.clone(),
            Expr::Comb(kind, name, args) => {
                let mut s = match kind {
                    CombKind::FuncCall => self.func_name(name, scope),
                    CombKind::ConsCall => self.cons_name(name),
                };
                for a in args {
                    s.push(' ');
                    s.push_str(&self.atom(a, indent, scope));
                }
                s
            }
            Expr::Case(mode, scrutinee, branches) => {
                let kw = match mode {
                    CaseMode::Rigid => "case",
                    CaseMode::Flex => "fcase",
                };
                let mut s = format!("{kw} {} of {{", self.expr(scrutinee, indent, scope));
                let pad = " ".repeat(indent + 2);
                for (i, b) in branches.iter().enumerate() {
                    let mark = scope.len();
                    scope.extend(b.pattern.vars.iter().map(String::as_str));
                    let body = self.expr(&b.body, indent + 2, scope);
                    scope.truncate(mark);
                    let sep = if i + 1 < branches.len() { ";" } else { " }" };
                    let _ = write!(s, "\n{pad}{} -> {body}{sep}", self.pattern(&b.pattern));
                }
                if branches.is_empty() {
                    s.push_str(" }");
                }
                s
            }
            Expr::Or(l, r) => {
                format!(
                    "({} or {})",
                    self.expr(l, indent, scope),
                    self.expr(r, indent, scope)
                )
            }
            Expr::Free(vars, body) => {
                let mark = scope.len();
                scope.extend(vars.iter().map(String::as_str));
                let b = self.expr(body, indent, scope);
                scope.truncate(mark);
                format!("free {} in {b}", vars.join(", "))
            }
        }
    }

    pub(crate) fn atom<'e>(&self, e: &'e Expr, indent: usize, scope: &mut Vec<&'e str>) -> String {
        match e {
            Expr::Var(_) | Expr::Or(..) => self.expr(e, indent, scope),
            Expr::Comb(_, _, args) if args.is_empty() => self.expr(e, indent, scope),
            _ => format!("({})", self.expr(e, indent, scope)),
        }
    }
}
