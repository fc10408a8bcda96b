use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{
    is_local_name, is_module_name, CombKind, Expr, FuncDecl, Prog, QName, Rule, TypeDecl, TypeExpr,
};

/// Maps each constructor name to the type declaring it.
#[derive(Clone, Debug, Default)]
pub struct ConstructorIndex {
    by_constructor: BTreeMap<QName, TypeDecl>,
    type_arity: BTreeMap<QName, usize>,
}

impl ConstructorIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_programs<'a>(progs: impl IntoIterator<Item = &'a Prog>) -> Self {
        let mut index = Self::new();
        for p in progs {
            for t in &p.types {
                index.insert(t.clone());
            }
        }
        index
    }

    pub fn insert(&mut self, decl: TypeDecl) {
        self.type_arity
            .insert(decl.name.clone(), decl.type_vars.len());
        for c in &decl.constructors {
            self.by_constructor.insert(c.name.clone(), decl.clone());
        }
    }

    pub fn type_of(&self, constructor: &QName) -> Option<&TypeDecl> {
        self.by_constructor.get(constructor)
    }

    pub fn constructor_arity(&self, constructor: &QName) -> Option<usize> {
        self.type_of(constructor)?
            .constructors
            .iter()
            .find(|c| &c.name == constructor)
            .map(|c| c.arity)
    }

    pub fn type_arity(&self, type_name: &QName) -> Option<usize> {
        self.type_arity.get(type_name).copied()
    }

    /// Iterates `(constructor, declaring type)` in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (&QName, &TypeDecl)> {
        self.by_constructor.iter()
    }

    pub fn len(&self) -> usize {
        self.by_constructor.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_constructor.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DiagCode {
    BadName,
    WrongModule,
    DupImport,
    SelfImport,
    DupType,
    DupConstructor,
    DupTypeVar,
    BadConsDecl,
    UnboundTypeVar,
    TypeArity,
    DupFunction,
    DupArg,
    ArityMismatch,
    SigTooShort,
    UnboundVar,
    UnknownConstructor,
    BadConsArity,
    MixedCaseTypes,
    DupBranch,
    EmptyCase,
    PatternArity,
    DupPatternVar,
    EmptyFree,
    DupFreeVar,
    BadPrecedence,
}

impl DiagCode {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagCode::BadName => "BAD_NAME",
            DiagCode::WrongModule => "WRONG_MODULE",
            DiagCode::DupImport => "DUP_IMPORT",
            DiagCode::SelfImport => "SELF_IMPORT",
            DiagCode::DupType => "DUP_TYPE",
            DiagCode::DupConstructor => "DUP_CONSTRUCTOR",
            DiagCode::DupTypeVar => "DUP_TYPE_VAR",
            DiagCode::BadConsDecl => "BAD_CONS_DECL",
            DiagCode::UnboundTypeVar => "UNBOUND_TYPE_VAR",
            DiagCode::TypeArity => "TYPE_ARITY",
            DiagCode::DupFunction => "DUP_FUNCTION",
            DiagCode::DupArg => "DUP_ARG",
            DiagCode::ArityMismatch => "ARITY_MISMATCH",
            DiagCode::SigTooShort => "SIG_TOO_SHORT",
            DiagCode::UnboundVar => "UNBOUND_VAR",
            DiagCode::UnknownConstructor => "UNKNOWN_CONSTRUCTOR",
            DiagCode::BadConsArity => "BAD_CONS_ARITY",
            DiagCode::MixedCaseTypes => "MIXED_CASE_TYPES",
            DiagCode::DupBranch => "DUP_BRANCH",
            DiagCode::EmptyCase => "EMPTY_CASE",
            DiagCode::PatternArity => "PATTERN_ARITY",
            DiagCode::DupPatternVar => "DUP_PATTERN_VAR",
            DiagCode::EmptyFree => "EMPTY_FREE",
            DiagCode::DupFreeVar => "DUP_FREE_VAR",
            DiagCode::BadPrecedence => "BAD_PRECEDENCE",
        }
    }
}

impl fmt::Display for DiagCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A well-formedness problem attached to the declaration it was found in.
/// Module-level problems (imports) use the import name as local part.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Diagnostic {
    pub code: DiagCode,
    pub at: QName,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {}", self.code, self.at, self.message)
    }
}

/// Checks every structural side condition of the flat grammar.
///
/// The result is empty iff the program is well-formed. Diagnostics are
/// ordered: module header, type declarations, functions (each in
/// traversal order), operators.
pub fn well_formed(program: &Prog, constructors: &ConstructorIndex) -> Vec<Diagnostic> {
    let mut index = constructors.clone();
    for t in &program.types {
        index.insert(t.clone());
    }
    let mut cx = Checker {
        prog: program,
        index: &index,
        out: Vec::new(),
    };
    cx.header();
    cx.types();
    let mut seen = BTreeSet::new();
    for f in &program.functions {
        if !seen.insert(&f.name) {
            cx.push(
                DiagCode::DupFunction,
                &f.name,
                format!("function {} declared twice", f.name),
            );
        }
        cx.function(f);
    }
    for op in &program.operators {
        cx.decl_name(&op.name);
        if op.precedence > 9 {
            cx.push(
                DiagCode::BadPrecedence,
                &op.name,
                format!("precedence {} outside 0..=9", op.precedence),
            );
        }
    }
    cx.out
}

struct Checker<'a> {
    prog: &'a Prog,
    index: &'a ConstructorIndex,
    out: Vec<Diagnostic>,
}

impl<'a> Checker<'a> {
    fn push(&mut self, code: DiagCode, at: &QName, message: String) {
        self.out.push(Diagnostic {
            code,
            at: at.clone(),
            message,
        });
    }

    fn header(&mut self) {
        let mut seen = BTreeSet::new();
        for imp in &self.prog.imports {
            let at = QName::new(self.prog.name.clone(), imp.clone());
            if !is_module_name(imp) {
                self.push(
                    DiagCode::BadName,
                    &at,
                    format!("invalid module name {imp:?}"),
                );
            }
            if imp == &self.prog.name {
                self.push(DiagCode::SelfImport, &at, "module imports itself".into());
            }
            if !seen.insert(imp) {
                self.push(DiagCode::DupImport, &at, format!("{imp} imported twice"));
            }
        }
    }

    fn decl_name(&mut self, name: &QName) {
        if !is_module_name(&name.module) || !is_local_name(&name.name) {
            self.push(DiagCode::BadName, name, format!("invalid name {name:?}"));
        }
        if name.module != self.prog.name {
            self.push(
                DiagCode::WrongModule,
                name,
                format!("declared in module {} but named {}", self.prog.name, name),
            );
        }
    }

    fn types(&mut self) {
        let mut type_names = BTreeSet::new();
        let mut cons_names = BTreeSet::new();
        for t in &self.prog.types {
            self.decl_name(&t.name);
            if !type_names.insert(&t.name) {
                self.push(
                    DiagCode::DupType,
                    &t.name,
                    format!("type {} declared twice", t.name),
                );
            }
            let vars: BTreeSet<u32> = t.type_vars.iter().copied().collect();
            if vars.len() != t.type_vars.len() {
                self.push(
                    DiagCode::DupTypeVar,
                    &t.name,
                    "repeated type variable".into(),
                );
            }
            for c in &t.constructors {
                self.decl_name(&c.name);
                if !cons_names.insert(&c.name) {
                    self.push(
                        DiagCode::DupConstructor,
                        &c.name,
                        format!("constructor {} declared twice", c.name),
                    );
                }
                if c.arity != c.arg_types.len() {
                    self.push(
                        DiagCode::BadConsDecl,
                        &c.name,
                        format!("arity {} but {} argument types", c.arity, c.arg_types.len()),
                    );
                }
                for a in &c.arg_types {
                    let mut unbound = BTreeSet::new();
                    a.for_each_var(&mut |v| {
                        if !vars.contains(&v) {
                            unbound.insert(v);
                        }
                    });
                    for v in unbound {
                        self.push(
                            DiagCode::UnboundTypeVar,
                            &c.name,
                            format!("type variable {v} not declared by {}", t.name),
                        );
                    }
                    self.type_arities(a, &c.name);
                }
            }
        }
    }

    fn type_arities(&mut self, ty: &TypeExpr, at: &QName) {
        let mut bad = Vec::new();
        ty.for_each_cons(&mut |name, n| {
            if let Some(expected) = self.index.type_arity(name) {
                if expected != n {
                    bad.push(format!(
                        "{name} applied to {n} arguments, expects {expected}"
                    ));
                }
            }
        });
        for m in bad {
            self.push(DiagCode::TypeArity, at, m);
        }
    }

    fn function(&mut self, f: &FuncDecl) {
        self.decl_name(&f.name);
        self.type_arities(&f.type_sig, &f.name);
        if f.type_sig.arrow_depth() < f.arity {
            self.push(
                DiagCode::SigTooShort,
                &f.name,
                format!(
                    "arity {} exceeds the {} arrows of its type",
                    f.arity,
                    f.type_sig.arrow_depth()
                ),
            );
        }
        if let Rule::Defined { args, body } = &f.rule {
            if args.len() != f.arity {
                self.push(
                    DiagCode::ArityMismatch,
                    &f.name,
                    format!("arity {} but {} rule arguments", f.arity, args.len()),
                );
            }
            let mut seen = BTreeSet::new();
            for a in args {
                if !seen.insert(a.as_str()) {
                    self.push(DiagCode::DupArg, &f.name, format!("argument {a} repeated"));
                }
            }
            let mut scope: Vec<&str> = args.iter().map(String::as_str).collect();
            self.expr(&f.name, body, &mut scope);
        }
    }

    fn expr<'e>(&mut self, at: &QName, e: &'e Expr, scope: &mut Vec<&'e str>) {
        match e {
            Expr::Var(v) => {
                if !scope.contains(&v.as_str()) {
                    self.push(
                        DiagCode::UnboundVar,
                        at,
                        format!("variable {v} is not bound"),
                    );
                }
            }
            Expr::Comb(kind, name, args) => {
                if *kind == CombKind::ConsCall {
                    match self.index.constructor_arity(name) {
                        None => self.push(
                            DiagCode::UnknownConstructor,
                            at,
                            format!("unknown constructor {name}"),
                        ),
                        Some(n) if args.len() > n => self.push(
                            DiagCode::BadConsArity,
                            at,
                            format!("{name} takes {n} arguments, given {}", args.len()),
                        ),
                        Some(_) => {}
                    }
                }
                for a in args {
                    self.expr(at, a, scope);
                }
            }
            Expr::Case(_, scrutinee, branches) => {
                self.expr(at, scrutinee, scope);
                if branches.is_empty() {
                    self.push(DiagCode::EmptyCase, at, "case without branches".into());
                }
                let mut owner: Option<&QName> = None;
                let mut seen = BTreeSet::new();
                for b in branches {
                    let c = &b.pattern.constructor;
                    if !seen.insert(c) {
                        self.push(
                            DiagCode::DupBranch,
                            at,
                            format!("constructor {c} matched twice"),
                        );
                    }
                    match self.index.type_of(c) {
                        None => self.push(
                            DiagCode::UnknownConstructor,
                            at,
                            format!("unknown constructor {c} in pattern"),
                        ),
                        Some(t) => {
                            match owner {
                                None => owner = Some(&t.name),
                                Some(o) if o != &t.name => {
                                    let msg =
                                        format!("case mixes constructors of {o} and {}", t.name);
                                    self.push(DiagCode::MixedCaseTypes, at, msg);
                                }
                                Some(_) => {}
                            }
                            let arity = self.index.constructor_arity(c).unwrap_or(0);
                            if arity != b.pattern.vars.len() {
                                self.push(
                                    DiagCode::PatternArity,
                                    at,
                                    format!(
                                        "pattern {c} binds {} variables, arity {arity}",
                                        b.pattern.vars.len()
                                    ),
                                );
                            }
                        }
                    }
                    let mut pv = BTreeSet::new();
                    for v in &b.pattern.vars {
                        if !pv.insert(v.as_str()) {
                            self.push(
                                DiagCode::DupPatternVar,
                                at,
                                format!("pattern variable {v} repeated"),
                            );
                        }
                    }
                    let mark = scope.len();
                    scope.extend(b.pattern.vars.iter().map(String::as_str));
                    self.expr(at, &b.body, scope);
                    scope.truncate(mark);
                }
            }
            Expr::Or(l, r) => {
                self.expr(at, l, scope);
                self.expr(at, r, scope);
            }
            Expr::Free(vars, body) => {
                if vars.is_empty() {
                    self.push(
                        DiagCode::EmptyFree,
                        at,
                        "free binder without variables".into(),
                    );
                }
                let mut seen = BTreeSet::new();
                for v in vars {
                    if !seen.insert(v.as_str()) {
                        self.push(
                            DiagCode::DupFreeVar,
                            at,
                            format!("free variable {v} repeated"),
                        );
                    }
                }
                let mark = scope.len();
                scope.extend(vars.iter().map(String::as_str));
                self.expr(at, body, scope);
                scope.truncate(mark);
            }
        }
    }
}
