//! Abstract syntax of the flat intermediate language.
//!
//! Every function has exactly one rule; pattern matching is explicit via
//! `case`/`fcase` expressions and disjunctions. Values of these types are
//! plain immutable data and can be shared freely across threads.

mod expr;
mod wellformed;

use std::fmt;

pub use expr::{collect_calls, free_vars_of, subexpressions};
pub use wellformed::{well_formed, ConstructorIndex, DiagCode, Diagnostic};

/// A qualified name: module plus local name.
///
/// Ordering is lexicographic on `(module, name)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QName {
    pub module: String,
    pub name: String,
}

impl QName {
    pub fn new(module: impl Into<String>, name: impl Into<String>) -> Self {
        QName {
            module: module.into(),
            name: name.into(),
        }
    }

    /// Splits a `Module.name` spelling. Hierarchical module names are
    /// supported (`Data.List.map`), as are symbolic local names
    /// (`Prelude..`, `Prelude.=:=`).
    pub fn parse(spelling: &str) -> Option<QName> {
        let dots: Vec<usize> = spelling.match_indices('.').map(|(i, _)| i).collect();
        for &i in dots.iter().rev() {
            let (module, rest) = (&spelling[..i], &spelling[i + 1..]);
            if is_module_name(module) && is_local_name(rest) {
                return Some(QName::new(module, rest));
            }
        }
        None
    }

    pub fn is_valid(&self) -> bool {
        is_module_name(&self.module) && is_local_name(&self.name)
    }

    /// True when the local name starts with an uppercase letter, i.e. it
    /// names a type or a data constructor.
    pub fn is_constructor_like(&self) -> bool {
        self.name.chars().next().is_some_and(char::is_uppercase)
    }
}

impl fmt::Display for QName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.module, self.name)
    }
}

/// `[A-Za-z][A-Za-z0-9_]*` segments joined by dots.
pub fn is_module_name(s: &str) -> bool {
    !s.is_empty() && s.split('.').all(is_plain_identifier_segment)
}

fn is_plain_identifier_segment(seg: &str) -> bool {
    let mut chars = seg.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// An identifier (`[A-Za-z_][A-Za-z0-9_']*`) or a symbolic operator.
pub fn is_local_name(s: &str) -> bool {
    is_identifier(s) || is_operator(s)
}

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'')
}

pub(crate) const OPERATOR_CHARS: &str = "!$%&*+./<=>?@\\^|-~:";

pub fn is_operator(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| OPERATOR_CHARS.contains(c))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Visibility {
    Public,
    Private,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum TypeExpr {
    Var(u32),
    Cons(QName, Vec<TypeExpr>),
    Func(Box<TypeExpr>, Box<TypeExpr>),
}

impl TypeExpr {
    pub fn func(domain: TypeExpr, range: TypeExpr) -> TypeExpr {
        TypeExpr::Func(Box::new(domain), Box::new(range))
    }

    /// Number of nested `Func` levels along the result spine.
    pub fn arrow_depth(&self) -> usize {
        match self {
            TypeExpr::Func(_, range) => 1 + range.arrow_depth(),
            _ => 0,
        }
    }

    /// Calls `visit` on every type constructor application, outermost first.
    pub fn for_each_cons<'a>(&'a self, visit: &mut impl FnMut(&'a QName, usize)) {
        match self {
            TypeExpr::Var(_) => {}
            TypeExpr::Cons(name, args) => {
                visit(name, args.len());
                for a in args {
                    a.for_each_cons(visit);
                }
            }
            TypeExpr::Func(d, r) => {
                d.for_each_cons(visit);
                r.for_each_cons(visit);
            }
        }
    }

    pub fn for_each_var(&self, visit: &mut impl FnMut(u32)) {
        match self {
            TypeExpr::Var(i) => visit(*i),
            TypeExpr::Cons(_, args) => args.iter().for_each(|a| a.for_each_var(visit)),
            TypeExpr::Func(d, r) => {
                d.for_each_var(visit);
                r.for_each_var(visit);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ConsDecl {
    pub name: QName,
    pub arity: usize,
    pub visibility: Visibility,
    pub arg_types: Vec<TypeExpr>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TypeDecl {
    pub name: QName,
    pub visibility: Visibility,
    pub type_vars: Vec<u32>,
    pub constructors: Vec<ConsDecl>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Pattern {
    pub constructor: QName,
    pub vars: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CombKind {
    ConsCall,
    FuncCall,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CaseMode {
    /// `case`: suspends on an unbound scrutinee.
    Rigid,
    /// `fcase`: narrows an unbound scrutinee.
    Flex,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Branch {
    pub pattern: Pattern,
    pub body: Expr,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Var(String),
    Comb(CombKind, QName, Vec<Expr>),
    Case(CaseMode, Box<Expr>, Vec<Branch>),
    Or(Box<Expr>, Box<Expr>),
    Free(Vec<String>, Box<Expr>),
}

impl Expr {
    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn call(name: QName, args: Vec<Expr>) -> Expr {
        Expr::Comb(CombKind::FuncCall, name, args)
    }

    pub fn cons(name: QName, args: Vec<Expr>) -> Expr {
        Expr::Comb(CombKind::ConsCall, name, args)
    }

    pub fn or(left: Expr, right: Expr) -> Expr {
        Expr::Or(Box::new(left), Box::new(right))
    }

    pub fn free(vars: Vec<String>, body: Expr) -> Expr {
        Expr::Free(vars, Box::new(body))
    }

    pub fn case(mode: CaseMode, scrutinee: Expr, branches: Vec<Branch>) -> Expr {
        Expr::Case(mode, Box::new(scrutinee), branches)
    }

    /// True if any node of the expression satisfies `pred`.
    pub fn any(&self, pred: &mut impl FnMut(&Expr) -> bool) -> bool {
        if pred(self) {
            return true;
        }
        match self {
            Expr::Var(_) => false,
            Expr::Comb(_, _, args) => args.iter().any(|a| a.any(pred)),
            Expr::Case(_, s, branches) => s.any(pred) || branches.iter().any(|b| b.body.any(pred)),
            Expr::Or(l, r) => l.any(pred) || r.any(pred),
            Expr::Free(_, b) => b.any(pred),
        }
    }

    /// Number of nodes; used by generators and benches.
    pub fn size(&self) -> usize {
        let mut n = 0;
        self.any(&mut |_| {
            n += 1;
            false
        });
        n
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Rule {
    Defined { args: Vec<String>, body: Expr },
    External(String),
}

impl Rule {
    pub fn body(&self) -> Option<&Expr> {
        match self {
            Rule::Defined { body, .. } => Some(body),
            Rule::External(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FuncDecl {
    pub name: QName,
    pub arity: usize,
    pub visibility: Visibility,
    pub type_sig: TypeExpr,
    pub rule: Rule,
}

impl FuncDecl {
    pub fn is_external(&self) -> bool {
        matches!(self.rule, Rule::External(_))
    }

    pub fn body(&self) -> Option<&Expr> {
        self.rule.body()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Fixity {
    InfixLeft,
    InfixRight,
    InfixNone,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OpDecl {
    pub name: QName,
    pub fixity: Fixity,
    pub precedence: u8,
}

/// One module of a flat program.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Prog {
    pub name: String,
    pub imports: Vec<String>,
    pub types: Vec<TypeDecl>,
    pub functions: Vec<FuncDecl>,
    pub operators: Vec<OpDecl>,
}

impl Prog {
    pub fn empty(name: impl Into<String>) -> Prog {
        Prog {
            name: name.into(),
            imports: Vec::new(),
            types: Vec::new(),
            functions: Vec::new(),
            operators: Vec::new(),
        }
    }

    pub fn function(&self, local_name: &str) -> Option<&FuncDecl> {
        self.functions.iter().find(|f| f.name.name == local_name)
    }

    /// The type declaring the constructor `local_name`, if declared here.
    pub fn type_of_constructor(&self, local_name: &str) -> Option<&TypeDecl> {
        self.types
            .iter()
            .find(|t| t.constructors.iter().any(|c| c.name.name == local_name))
    }
}
