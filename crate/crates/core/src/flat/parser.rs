use std::collections::{BTreeMap, BTreeSet};

use super::lexer::{tokenize, Tok, Token};
use super::{NameEnv, ParseError, SourceSpan};
use crate::ir::{
    Branch, CaseMode, CombKind, ConsDecl, Expr, Fixity, FuncDecl, OpDecl, Pattern, Prog, QName,
    Rule, TypeDecl, TypeExpr, Visibility,
};

/// Parses FlatLang text, resolving unqualified type and constructor names
/// against local declarations and, failing that, `Prelude` when imported.
pub fn parse_module(text: &str) -> Result<Prog, ParseError> {
    parse_module_with(text, &NameEnv::default())
}

/// Like [`parse_module`], with the exports of imported modules available
/// for resolving unqualified uppercase names.
pub fn parse_module_with(text: &str, env: &NameEnv) -> Result<Prog, ParseError> {
    let tokens = tokenize(text)?;
    let mut p = Parser::new(&tokens);
    let (name, imports) = p.header()?;
    p.module = name.clone();
    let mut prog = Prog::empty(name);
    prog.imports = imports;
    p.decls(&mut prog)?;
    resolve_names(&mut prog, env);
    Ok(prog)
}

/// Reads only `module M imports (...)`.
pub fn parse_header(text: &str) -> Result<(String, Vec<String>), ParseError> {
    let tokens = tokenize(text)?;
    Parser::new(&tokens).header()
}

/// Unqualified uppercase names are parsed with an empty module and fixed
/// up here once every local declaration is known.
fn resolve_names(prog: &mut Prog, env: &NameEnv) {
    let local_types: BTreeSet<String> = prog.types.iter().map(|t| t.name.name.clone()).collect();
    let local_cons: BTreeSet<String> = prog
        .types
        .iter()
        .flat_map(|t| t.constructors.iter().map(|c| c.name.name.clone()))
        .collect();
    let resolver = Resolver {
        module: &prog.name,
        imports: &prog.imports,
        env,
        local_types: &local_types,
        local_cons: &local_cons,
    };
    for t in &mut prog.types {
        for c in &mut t.constructors {
            for a in &mut c.arg_types {
                resolver.type_expr(a);
            }
        }
    }
    for f in &mut prog.functions {
        resolver.type_expr(&mut f.type_sig);
        if let Rule::Defined { body, .. } = &mut f.rule {
            resolver.expr(body);
        }
    }
}

struct Resolver<'a> {
    module: &'a str,
    imports: &'a [String],
    env: &'a NameEnv,
    local_types: &'a BTreeSet<String>,
    local_cons: &'a BTreeSet<String>,
}

impl Resolver<'_> {
    fn pick(&self, name: &str, local: &BTreeSet<String>, is_type: bool) -> String {
        if local.contains(name) {
            return self.module.to_string();
        }
        let exports = |m: &str| self.env.exports(m, name, is_type);
        let has_prelude = self.imports.iter().any(|i| i == "Prelude");
        if has_prelude && exports("Prelude") == Some(true) {
            return "Prelude".into();
        }
        if let Some(m) = self.imports.iter().find(|m| exports(m) == Some(true)) {
            return m.clone();
        }
        if has_prelude && exports("Prelude").is_none() {
            return "Prelude".into();
        }
        self.module.to_string()
    }

    fn fix(&self, q: &mut QName, is_type: bool) {
        if q.module.is_empty() {
            let local = if is_type {
                self.local_types
            } else {
                self.local_cons
            };
            q.module = self.pick(&q.name, local, is_type);
        }
    }

    fn type_expr(&self, t: &mut TypeExpr) {
        match t {
            TypeExpr::Var(_) => {}
            TypeExpr::Cons(name, args) => {
                self.fix(name, true);
                args.iter_mut().for_each(|a| self.type_expr(a));
            }
            TypeExpr::Func(d, r) => {
                self.type_expr(d);
                self.type_expr(r);
            }
        }
    }

    fn expr(&self, e: &mut Expr) {
        match e {
            Expr::Var(_) => {}
            Expr::Comb(kind, name, args) => {
                if *kind == CombKind::ConsCall {
                    self.fix(name, false);
                }
                args.iter_mut().for_each(|a| self.expr(a));
            }
            Expr::Case(_, s, branches) => {
                self.expr(s);
                for b in branches {
                    self.fix(&mut b.pattern.constructor, false);
                    self.expr(&mut b.body);
                }
            }
            Expr::Or(l, r) => {
                self.expr(l);
                self.expr(r);
            }
            Expr::Free(_, b) => self.expr(b),
        }
    }
}

/// Type variable spelling: `a`..`z` are 0..25, a letter followed by digits
/// `xN` is `(x - 'a') + 26 * N`.
pub(crate) fn type_var_index(name: &str) -> Option<u32> {
    let mut chars = name.chars();
    let letter = chars.next().filter(|c| c.is_ascii_lowercase())?;
    let base = letter as u32 - 'a' as u32;
    let rest = chars.as_str();
    if rest.is_empty() {
        return Some(base);
    }
    if !rest.chars().all(|c| c.is_ascii_digit()) || rest.starts_with('0') {
        return None;
    }
    let n: u32 = rest.parse().ok()?;
    n.checked_mul(26)?.checked_add(base)
}

pub(crate) fn type_var_name(index: u32) -> String {
    let letter = char::from(b'a' + (index % 26) as u8);
    match index / 26 {
        0 => letter.to_string(),
        n => format!("{letter}{n}"),
    }
}

struct FunctionParts {
    sig: Option<TypeExpr>,
    rule: Option<(Rule, Option<usize>)>,
    private: bool,
    span: SourceSpan,
}

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
    module: String,
}

type PResult<T> = Result<T, ParseError>;

impl<'t> Parser<'t> {
    fn new(tokens: &'t [Token]) -> Self {
        Parser {
            tokens,
            pos: 0,
            module: String::new(),
        }
    }

    fn peek(&self) -> &'t Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn peek_tok(&self) -> &'t Tok {
        &self.peek().tok
    }

    fn next(&mut self) -> &'t Token {
        let t = self.peek();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn error_at(&self, token: &Token, message: impl Into<String>, expected: &[&str]) -> ParseError {
        ParseError {
            span: token.span,
            message: message.into(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        let t = self.peek();
        let msg = format!("unexpected {}", t.tok.describe());
        self.error_at(t, msg, expected)
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek_tok(), Tok::Punct(q) if *q == p)
    }

    fn is_keyword(&self, k: &str) -> bool {
        matches!(self.peek_tok(), Tok::Keyword(q) if *q == k)
    }

    fn expect_punct(&mut self, p: &'static str) -> PResult<()> {
        if self.is_punct(p) {
            self.next();
            Ok(())
        } else {
            Err(self.unexpected(&[&format!("`{p}`")]))
        }
    }

    fn expect_keyword(&mut self, k: &'static str) -> PResult<()> {
        if self.is_keyword(k) {
            self.next();
            Ok(())
        } else {
            Err(self.unexpected(&[&format!("keyword `{k}`")]))
        }
    }

    /// A token in column 1 starts a new declaration and ends every
    /// juxtaposition sequence.
    fn at_decl_start(&self) -> bool {
        self.pos > 0 && self.peek().span.column == 1 && self.peek_tok() != &Tok::Eof
    }

    fn var_id(&mut self) -> PResult<String> {
        match self.peek_tok() {
            Tok::VarId(s) => {
                self.next();
                Ok(s.clone())
            }
            _ => Err(self.unexpected(&["variable"])),
        }
    }

    fn module_id(&mut self) -> PResult<String> {
        match self.peek_tok() {
            Tok::ConId(s) | Tok::VarId(s) => {
                self.next();
                Ok(s.clone())
            }
            Tok::Qualified(m, n) => {
                self.next();
                Ok(format!("{m}.{n}"))
            }
            _ => Err(self.unexpected(&["module name"])),
        }
    }

    fn header(&mut self) -> PResult<(String, Vec<String>)> {
        self.expect_keyword("module")?;
        let name = self.module_id()?;
        self.expect_keyword("imports")?;
        self.expect_punct("(")?;
        let mut imports = Vec::new();
        if !self.is_punct(")") {
            imports.push(self.module_id()?);
            while self.is_punct(",") {
                self.next();
                imports.push(self.module_id()?);
            }
        }
        self.expect_punct(")")?;
        Ok((name, imports))
    }

    fn decls(&mut self, prog: &mut Prog) -> PResult<()> {
        let mut order: Vec<String> = Vec::new();
        let mut parts: BTreeMap<String, FunctionParts> = BTreeMap::new();
        while self.peek_tok() != &Tok::Eof {
            let start = self.peek();
            let private = if self.is_keyword("private") {
                self.next();
                true
            } else {
                false
            };
            match self.peek_tok() {
                Tok::Keyword("data") => {
                    let decl = self.data_decl(private)?;
                    prog.types.push(decl);
                }
                Tok::Keyword(k @ ("infixl" | "infixr" | "infix")) => {
                    let fixity = match *k {
                        "infixl" => Fixity::InfixLeft,
                        "infixr" => Fixity::InfixRight,
                        _ => Fixity::InfixNone,
                    };
                    self.next();
                    let prec_tok = self.next();
                    let precedence = match prec_tok.tok {
                        Tok::Int(n) if n <= u64::from(u8::MAX) => n as u8,
                        _ => {
                            return Err(self.error_at(
                                prec_tok,
                                "expected precedence digit",
                                &["digit"],
                            ))
                        }
                    };
                    let name = match self.peek_tok() {
                        Tok::OpSym(s) => s.clone(),
                        Tok::OpName(m, s) if m.is_empty() => s.clone(),
                        _ => return Err(self.unexpected(&["operator"])),
                    };
                    self.next();
                    prog.operators.push(OpDecl {
                        name: QName::new(self.module.clone(), name),
                        fixity,
                        precedence,
                    });
                }
                Tok::VarId(_) | Tok::OpName(..) => {
                    let name = self.function_name()?;
                    let entry = parts.entry(name.clone()).or_insert_with(|| {
                        order.push(name.clone());
                        FunctionParts {
                            sig: None,
                            rule: None,
                            private: false,
                            span: start.span,
                        }
                    });
                    entry.private |= private;
                    if self.is_punct("::") {
                        self.next();
                        if entry.sig.is_some() {
                            return Err(self.error_at(
                                start,
                                format!("duplicate type signature for {name}"),
                                &[],
                            ));
                        }
                        let ty = self.type_expr()?;
                        parts.get_mut(&name).expect("entry").sig = Some(ty);
                    } else {
                        if entry.rule.is_some() {
                            return Err(self.error_at(
                                start,
                                format!("duplicate definition of {name}"),
                                &[],
                            ));
                        }
                        let rule = self.rule()?;
                        parts.get_mut(&name).expect("entry").rule = Some(rule);
                    }
                }
                _ => return Err(self.unexpected(&["declaration"])),
            }
        }
        for name in order {
            let FunctionParts {
                sig,
                rule,
                private,
                span,
            } = parts.remove(&name).expect("ordered names have parts");
            let err = |message: String| ParseError {
                span,
                message,
                expected: vec![],
            };
            let type_sig = sig.ok_or_else(|| err(format!("missing type signature for {name}")))?;
            let (rule, explicit) =
                rule.ok_or_else(|| err(format!("signature for {name} lacks a definition")))?;
            let arity = match (&rule, explicit) {
                (Rule::Defined { args, .. }, _) => args.len(),
                (Rule::External(_), Some(n)) => n,
                (Rule::External(_), None) => type_sig.arrow_depth(),
            };
            prog.functions.push(FuncDecl {
                name: QName::new(self.module.clone(), name),
                arity,
                visibility: if private {
                    Visibility::Private
                } else {
                    Visibility::Public
                },
                type_sig,
                rule,
            });
        }
        Ok(())
    }

    fn function_name(&mut self) -> PResult<String> {
        match self.peek_tok() {
            Tok::VarId(s) => {
                self.next();
                Ok(s.clone())
            }
            Tok::OpName(m, s) if m.is_empty() => {
                self.next();
                Ok(s.clone())
            }
            _ => Err(self.unexpected(&["function name"])),
        }
    }

    fn rule(&mut self) -> PResult<(Rule, Option<usize>)> {
        let mut args = Vec::new();
        while let Tok::VarId(_) = self.peek_tok() {
            args.push(self.var_id()?);
        }
        if self.is_keyword("external") {
            self.next();
            let mut explicit = (!args.is_empty()).then_some(args.len());
            if let Tok::Int(n) = self.peek_tok() {
                let n = *n as usize;
                if !args.is_empty() && n != args.len() {
                    let t = self.next();
                    return Err(self.error_at(
                        t,
                        "arity disagrees with argument list",
                        &["string"],
                    ));
                }
                self.next();
                explicit = Some(n);
            }
            let t = self.next();
            let Tok::Str(entry) = &t.tok else {
                return Err(self.error_at(t, "expected external entry name", &["string"]));
            };
            return Ok((Rule::External(entry.clone()), explicit));
        }
        self.expect_punct("=")?;
        let mut scope = args.clone();
        let body = self.expr(&mut scope)?;
        Ok((Rule::Defined { args, body }, None))
    }

    fn data_decl(&mut self, private: bool) -> PResult<TypeDecl> {
        self.expect_keyword("data")?;
        let t = self.next();
        let Tok::ConId(name) = &t.tok else {
            return Err(self.error_at(t, "expected type name", &["type constructor"]));
        };
        let mut type_vars = Vec::new();
        while let (false, Tok::VarId(v)) = (self.at_decl_start(), self.peek_tok()) {
            let tv = type_var_index(v).ok_or_else(|| self.bad_type_var(v))?;
            self.next();
            type_vars.push(tv);
        }
        // `data T a` without constructors declares an abstract type.
        let mut constructors = Vec::new();
        if self.is_punct("=") {
            self.next();
            constructors.push(self.cons_decl()?);
            while self.is_punct("|") {
                self.next();
                constructors.push(self.cons_decl()?);
            }
        }
        Ok(TypeDecl {
            name: QName::new(self.module.clone(), name.clone()),
            visibility: if private {
                Visibility::Private
            } else {
                Visibility::Public
            },
            type_vars,
            constructors,
        })
    }

    fn bad_type_var(&self, v: &str) -> ParseError {
        self.error_at(
            self.peek(),
            format!("type variable `{v}` must be a letter optionally followed by a number"),
            &["type variable"],
        )
    }

    fn cons_decl(&mut self) -> PResult<ConsDecl> {
        let private = if self.is_keyword("private") {
            self.next();
            true
        } else {
            false
        };
        let t = self.next();
        let Tok::ConId(name) = &t.tok else {
            return Err(self.error_at(t, "expected constructor name", &["constructor"]));
        };
        let mut arg_types = Vec::new();
        while !self.at_decl_start() && self.starts_atype() {
            arg_types.push(self.atype()?);
        }
        Ok(ConsDecl {
            name: QName::new(self.module.clone(), name.clone()),
            arity: arg_types.len(),
            visibility: if private {
                Visibility::Private
            } else {
                Visibility::Public
            },
            arg_types,
        })
    }

    fn starts_atype(&self) -> bool {
        matches!(
            self.peek_tok(),
            Tok::VarId(_) | Tok::ConId(_) | Tok::Qualified(..) | Tok::Punct("(")
        )
    }

    fn type_name(&mut self) -> Option<QName> {
        let q = match self.peek_tok() {
            Tok::ConId(s) => QName::new("", s.clone()),
            Tok::Qualified(m, n) if n.starts_with(|c: char| c.is_ascii_uppercase()) => {
                QName::new(m.clone(), n.clone())
            }
            _ => return None,
        };
        self.next();
        Some(q)
    }

    fn type_expr(&mut self) -> PResult<TypeExpr> {
        let domain = self.btype()?;
        if self.is_punct("->") {
            self.next();
            let range = self.type_expr()?;
            return Ok(TypeExpr::func(domain, range));
        }
        Ok(domain)
    }

    fn btype(&mut self) -> PResult<TypeExpr> {
        if let Some(name) = self.type_name() {
            let mut args = Vec::new();
            while !self.at_decl_start() && self.starts_atype() {
                args.push(self.atype()?);
            }
            return Ok(TypeExpr::Cons(name, args));
        }
        self.atype()
    }

    fn atype(&mut self) -> PResult<TypeExpr> {
        if let Some(name) = self.type_name() {
            return Ok(TypeExpr::Cons(name, vec![]));
        }
        match self.peek_tok() {
            Tok::VarId(v) => {
                let tv = type_var_index(v).ok_or_else(|| self.bad_type_var(v))?;
                self.next();
                Ok(TypeExpr::Var(tv))
            }
            Tok::Punct("(") => {
                self.next();
                let t = self.type_expr()?;
                self.expect_punct(")")?;
                Ok(t)
            }
            _ => Err(self.unexpected(&["type"])),
        }
    }

    fn expr(&mut self, scope: &mut Vec<String>) -> PResult<Expr> {
        match self.peek_tok() {
            Tok::Keyword(k @ ("case" | "fcase")) => {
                let mode = if *k == "case" {
                    CaseMode::Rigid
                } else {
                    CaseMode::Flex
                };
                self.next();
                let scrutinee = self.expr(scope)?;
                self.expect_keyword("of")?;
                self.expect_punct("{")?;
                let mut branches = vec![self.branch(scope)?];
                while self.is_punct(";") {
                    self.next();
                    if self.is_punct("}") {
                        break;
                    }
                    branches.push(self.branch(scope)?);
                }
                self.expect_punct("}")?;
                Ok(Expr::case(mode, scrutinee, branches))
            }
            Tok::Keyword("free") => {
                self.next();
                let mut vars = vec![self.var_id()?];
                while self.is_punct(",") {
                    self.next();
                    vars.push(self.var_id()?);
                }
                self.expect_keyword("in")?;
                let mark = scope.len();
                scope.extend(vars.iter().cloned());
                let body = self.expr(scope);
                scope.truncate(mark);
                Ok(Expr::free(vars, body?))
            }
            _ => self.app(scope),
        }
    }

    fn branch(&mut self, scope: &mut Vec<String>) -> PResult<Branch> {
        let constructor = self
            .type_name()
            .ok_or_else(|| self.unexpected(&["constructor pattern"]))?;
        let mut vars = Vec::new();
        while let Tok::VarId(_) = self.peek_tok() {
            vars.push(self.var_id()?);
        }
        self.expect_punct("->")?;
        let mark = scope.len();
        scope.extend(vars.iter().cloned());
        let body = self.expr(scope);
        scope.truncate(mark);
        Ok(Branch {
            pattern: Pattern { constructor, vars },
            body: body?,
        })
    }

    fn starts_atom(&self) -> bool {
        matches!(
            self.peek_tok(),
            Tok::VarId(_) | Tok::ConId(_) | Tok::Qualified(..) | Tok::OpName(..) | Tok::Punct("(")
        )
    }

    /// A name usable as an application head: `(kind, qname)` or a bound
    /// variable.
    fn head_name(&mut self, scope: &[String]) -> Option<Result<(CombKind, QName), String>> {
        let r = match self.peek_tok() {
            Tok::VarId(v) if scope.contains(v) => Err(v.clone()),
            Tok::VarId(v) => Ok((
                CombKind::FuncCall,
                QName::new(self.module.clone(), v.clone()),
            )),
            Tok::ConId(c) => Ok((CombKind::ConsCall, QName::new("", c.clone()))),
            Tok::Qualified(m, n) => {
                let kind = if n.starts_with(|c: char| c.is_ascii_uppercase()) {
                    CombKind::ConsCall
                } else {
                    CombKind::FuncCall
                };
                Ok((kind, QName::new(m.clone(), n.clone())))
            }
            Tok::OpName(m, n) => {
                let module = if m.is_empty() {
                    self.module.clone()
                } else {
                    m.clone()
                };
                Ok((CombKind::FuncCall, QName::new(module, n.clone())))
            }
            _ => return None,
        };
        self.next();
        Some(r)
    }

    fn app(&mut self, scope: &mut Vec<String>) -> PResult<Expr> {
        let head_tok = self.peek();
        match self.head_name(scope) {
            Some(Ok((kind, name))) => {
                let mut args = Vec::new();
                while !self.at_decl_start() && self.starts_atom() {
                    args.push(self.atom(scope)?);
                }
                Ok(Expr::Comb(kind, name, args))
            }
            Some(Err(var)) => {
                if !self.at_decl_start() && self.starts_atom() {
                    return Err(self.error_at(
                        head_tok,
                        format!("variable `{var}` cannot be applied; use Prelude.apply"),
                        &[],
                    ));
                }
                Ok(Expr::Var(var))
            }
            None if self.is_punct("(") => {
                let e = self.paren(scope)?;
                if !self.at_decl_start() && self.starts_atom() {
                    return Err(self.error_at(head_tok, "application head must be a name", &[]));
                }
                Ok(e)
            }
            None => Err(self.unexpected(&["expression"])),
        }
    }

    fn atom(&mut self, scope: &mut Vec<String>) -> PResult<Expr> {
        match self.head_name(scope) {
            Some(Ok((kind, name))) => Ok(Expr::Comb(kind, name, vec![])),
            Some(Err(var)) => Ok(Expr::Var(var)),
            None => self.paren(scope),
        }
    }

    fn paren(&mut self, scope: &mut Vec<String>) -> PResult<Expr> {
        self.expect_punct("(")?;
        let first = self.expr(scope)?;
        if self.is_keyword("or") {
            self.next();
            let second = self.expr(scope)?;
            self.expect_punct(")")?;
            return Ok(Expr::or(first, second));
        }
        self.expect_punct(")")?;
        Ok(first)
    }
}
