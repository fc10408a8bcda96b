use std::fmt;

use serde_json::{json, Map, Value};

use crate::ir::{
    Branch, CaseMode, CombKind, ConsDecl, Expr, Fixity, FuncDecl, OpDecl, Pattern, Prog, QName,
    Rule, TypeDecl, TypeExpr, Visibility,
};

/// First violation of the structured schema, located by a path such as
/// `functions[2].rule.body`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructuredError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for StructuredError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "at {}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for StructuredError {}

/// Canonical JSON document: fixed field order, two-space indentation,
/// trailing newline.
pub fn to_structured(program: &Prog) -> Vec<u8> {
    let doc = prog_value(program);
    let mut out = serde_json::to_vec_pretty(&doc).expect("JSON values always serialize");
    out.push(b'\n');
    out
}

pub(crate) fn qname_value(q: &QName) -> Value {
    json!({"mod": q.module, "name": q.name})
}

fn visibility_value(v: Visibility) -> Value {
    Value::from(match v {
        Visibility::Public => "public",
        Visibility::Private => "private",
    })
}

fn type_value(t: &TypeExpr) -> Value {
    match t {
        TypeExpr::Var(i) => json!({ "tvar": i }),
        TypeExpr::Cons(name, args) => json!({
            "tcons": {"name": qname_value(name), "args": args.iter().map(type_value).collect::<Vec<_>>()}
        }),
        TypeExpr::Func(d, r) => json!({"func": {"from": type_value(d), "to": type_value(r)}}),
    }
}

fn expr_value(e: &Expr) -> Value {
    match e {
        Expr::Var(v) => json!({ "var": v }),
        Expr::Comb(kind, name, args) => json!({"comb": {
            "kind": match kind { CombKind::ConsCall => "cons", CombKind::FuncCall => "func" },
            "name": qname_value(name),
            "args": args.iter().map(expr_value).collect::<Vec<_>>(),
        }}),
        Expr::Case(mode, s, branches) => json!({"case": {
            "mode": match mode { CaseMode::Rigid => "rigid", CaseMode::Flex => "flex" },
            "scrutinee": expr_value(s),
            "branches": branches.iter().map(|b| json!({
                "pattern": {"name": qname_value(&b.pattern.constructor), "vars": b.pattern.vars},
                "body": expr_value(&b.body),
            })).collect::<Vec<_>>(),
        }}),
        Expr::Or(l, r) => json!({"or": {"left": expr_value(l), "right": expr_value(r)}}),
        Expr::Free(vars, b) => json!({"free": {"vars": vars, "body": expr_value(b)}}),
    }
}

fn prog_value(p: &Prog) -> Value {
    json!({
        "module": p.name,
        "imports": p.imports,
        "types": p.types.iter().map(|t| json!({
            "name": qname_value(&t.name),
            "visibility": visibility_value(t.visibility),
            "typeVars": t.type_vars,
            "constructors": t.constructors.iter().map(|c| json!({
                "name": qname_value(&c.name),
                "arity": c.arity,
                "visibility": visibility_value(c.visibility),
                "argTypes": c.arg_types.iter().map(type_value).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
        "functions": p.functions.iter().map(|f| json!({
            "name": qname_value(&f.name),
            "arity": f.arity,
            "visibility": visibility_value(f.visibility),
            "type": type_value(&f.type_sig),
            "rule": match &f.rule {
                Rule::Defined { args, body } => json!({"args": args, "body": expr_value(body)}),
                Rule::External(entry) => json!({ "external": entry }),
            },
        })).collect::<Vec<_>>(),
        "operators": p.operators.iter().map(|o| json!({
            "name": qname_value(&o.name),
            "fixity": match o.fixity {
                Fixity::InfixLeft => "infixl",
                Fixity::InfixRight => "infixr",
                Fixity::InfixNone => "infix",
            },
            "precedence": o.precedence,
        })).collect::<Vec<_>>(),
    })
}

pub fn from_structured(bytes: &[u8]) -> Result<Prog, StructuredError> {
    let value: Value = serde_json::from_slice(bytes).map_err(|e| StructuredError {
        path: String::new(),
        message: format!("invalid JSON: {e}"),
    })?;
    read_prog(&At::root(&value))
}

type R<T> = Result<T, StructuredError>;

/// A JSON value together with its location in the document.
struct At<'v> {
    value: &'v Value,
    path: String,
}

impl<'v> At<'v> {
    fn root(value: &'v Value) -> Self {
        At {
            value,
            path: String::new(),
        }
    }

    fn fail<T>(&self, message: impl Into<String>) -> R<T> {
        Err(StructuredError {
            path: self.path.clone(),
            message: message.into(),
        })
    }

    fn child(&self, value: &'v Value, key: &str) -> At<'v> {
        let path = if self.path.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.path)
        };
        At { value, path }
    }

    fn object(&self, keys: &[&str]) -> R<&'v Map<String, Value>> {
        let Some(map) = self.value.as_object() else {
            return self.fail("expected an object");
        };
        if let Some(extra) = map.keys().find(|k| !keys.contains(&k.as_str())) {
            return self.fail(format!("unexpected field {extra:?}"));
        }
        if let Some(missing) = keys.iter().find(|k| !map.contains_key(**k)) {
            return self.fail(format!("missing field {missing:?}"));
        }
        Ok(map)
    }

    fn field(&self, keys: &[&str], key: &str) -> R<At<'v>> {
        let map = self.object(keys)?;
        Ok(self.child(&map[key], key))
    }

    /// Single-key object `{tag: payload}` with the tag from `tags`.
    fn tagged(&self, tags: &[&'static str], what: &str) -> R<(&'static str, At<'v>)> {
        let Some(map) = self.value.as_object() else {
            return self.fail(format!("expected a tagged {what} object"));
        };
        if map.len() != 1 {
            return self.fail(format!("a {what} object has exactly one tag"));
        }
        let (tag, payload) = map.iter().next().expect("one entry");
        match tags.iter().find(|t| **t == tag) {
            Some(t) => Ok((t, self.child(payload, tag))),
            None => self.fail(format!("unknown {what} tag {tag:?}")),
        }
    }

    fn str(&self) -> R<&'v str> {
        match self.value.as_str() {
            Some(s) => Ok(s),
            None => self.fail("expected a string"),
        }
    }

    fn uint(&self) -> R<u64> {
        match self.value.as_u64() {
            Some(n) => Ok(n),
            None => self.fail("expected a non-negative integer"),
        }
    }

    fn items(&self) -> R<Vec<At<'v>>> {
        let Some(arr) = self.value.as_array() else {
            return self.fail("expected an array");
        };
        Ok(arr
            .iter()
            .enumerate()
            .map(|(i, v)| At {
                value: v,
                path: format!("{}[{i}]", self.path),
            })
            .collect())
    }

    fn strings(&self) -> R<Vec<String>> {
        self.items()?
            .iter()
            .map(|a| a.str().map(str::to_string))
            .collect()
    }

    fn list<T>(&self, read: impl Fn(&At<'v>) -> R<T>) -> R<Vec<T>> {
        self.items()?.iter().map(read).collect()
    }
}

fn read_prog(at: &At) -> R<Prog> {
    const KEYS: &[&str] = &["module", "imports", "types", "functions", "operators"];
    Ok(Prog {
        name: at.field(KEYS, "module")?.str()?.to_string(),
        imports: at.field(KEYS, "imports")?.strings()?,
        types: at.field(KEYS, "types")?.list(read_type_decl)?,
        functions: at.field(KEYS, "functions")?.list(read_func)?,
        operators: at.field(KEYS, "operators")?.list(read_op)?,
    })
}

fn read_qname(at: &At) -> R<QName> {
    const KEYS: &[&str] = &["mod", "name"];
    Ok(QName::new(
        at.field(KEYS, "mod")?.str()?,
        at.field(KEYS, "name")?.str()?,
    ))
}

fn read_visibility(at: &At) -> R<Visibility> {
    match at.str()? {
        "public" => Ok(Visibility::Public),
        "private" => Ok(Visibility::Private),
        other => at.fail(format!("unknown visibility {other:?}")),
    }
}

fn read_arity(at: &At) -> R<usize> {
    usize::try_from(at.uint()?).or_else(|_| at.fail("arity out of range"))
}

fn read_type_decl(at: &At) -> R<TypeDecl> {
    const KEYS: &[&str] = &["name", "visibility", "typeVars", "constructors"];
    let type_vars = at
        .field(KEYS, "typeVars")?
        .list(|v| u32::try_from(v.uint()?).or_else(|_| v.fail("type variable out of range")))?;
    Ok(TypeDecl {
        name: read_qname(&at.field(KEYS, "name")?)?,
        visibility: read_visibility(&at.field(KEYS, "visibility")?)?,
        type_vars,
        constructors: at.field(KEYS, "constructors")?.list(|c| {
            const CKEYS: &[&str] = &["name", "arity", "visibility", "argTypes"];
            Ok(ConsDecl {
                name: read_qname(&c.field(CKEYS, "name")?)?,
                arity: read_arity(&c.field(CKEYS, "arity")?)?,
                visibility: read_visibility(&c.field(CKEYS, "visibility")?)?,
                arg_types: c.field(CKEYS, "argTypes")?.list(read_type)?,
            })
        })?,
    })
}

fn read_type(at: &At) -> R<TypeExpr> {
    let (tag, payload) = at.tagged(&["tvar", "tcons", "func"], "type")?;
    match tag {
        "tvar" => u32::try_from(payload.uint()?)
            .map(TypeExpr::Var)
            .or_else(|_| payload.fail("type variable out of range")),
        "tcons" => {
            const KEYS: &[&str] = &["name", "args"];
            Ok(TypeExpr::Cons(
                read_qname(&payload.field(KEYS, "name")?)?,
                payload.field(KEYS, "args")?.list(read_type)?,
            ))
        }
        _ => {
            const KEYS: &[&str] = &["from", "to"];
            Ok(TypeExpr::func(
                read_type(&payload.field(KEYS, "from")?)?,
                read_type(&payload.field(KEYS, "to")?)?,
            ))
        }
    }
}

fn read_func(at: &At) -> R<FuncDecl> {
    const KEYS: &[&str] = &["name", "arity", "visibility", "type", "rule"];
    let rule_at = at.field(KEYS, "rule")?;
    let rule = match rule_at.value.as_object() {
        Some(m) if m.contains_key("external") => {
            Rule::External(rule_at.field(&["external"], "external")?.str()?.to_string())
        }
        _ => {
            const RKEYS: &[&str] = &["args", "body"];
            Rule::Defined {
                args: rule_at.field(RKEYS, "args")?.strings()?,
                body: read_expr(&rule_at.field(RKEYS, "body")?)?,
            }
        }
    };
    Ok(FuncDecl {
        name: read_qname(&at.field(KEYS, "name")?)?,
        arity: read_arity(&at.field(KEYS, "arity")?)?,
        visibility: read_visibility(&at.field(KEYS, "visibility")?)?,
        type_sig: read_type(&at.field(KEYS, "type")?)?,
        rule,
    })
}

fn read_expr(at: &At) -> R<Expr> {
    let (tag, p) = at.tagged(&["var", "comb", "case", "or", "free"], "expression")?;
    match tag {
        "var" => Ok(Expr::Var(p.str()?.to_string())),
        "comb" => {
            const KEYS: &[&str] = &["kind", "name", "args"];
            let kind_at = p.field(KEYS, "kind")?;
            let kind = match kind_at.str()? {
                "cons" => CombKind::ConsCall,
                "func" => CombKind::FuncCall,
                other => return kind_at.fail(format!("unknown call kind {other:?}")),
            };
            Ok(Expr::Comb(
                kind,
                read_qname(&p.field(KEYS, "name")?)?,
                p.field(KEYS, "args")?.list(read_expr)?,
            ))
        }
        "case" => {
            const KEYS: &[&str] = &["mode", "scrutinee", "branches"];
            let mode_at = p.field(KEYS, "mode")?;
            let mode = match mode_at.str()? {
                "rigid" => CaseMode::Rigid,
                "flex" => CaseMode::Flex,
                other => return mode_at.fail(format!("unknown case mode {other:?}")),
            };
            let branches = p.field(KEYS, "branches")?.list(|b| {
                const BKEYS: &[&str] = &["pattern", "body"];
                let pat = b.field(BKEYS, "pattern")?;
                const PKEYS: &[&str] = &["name", "vars"];
                Ok(Branch {
                    pattern: Pattern {
                        constructor: read_qname(&pat.field(PKEYS, "name")?)?,
                        vars: pat.field(PKEYS, "vars")?.strings()?,
                    },
                    body: read_expr(&b.field(BKEYS, "body")?)?,
                })
            })?;
            Ok(Expr::case(
                mode,
                read_expr(&p.field(KEYS, "scrutinee")?)?,
                branches,
            ))
        }
        "or" => {
            const KEYS: &[&str] = &["left", "right"];
            Ok(Expr::or(
                read_expr(&p.field(KEYS, "left")?)?,
                read_expr(&p.field(KEYS, "right")?)?,
            ))
        }
        _ => {
            const KEYS: &[&str] = &["vars", "body"];
            Ok(Expr::free(
                p.field(KEYS, "vars")?.strings()?,
                read_expr(&p.field(KEYS, "body")?)?,
            ))
        }
    }
}

fn read_op(at: &At) -> R<OpDecl> {
    const KEYS: &[&str] = &["name", "fixity", "precedence"];
    let fix_at = at.field(KEYS, "fixity")?;
    let fixity = match fix_at.str()? {
        "infixl" => Fixity::InfixLeft,
        "infixr" => Fixity::InfixRight,
        "infix" => Fixity::InfixNone,
        other => return fix_at.fail(format!("unknown fixity {other:?}")),
    };
    let prec_at = at.field(KEYS, "precedence")?;
    let precedence =
        u8::try_from(prec_at.uint()?).or_else(|_| prec_at.fail("precedence out of range"))?;
    Ok(OpDecl {
        name: read_qname(&at.field(KEYS, "name")?)?,
        fixity,
        precedence,
    })
}
