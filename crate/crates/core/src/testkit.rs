//! Random program generators for property tests and benchmarks.
//!
//! [`random_program`] produces well-formed modules exercising every syntactic
//! form. [`reach_case`] produces call-graph programs whose per-function
//! properties are planted by construction, recorded next to the program.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::analyses::{ExternalFacts, Facts};
use crate::ir::{
    Branch, CaseMode, ConsDecl, ConstructorIndex, Expr, Fixity, FuncDecl, OpDecl, Pattern, Prog,
    QName, Rule, TypeDecl, TypeExpr, Visibility,
};

pub fn prelude_bool() -> TypeDecl {
    let cons = |n: &str| ConsDecl {
        name: QName::new("Prelude", n),
        arity: 0,
        visibility: Visibility::Public,
        arg_types: vec![],
    };
    TypeDecl {
        name: QName::new("Prelude", "Bool"),
        visibility: Visibility::Public,
        type_vars: vec![],
        constructors: vec![cons("True"), cons("False")],
    }
}

/// Constructors generated programs may refer to outside their own module.
pub fn prelude_index() -> ConstructorIndex {
    let mut ix = ConstructorIndex::new();
    ix.insert(prelude_bool());
    ix
}

fn visibility(rng: &mut impl Rng) -> Visibility {
    if rng.gen_bool(0.2) {
        Visibility::Private
    } else {
        Visibility::Public
    }
}

struct Gen<'r, R: Rng> {
    rng: &'r mut R,
    module: String,
    types: Vec<TypeDecl>,
    funcs: Vec<(QName, usize)>,
    fresh: usize,
}

const VAR_STEMS: &[&str] = &["x", "y", "xs", "acc", "v", "f0"];
const OPERATORS: &[&str] = &["+++", "&&&", "<$>"];
const ENTRIES: &[&str] = &["prim", "=:=", "quote\"d", "back\\slash", "new\nline"];

impl<'r, R: Rng> Gen<'r, R> {
    fn var(&mut self) -> String {
        self.fresh += 1;
        let stem = VAR_STEMS.choose(self.rng).unwrap();
        if self.rng.gen_bool(0.3) {
            stem.to_string()
        } else {
            format!("{stem}{}", self.fresh)
        }
    }

    fn distinct_vars(&mut self, n: usize) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        while out.len() < n {
            let v = self.var();
            if !out.contains(&v) {
                out.push(v);
            }
        }
        out
    }

    fn type_expr(&mut self, vars: &[u32], depth: u32) -> TypeExpr {
        let choice = self.rng.gen_range(0..if depth == 0 { 3 } else { 5 });
        match choice {
            0 if !vars.is_empty() => TypeExpr::Var(*vars.choose(self.rng).unwrap()),
            0 | 1 => TypeExpr::Cons(QName::new("Prelude", "Bool"), vec![]),
            2 => TypeExpr::Cons(QName::new("Lib", "Opaque"), vec![]),
            3 if !self.types.is_empty() => {
                let t = self.types.choose(self.rng).unwrap().clone();
                let args = t
                    .type_vars
                    .iter()
                    .map(|_| self.type_expr(vars, depth - 1))
                    .collect();
                TypeExpr::Cons(t.name, args)
            }
            _ => TypeExpr::func(
                self.type_expr(vars, depth - 1),
                self.type_expr(vars, depth - 1),
            ),
        }
    }

    fn type_decl(&mut self, i: usize) -> TypeDecl {
        let mut type_vars: Vec<u32> = Vec::new();
        for _ in 0..self.rng.gen_range(0..3) {
            let v = self.rng.gen_range(0..60);
            if !type_vars.contains(&v) {
                type_vars.push(v);
            }
        }
        let name = QName::new(&self.module, format!("T{i}"));
        let n_cons = if self.rng.gen_bool(0.1) {
            0
        } else {
            self.rng.gen_range(1..4)
        };
        let constructors = (0..n_cons)
            .map(|j| {
                let arity = self.rng.gen_range(0..3);
                ConsDecl {
                    name: QName::new(&self.module, format!("C{i}k{j}")),
                    arity,
                    visibility: visibility(self.rng),
                    arg_types: (0..arity).map(|_| self.type_expr(&type_vars, 2)).collect(),
                }
            })
            .collect();
        TypeDecl {
            name,
            visibility: visibility(self.rng),
            type_vars,
            constructors,
        }
    }

    fn all_constructors(&self) -> Vec<ConsDecl> {
        let mut cs: Vec<ConsDecl> = prelude_bool().constructors;
        cs.extend(
            self.types
                .iter()
                .flat_map(|t| t.constructors.iter().cloned()),
        );
        cs
    }

    fn leaf(&mut self, scope: &[String]) -> Expr {
        if !scope.is_empty() && self.rng.gen_bool(0.5) {
            return Expr::Var(scope.choose(self.rng).unwrap().clone());
        }
        if !self.funcs.is_empty() && self.rng.gen_bool(0.3) {
            let (name, _) = self.funcs.choose(self.rng).unwrap().clone();
            return Expr::call(name, vec![]);
        }
        let nullary: Vec<QName> = self
            .all_constructors()
            .into_iter()
            .filter(|c| c.arity == 0)
            .map(|c| c.name)
            .collect();
        Expr::cons(nullary.choose(self.rng).unwrap().clone(), vec![])
    }

    fn expr(&mut self, scope: &mut Vec<String>, depth: u32) -> Expr {
        if depth == 0 {
            return self.leaf(scope);
        }
        match self.rng.gen_range(0..7) {
            0 if !scope.is_empty() => Expr::Var(scope.choose(self.rng).unwrap().clone()),
            0 | 1 => {
                let c = self.all_constructors().choose(self.rng).unwrap().clone();
                let n = if self.rng.gen_bool(0.8) {
                    c.arity
                } else {
                    self.rng.gen_range(0..=c.arity)
                };
                let args = (0..n).map(|_| self.expr(scope, depth - 1)).collect();
                Expr::cons(c.name, args)
            }
            2 => {
                let (name, arity) = if self.funcs.is_empty() || self.rng.gen_bool(0.2) {
                    let ext = [
                        ("Lib", "lookup", 2),
                        ("Prelude", "constrEq", 2),
                        ("Lib", "<=>", 2),
                    ];
                    let (m, n, a) = *ext.choose(self.rng).unwrap();
                    (QName::new(m, n), a)
                } else {
                    self.funcs.choose(self.rng).unwrap().clone()
                };
                let n = self.rng.gen_range(0..=arity);
                let args = (0..n).map(|_| self.expr(scope, depth - 1)).collect();
                Expr::call(name, args)
            }
            3 => {
                let usable: Vec<TypeDecl> = std::iter::once(prelude_bool())
                    .chain(
                        self.types
                            .iter()
                            .filter(|t| !t.constructors.is_empty())
                            .cloned(),
                    )
                    .collect();
                let t = usable.choose(self.rng).unwrap().clone();
                let mut cons = t.constructors.clone();
                cons.shuffle(self.rng);
                cons.truncate(self.rng.gen_range(1..=cons.len()));
                let mode = if self.rng.gen_bool(0.5) {
                    CaseMode::Flex
                } else {
                    CaseMode::Rigid
                };
                let scrutinee = self.expr(scope, depth - 1);
                let branches = cons
                    .into_iter()
                    .map(|c| {
                        let vars = self.distinct_vars(c.arity);
                        let mark = scope.len();
                        scope.extend(vars.iter().cloned());
                        let body = self.expr(scope, depth - 1);
                        scope.truncate(mark);
                        Branch {
                            pattern: Pattern {
                                constructor: c.name,
                                vars,
                            },
                            body,
                        }
                    })
                    .collect();
                Expr::case(mode, scrutinee, branches)
            }
            4 => Expr::or(self.expr(scope, depth - 1), self.expr(scope, depth - 1)),
            5 => {
                let n = self.rng.gen_range(1..3);
                let vars = self.distinct_vars(n);
                let mark = scope.len();
                scope.extend(vars.iter().cloned());
                let body = self.expr(scope, depth - 1);
                scope.truncate(mark);
                Expr::free(vars, body)
            }
            _ => self.expr(scope, depth - 1),
        }
    }
}

/// A random well-formed module named `module` importing `Prelude` and
/// `Lib`. Well-formed against [`prelude_index`].
pub fn random_program(rng: &mut impl Rng, module: &str) -> Prog {
    let mut g = Gen {
        rng,
        module: module.to_string(),
        types: Vec::new(),
        funcs: Vec::new(),
        fresh: 0,
    };
    let n_types = g.rng.gen_range(0..4);
    for i in 0..n_types {
        let t = g.type_decl(i);
        g.types.push(t);
    }
    let n_funcs = g.rng.gen_range(0..7);
    let mut sigs = Vec::new();
    for i in 0..n_funcs {
        let name = if g.rng.gen_bool(0.15) {
            OPERATORS[i % OPERATORS.len()].to_string()
        } else {
            format!("f{i}")
        };
        let name = QName::new(module, name);
        if g.funcs.iter().any(|(n, _)| *n == name) {
            continue;
        }
        let depth = g.rng.gen_range(0..4);
        let mut ty = g.type_expr(&[0, 1, 30], 1);
        for _ in 0..depth {
            ty = TypeExpr::func(g.type_expr(&[0, 1, 30], 1), ty);
        }
        let arity = if g.rng.gen_bool(0.8) {
            ty.arrow_depth()
        } else {
            g.rng.gen_range(0..=ty.arrow_depth())
        };
        g.funcs.push((name.clone(), arity));
        sigs.push((name, arity, ty));
    }
    let mut functions = Vec::new();
    for (name, arity, type_sig) in sigs {
        let rule = if g.rng.gen_bool(0.2) {
            Rule::External(ENTRIES.choose(g.rng).unwrap().to_string())
        } else {
            let args = g.distinct_vars(arity);
            let mut scope = args.clone();
            let body = g.expr(&mut scope, 4);
            Rule::Defined { args, body }
        };
        functions.push(FuncDecl {
            name,
            arity,
            visibility: visibility(g.rng),
            type_sig,
            rule,
        });
    }
    let mut operators = Vec::new();
    for f in functions
        .iter()
        .filter(|f| OPERATORS.contains(&f.name.name.as_str()))
    {
        if g.rng.gen_bool(0.7) {
            let fixities = [Fixity::InfixLeft, Fixity::InfixRight, Fixity::InfixNone];
            operators.push(OpDecl {
                name: f.name.clone(),
                fixity: *fixities.choose(g.rng).unwrap(),
                precedence: g.rng.gen_range(0..10),
            });
        }
    }
    Prog {
        name: module.to_string(),
        imports: vec!["Prelude".into(), "Lib".into()],
        types: g.types,
        functions,
        operators,
    }
}

/// Properties planted into one function of a [`ReachCase`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Planted {
    pub overlapping: bool,
    pub free: bool,
    pub rigid: bool,
    pub incomplete: bool,
    pub nonlinear: bool,
    /// Set for externals; the other flags are then false.
    pub external: Option<Facts>,
}

/// A program of unary functions `f0 … fn-1` over `data T = A | B`, whose
/// call edges and local properties are known independently of analysis.
pub struct ReachCase {
    pub program: Prog,
    pub facts: ExternalFacts,
    /// `edges[i][j]`: `fi` calls `fj`.
    pub edges: Vec<Vec<bool>>,
    pub planted: Vec<Planted>,
}

pub const REACH_MODULE: &str = "R";

fn random_facts(rng: &mut impl Rng) -> Facts {
    Facts {
        suspends: rng.gen(),
        impure: rng.gen(),
        totally_defined: rng.gen(),
        overlapping: rng.gen(),
        introduces_free_vars: rng.gen(),
    }
}

pub fn reach_case(rng: &mut impl Rng, n: usize, edge_prob: f64) -> ReachCase {
    let q = |s: &str| QName::new(REACH_MODULE, s);
    let t = TypeExpr::Cons(q("T"), vec![]);
    let nullary = |s: &str| ConsDecl {
        name: q(s),
        arity: 0,
        visibility: Visibility::Public,
        arg_types: vec![],
    };
    let types = vec![
        TypeDecl {
            name: q("T"),
            visibility: Visibility::Public,
            type_vars: vec![],
            constructors: vec![nullary("A"), nullary("B")],
        },
        TypeDecl {
            name: q("P"),
            visibility: Visibility::Public,
            type_vars: vec![],
            constructors: vec![ConsDecl {
                name: q("Pair"),
                arity: 2,
                visibility: Visibility::Public,
                arg_types: vec![t.clone(), t.clone()],
            }],
        },
    ];
    let mut edges = vec![vec![false; n]; n];
    let mut planted = vec![Planted::default(); n];
    let mut functions = Vec::with_capacity(n);
    let mut facts = BTreeMap::new();
    let a = || Expr::cons(q("A"), vec![]);
    for i in 0..n {
        let name = q(&format!("f{i}"));
        let sig = TypeExpr::func(t.clone(), t.clone());
        if rng.gen_bool(0.15) {
            let f = random_facts(rng);
            facts.insert(name.clone(), f);
            planted[i].external = Some(f);
            functions.push(FuncDecl {
                name,
                arity: 1,
                visibility: Visibility::Public,
                type_sig: sig,
                rule: Rule::External(format!("prim{i}")),
            });
            continue;
        }
        let mut callees: Vec<usize> = (0..n).filter(|_| rng.gen_bool(edge_prob)).collect();
        callees.shuffle(rng);
        let x = || Expr::var("x");
        let mut core = x();
        for &j in &callees {
            edges[i][j] = true;
            core = Expr::call(q(&format!("f{j}")), vec![core]);
        }
        let p = &mut planted[i];
        p.nonlinear = rng.gen_bool(0.2);
        if p.nonlinear {
            core = Expr::cons(q("Pair"), vec![core, x()]);
        }
        p.rigid = rng.gen_bool(0.2);
        if p.rigid {
            let b = |c: &str, body: Expr| Branch {
                pattern: Pattern {
                    constructor: q(c),
                    vars: vec![],
                },
                body,
            };
            core = Expr::case(
                CaseMode::Rigid,
                a(),
                vec![b("A", core.clone()), b("B", core)],
            );
        }
        p.incomplete = rng.gen_bool(0.2);
        if p.incomplete {
            let only = Branch {
                pattern: Pattern {
                    constructor: q("A"),
                    vars: vec![],
                },
                body: core,
            };
            core = Expr::case(CaseMode::Flex, a(), vec![only]);
        }
        p.overlapping = rng.gen_bool(0.2);
        if p.overlapping {
            core = Expr::or(core, x());
        }
        p.free = rng.gen_bool(0.2);
        if p.free {
            core = Expr::free(
                vec!["z".into()],
                Expr::cons(q("Pair"), vec![core, Expr::var("z")]),
            );
        }
        functions.push(FuncDecl {
            name,
            arity: 1,
            visibility: Visibility::Public,
            type_sig: sig,
            rule: Rule::Defined {
                args: vec!["x".into()],
                body: core,
            },
        });
    }
    ReachCase {
        program: Prog {
            name: REACH_MODULE.into(),
            imports: vec![],
            types,
            functions,
            operators: vec![],
        },
        facts: ExternalFacts {
            defaults: Facts::CONSERVATIVE,
            facts,
        },
        edges,
        planted,
    }
}

/// Modules `M0 … Mn-1` where `Mi` imports a random subset of the modules
/// with smaller index, so the import relation is acyclic. Each module
/// declares one type and one function calling a function of every import.
pub fn random_import_dag(rng: &mut impl Rng, n: usize) -> Vec<Prog> {
    (0..n)
        .map(|i| {
            let name = format!("M{i}");
            let imports: Vec<String> = (0..i)
                .filter(|_| rng.gen_bool(0.4))
                .map(|j| format!("M{j}"))
                .collect();
            let ty = QName::new(&name, format!("T{i}"));
            let con = QName::new(&name, format!("K{i}"));
            let body = imports
                .iter()
                .fold(Expr::cons(con.clone(), vec![]), |acc, m| {
                    Expr::or(acc, Expr::call(QName::new(m, "g"), vec![]))
                });
            Prog {
                name: name.clone(),
                imports,
                types: vec![TypeDecl {
                    name: ty.clone(),
                    visibility: Visibility::Public,
                    type_vars: vec![],
                    constructors: vec![ConsDecl {
                        name: con,
                        arity: 0,
                        visibility: Visibility::Public,
                        arg_types: vec![],
                    }],
                }],
                functions: vec![FuncDecl {
                    name: QName::new(&name, "g"),
                    arity: 0,
                    visibility: Visibility::Public,
                    type_sig: TypeExpr::Cons(ty, vec![]),
                    rule: Rule::Defined { args: vec![], body },
                }],
                operators: vec![],
            }
        })
        .collect()
}
