//! The analysis catalog.
//!
//! Local predicates look at one function. Global predicates quantify a local
//! property over the reflexive reachable set `reach(f)` of the call graph;
//! a reachable callee missing from the function list makes the answer the
//! conservative one for that predicate.

mod completeness;
mod facts;
mod reach;
mod registry;

use std::collections::{BTreeMap, BTreeSet, HashMap};

pub use completeness::{
    pattern_completeness, CompletenessReport, Incompleteness, UnknownConstructor,
};
pub use facts::{ExternalFacts, Facts, FactsError, EXTERNALS_FILE};
pub use reach::CallIndex;
pub use registry::{default_registry, import_usage_report, messages};

use crate::exec::ExecMode;
use crate::ir::{collect_calls, CaseMode, Expr, FuncDecl, QName, Rule, TypeDecl};
use crate::store::ProgramStore;

/// Functions named in the body; nothing for externals.
pub fn calls_directly(func: &FuncDecl) -> BTreeSet<QName> {
    func.body().map(collect_calls).unwrap_or_default()
}

/// Whether the body contains a disjunction. Externals answer from facts.
pub fn is_overlapping(func: &FuncDecl, facts: &ExternalFacts) -> bool {
    match &func.rule {
        Rule::External(_) => facts.lookup(&func.name).overlapping,
        Rule::Defined { body, .. } => body.any(&mut |e| matches!(e, Expr::Or(..))),
    }
}

pub fn has_free_binder(func: &FuncDecl) -> bool {
    func.body()
        .is_some_and(|b| b.any(&mut |e| matches!(e, Expr::Free(..))))
}

pub fn has_rigid_case(func: &FuncDecl) -> bool {
    func.body()
        .is_some_and(|b| b.any(&mut |e| matches!(e, Expr::Case(CaseMode::Rigid, ..))))
}

/// Whether every variable occurs at most once on each execution path of
/// the body. Externals count as right-linear.
pub fn is_right_linear(func: &FuncDecl) -> bool {
    let Some(body) = func.body() else { return true };
    let mut linear = true;
    let counts = occurrences(body, &mut linear);
    linear && counts.values().all(|&n| n <= 1)
}

/// Occurrence counts of free variables: alternatives combine with max,
/// everything else with sum. Clears `linear` when a binder's own variables
/// occur more than once in its scope.
fn occurrences(e: &Expr, linear: &mut bool) -> HashMap<String, u32> {
    match e {
        Expr::Var(v) => HashMap::from([(v.clone(), 1)]),
        Expr::Comb(_, _, args) => {
            let mut acc = HashMap::new();
            for a in args {
                add(&mut acc, occurrences(a, linear));
            }
            acc
        }
        Expr::Or(l, r) => {
            let mut acc = occurrences(l, linear);
            join(&mut acc, occurrences(r, linear));
            acc
        }
        Expr::Free(vars, body) => bind(occurrences(body, linear), vars, linear),
        Expr::Case(_, s, branches) => {
            let mut alts = HashMap::new();
            for b in branches {
                join(
                    &mut alts,
                    bind(occurrences(&b.body, linear), &b.pattern.vars, linear),
                );
            }
            let mut acc = occurrences(s, linear);
            add(&mut acc, alts);
            acc
        }
    }
}

fn add(acc: &mut HashMap<String, u32>, other: HashMap<String, u32>) {
    for (v, n) in other {
        *acc.entry(v).or_insert(0) += n;
    }
}

fn join(acc: &mut HashMap<String, u32>, other: HashMap<String, u32>) {
    for (v, n) in other {
        let slot = acc.entry(v).or_insert(0);
        *slot = (*slot).max(n);
    }
}

fn bind(
    mut counts: HashMap<String, u32>,
    vars: &[String],
    linear: &mut bool,
) -> HashMap<String, u32> {
    for v in vars {
        if counts.remove(v).is_some_and(|n| n > 1) {
            *linear = false;
        }
    }
    counts
}

/// Global predicates over one function list, sharing one call index.
/// Every result vector is in the order of the input list.
pub struct Globals<'a> {
    index: CallIndex<'a>,
    facts: &'a ExternalFacts,
    mode: ExecMode,
}

impl<'a> Globals<'a> {
    pub fn new(funcs: &[&'a FuncDecl], facts: &'a ExternalFacts) -> Self {
        Self::with_mode(funcs, facts, ExecMode::default())
    }

    pub fn with_mode(funcs: &[&'a FuncDecl], facts: &'a ExternalFacts, mode: ExecMode) -> Self {
        Globals {
            index: CallIndex::build_with(funcs, mode),
            facts,
            mode,
        }
    }

    pub fn index(&self) -> &CallIndex<'a> {
        &self.index
    }

    fn local(&self, p: impl Fn(&FuncDecl) -> bool + Sync + Send) -> Vec<bool> {
        self.mode.map(self.index.funcs(), |f| p(f))
    }

    pub fn nondeterministic(&self) -> Vec<bool> {
        let local = self.local(|f| is_overlapping(f, self.facts));
        self.index.exists(self.mode, &local, true)
    }

    pub fn set_valued(&self) -> Vec<bool> {
        let local = self.local(|f| {
            is_overlapping(f, self.facts)
                || has_free_binder(f)
                || (f.is_external() && self.facts.lookup(&f.name).introduces_free_vars)
        });
        self.index.exists(self.mode, &local, true)
    }

    pub fn solution_complete(&self) -> Vec<bool> {
        let local = self.local(|f| match &f.rule {
            Rule::External(_) => !self.facts.lookup(&f.name).suspends,
            Rule::Defined { .. } => !has_rigid_case(f),
        });
        self.index.forall(self.mode, &local, false)
    }

    pub fn pure(&self) -> Vec<bool> {
        let local = self.local(|f| !f.is_external() || !self.facts.lookup(&f.name).impure);
        self.index.forall(self.mode, &local, false)
    }

    pub fn right_linear(&self) -> Vec<bool> {
        let local = self.local(is_right_linear);
        self.index.forall(self.mode, &local, false)
    }

    /// An unknown constructor counts as incomplete.
    pub fn totally_defined(&self, types: &[&TypeDecl]) -> Vec<bool> {
        let local =
            self.local(|f| pattern_completeness(types, f, self.facts).is_ok_and(|r| r.complete()));
        self.index.forall(self.mode, &local, false)
    }

    /// Non-reflexive transitive closure of the direct calls, dangling names
    /// included.
    pub fn depends_on(&self) -> Vec<BTreeSet<QName>> {
        let ix = &self.index;
        self.mode.map_range(ix.len(), |i| {
            let mut out: BTreeSet<QName> = ix
                .reach(i)
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| ix.funcs()[j].name.clone())
                .collect();
            if ix.is_recursive(i) {
                out.insert(ix.funcs()[i].name.clone());
            }
            out.extend(ix.reachable_dangling(i));
            out
        })
    }

    /// For each function, the functions of its own module that call it.
    pub fn called_by(&self) -> Vec<BTreeSet<QName>> {
        let ix = &self.index;
        let mut out = vec![BTreeSet::new(); ix.len()];
        for (g, func) in ix.funcs().iter().enumerate() {
            for &f in ix.direct(g) {
                if ix.funcs()[f].name.module == func.name.module {
                    out[f].insert(func.name.clone());
                }
            }
        }
        out
    }

    /// Functions that reach a callee absent from the list, with those names.
    pub fn unresolved(&self) -> BTreeMap<QName, BTreeSet<QName>> {
        let ix = &self.index;
        (0..ix.len())
            .filter(|&i| ix.reaches_dangling(i))
            .map(|i| (ix.funcs()[i].name.clone(), ix.reachable_dangling(i)))
            .collect()
    }

    /// Pairs each function name with its entry of `values`.
    pub fn pairs<T>(&self, values: Vec<T>) -> Vec<(QName, T)> {
        self.index
            .funcs()
            .iter()
            .map(|f| f.name.clone())
            .zip(values)
            .collect()
    }
}

pub fn depends_on(funcs: &[&FuncDecl], target: &QName) -> Option<BTreeSet<QName>> {
    let facts = ExternalFacts::default();
    let g = Globals::new(funcs, &facts);
    let i = g.index().index_of(target)?;
    g.depends_on().into_iter().nth(i)
}

/// `{ g in module | target ∈ callsDirectly(g) }`.
pub fn called_by(funcs: &[&FuncDecl], module: &str, target: &QName) -> BTreeSet<QName> {
    funcs
        .iter()
        .filter(|g| g.name.module == module && calls_directly(g).contains(target))
        .map(|g| g.name.clone())
        .collect()
}

pub fn nondeterministic(funcs: &[&FuncDecl], facts: &ExternalFacts) -> Vec<(QName, bool)> {
    let g = Globals::new(funcs, facts);
    g.pairs(g.nondeterministic())
}

pub fn set_valued(funcs: &[&FuncDecl], facts: &ExternalFacts) -> Vec<(QName, bool)> {
    let g = Globals::new(funcs, facts);
    g.pairs(g.set_valued())
}

pub fn solution_complete(funcs: &[&FuncDecl], facts: &ExternalFacts) -> Vec<(QName, bool)> {
    let g = Globals::new(funcs, facts);
    g.pairs(g.solution_complete())
}

pub fn purity(funcs: &[&FuncDecl], facts: &ExternalFacts) -> Vec<(QName, bool)> {
    let g = Globals::new(funcs, facts);
    g.pairs(g.pure())
}

pub fn is_right_linear_global(funcs: &[&FuncDecl]) -> Vec<(QName, bool)> {
    let facts = ExternalFacts::default();
    let g = Globals::new(funcs, &facts);
    g.pairs(g.right_linear())
}

pub fn totally_defined(
    types: &[&TypeDecl],
    funcs: &[&FuncDecl],
    facts: &ExternalFacts,
) -> Vec<(QName, bool)> {
    let g = Globals::new(funcs, facts);
    g.pairs(g.totally_defined(types))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImportUsage {
    pub module: String,
    pub used: BTreeSet<QName>,
    pub superfluous: bool,
}

/// Which names of each directly imported module `module` refers to, in
/// bodies, patterns, signatures and type declarations. `None` when the
/// module is not loaded.
pub fn import_usage(store: &ProgramStore, module: &str) -> Option<Vec<ImportUsage>> {
    let prog = &store.module(module)?.program;
    let mut referenced = BTreeSet::new();
    let mut note_type = |q: &QName, _| {
        referenced.insert(q.clone());
    };
    for t in &prog.types {
        for c in &t.constructors {
            for a in &c.arg_types {
                a.for_each_cons(&mut note_type);
            }
        }
    }
    for f in &prog.functions {
        f.type_sig.for_each_cons(&mut note_type);
    }
    for f in &prog.functions {
        if let Some(body) = f.body() {
            body.any(&mut |e| {
                match e {
                    Expr::Comb(_, q, _) => {
                        referenced.insert(q.clone());
                    }
                    Expr::Case(_, _, branches) => {
                        referenced.extend(branches.iter().map(|b| b.pattern.constructor.clone()));
                    }
                    _ => {}
                }
                false
            });
        }
    }
    Some(
        prog.imports
            .iter()
            .map(|m| {
                let used: BTreeSet<QName> = referenced
                    .iter()
                    .filter(|q| &q.module == m)
                    .cloned()
                    .collect();
                ImportUsage {
                    module: m.clone(),
                    superfluous: used.is_empty(),
                    used,
                }
            })
            .collect(),
    )
}
