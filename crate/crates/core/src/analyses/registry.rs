use std::collections::BTreeSet;
use std::sync::Arc;

use super::{
    calls_directly, import_usage, is_overlapping, is_right_linear, pattern_completeness,
    CompletenessReport, ExternalFacts, Globals, UnknownConstructor,
};
use crate::framework::{with_text_renderer, AnalysisResult, FunctionAnalysis, Registry};
use crate::graphs::{call_graph_in, import_graph, Scope};
use crate::ir::{FuncDecl, QName};
use crate::views::{flat_view, interface_view, signature_report, source_view};

/// Result strings of the default analyses.
pub mod messages {
    use std::collections::BTreeSet;

    use crate::ir::QName;

    pub const OVERLAPPING: &str = "Overlapping";
    pub const NOT_OVERLAPPING: &str = "Not Overlapping";
    pub const RIGHT_LINEAR: &str = "Right-linear";
    pub const NOT_RIGHT_LINEAR: &str = "Not right-linear";
    pub const PATTERN_COMPLETE: &str = "Pattern complete";
    pub const PATTERN_INCOMPLETE: &str = "Pattern incomplete";
    pub const TOTALLY_DEFINED: &str = "Totally defined";
    pub const PARTIALLY_DEFINED: &str = "Partially defined";
    pub const SOLUTION_COMPLETE: &str = "Solution complete";
    pub const MAY_SUSPEND: &str = "May suspend";
    pub const NONDETERMINISTIC: &str = "Nondeterministic";
    pub const DETERMINISTIC: &str = "Deterministic";
    pub const SET_VALUED: &str = "Set-valued";
    pub const NOT_SET_VALUED: &str = "Not set-valued";
    pub const PURE: &str = "Pure";
    pub const IMPURE: &str = "Impure";
    pub const NONE: &str = "(none)";

    pub fn show_overlap(overlapping: bool) -> String {
        if overlapping {
            OVERLAPPING
        } else {
            NOT_OVERLAPPING
        }
        .to_string()
    }

    pub fn name_list(names: &BTreeSet<QName>) -> String {
        if names.is_empty() {
            return NONE.to_string();
        }
        names
            .iter()
            .map(QName::to_string)
            .collect::<Vec<_>>()
            .join(", ")
    }

    /// Appends the callees that could not be resolved, if any.
    pub fn with_unresolved(message: String, unresolved: &BTreeSet<QName>) -> String {
        if unresolved.is_empty() {
            message
        } else {
            format!("{message} [unresolved: {}]", name_list(unresolved))
        }
    }
}

use messages::*;

fn yes_no(yes: &'static str, no: &'static str) -> impl Fn(bool) -> &'static str {
    move |b| if b { yes } else { no }
}

/// Pairs each value with the unresolved callees its function reaches.
fn with_diagnostics(g: &Globals<'_>, values: Vec<bool>) -> Vec<(QName, (bool, BTreeSet<QName>))> {
    let unresolved = g.unresolved();
    g.pairs(values)
        .into_iter()
        .map(|(q, v)| {
            let u = unresolved.get(&q).cloned().unwrap_or_default();
            (q, (v, u))
        })
        .collect()
}

fn verdict(
    analysis: FunctionAnalysis<(bool, BTreeSet<QName>)>,
    yes: &'static str,
    no: &'static str,
) -> FunctionAnalysis<AnalysisResult> {
    let show = yes_no(yes, no);
    with_text_renderer(analysis, move |(v, u)| {
        with_unresolved(show(v).to_string(), &u)
    })
}

/// A global predicate rendered with its affirmative or negative message.
fn global_predicate(
    facts: &Arc<ExternalFacts>,
    pick: impl Fn(&Globals<'_>) -> Vec<bool> + Send + Sync + 'static,
    yes: &'static str,
    no: &'static str,
) -> FunctionAnalysis<AnalysisResult> {
    let facts = facts.clone();
    let analysis = FunctionAnalysis::global(move |funcs: &[&FuncDecl]| {
        let g = Globals::new(funcs, &facts);
        with_diagnostics(&g, pick(&g))
    });
    verdict(analysis, yes, no)
}

fn show_completeness(r: Result<CompletenessReport, UnknownConstructor>) -> String {
    match r {
        Ok(r) if r.complete() => PATTERN_COMPLETE.to_string(),
        Ok(r) => {
            let gaps: Vec<String> = r.gaps.iter().map(ToString::to_string).collect();
            format!("{PATTERN_INCOMPLETE} ({})", gaps.join("; "))
        }
        Err(e) => format!("Cannot decide: {e}"),
    }
}

fn graph_analysis(module_scope: bool) -> FunctionAnalysis<AnalysisResult> {
    FunctionAnalysis::global(move |funcs: &[&FuncDecl]| {
        let facts = ExternalFacts::default();
        let g = Globals::new(funcs, &facts);
        funcs
            .iter()
            .map(|f| {
                let scope = if module_scope {
                    Scope::Module(f.name.module.clone())
                } else {
                    Scope::Global
                };
                let graph = call_graph_in(g.index(), &f.name, &scope).expect("root is listed");
                (f.name.clone(), AnalysisResult::graph(graph))
            })
            .collect()
    })
}

fn name_sets(
    pick: impl Fn(&Globals<'_>) -> Vec<BTreeSet<QName>> + Send + Sync + 'static,
) -> FunctionAnalysis<AnalysisResult> {
    let analysis = FunctionAnalysis::global(move |funcs: &[&FuncDecl]| {
        let facts = ExternalFacts::default();
        let g = Globals::new(funcs, &facts);
        let values = pick(&g);
        g.pairs(values)
    });
    with_text_renderer(analysis, |s| name_list(&s))
}

/// The standard catalog. Function analyses, in menu order; the tagged ones
/// are offered for whole modules.
pub fn default_registry(facts: Arc<ExternalFacts>) -> Registry {
    let f_ovl = facts.clone();
    let f_pc = facts.clone();
    let f_tot = facts.clone();
    Registry::new()
        .with_function(
            "Calls directly",
            with_text_renderer(FunctionAnalysis::local(calls_directly), |s| name_list(&s)),
        )
        .with_function("Depends on", name_sets(|g: &Globals<'_>| g.depends_on()))
        .with_function("Dependency graph", graph_analysis(false))
        .with_function("Local dependency graph", graph_analysis(true))
        .with_function("Called by", name_sets(|g: &Globals<'_>| g.called_by()))
        .with_tagged_function(
            "Overlapping rules",
            "OVL",
            with_text_renderer(
                FunctionAnalysis::local(move |f| is_overlapping(f, &f_ovl)),
                show_overlap,
            ),
        )
        .with_tagged_function(
            "Right-linear rules",
            "RL",
            with_text_renderer(FunctionAnalysis::local(is_right_linear), |b| {
                yes_no(RIGHT_LINEAR, NOT_RIGHT_LINEAR)(b).to_string()
            }),
        )
        .with_function(
            "Right-linearity",
            global_predicate(
                &facts,
                |g: &Globals<'_>| g.right_linear(),
                RIGHT_LINEAR,
                NOT_RIGHT_LINEAR,
            ),
        )
        .with_tagged_function(
            "Pattern completeness",
            "PC",
            with_text_renderer(
                FunctionAnalysis::local_data(move |types, f| pattern_completeness(types, f, &f_pc)),
                show_completeness,
            ),
        )
        .with_tagged_function(
            "Totally defined",
            "TOT",
            verdict(
                FunctionAnalysis::global_data(move |types, funcs: &[&FuncDecl]| {
                    let g = Globals::new(funcs, &f_tot);
                    with_diagnostics(&g, g.totally_defined(types))
                }),
                TOTALLY_DEFINED,
                PARTIALLY_DEFINED,
            ),
        )
        .with_tagged_function(
            "Solution complete",
            "SC",
            global_predicate(
                &facts,
                |g: &Globals<'_>| g.solution_complete(),
                SOLUTION_COMPLETE,
                MAY_SUSPEND,
            ),
        )
        .with_tagged_function(
            "Nondeterministic",
            "ND",
            global_predicate(
                &facts,
                |g: &Globals<'_>| g.nondeterministic(),
                NONDETERMINISTIC,
                DETERMINISTIC,
            ),
        )
        .with_tagged_function(
            "Set-valued",
            "SET",
            global_predicate(
                &facts,
                |g: &Globals<'_>| g.set_valued(),
                SET_VALUED,
                NOT_SET_VALUED,
            ),
        )
        .with_tagged_function(
            "Purity",
            "PUR",
            global_predicate(&facts, |g: &Globals<'_>| g.pure(), PURE, IMPURE),
        )
        .with_module("Interface", |p, _| AnalysisResult::Text(interface_view(p)))
        .with_module("Flat", |p, _| AnalysisResult::Text(flat_view(p)))
        .with_module("Source", |p, _| AnalysisResult::Text(source_view(p)))
        .with_module("Signatures", |p, _| {
            AnalysisResult::Text(signature_report(p))
        })
        .with_module("Import graph", |_, store| {
            AnalysisResult::graph(import_graph(store))
        })
        .with_module("Imports usage", |p, store| {
            AnalysisResult::Text(import_usage_report(
                &import_usage(store, &p.name).unwrap_or_default(),
            ))
        })
}

/// One line per import: the names used from it, or `superfluous`.
pub fn import_usage_report(usage: &[super::ImportUsage]) -> String {
    let mut out = String::new();
    for u in usage {
        let used = if u.superfluous {
            "superfluous".to_string()
        } else {
            name_list(&u.used)
        };
        out.push_str(&format!("{}: {used}\n", u.module));
    }
    if out.is_empty() {
        out.push_str("no imports\n");
    }
    out
}
