//! Rendered outputs for the corpus compared with files under
//! `corpus/golden`. Set `UPDATE_GOLDEN=1` to rewrite them.

use std::path::PathBuf;

use flatbrowse::graphs::{call_graph, import_graph, Scope};
use flatbrowse::ir::QName;
use flatbrowse::store::ProgramStore;
use flatbrowse::views::{flat_view, interface_view, signature_report, source_view};

fn corpus_dir() -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../corpus"))
}

fn check(file: &str, actual: &str) {
    let path = corpus_dir().join("golden").join(file);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected =
        std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(actual, expected, "{file}");
}

fn store() -> ProgramStore {
    ProgramStore::open(&[corpus_dir()], "Example")
        .unwrap()
        .ensure_full_closure()
        .unwrap()
}

#[test]
fn import_graph_dot() {
    check("imports.dot", &import_graph(&store()).to_dot());
}

#[test]
fn call_graph_of_last() {
    let s = store();
    let funcs = s.all_functions();
    let g = call_graph(&funcs, &QName::new("Example", "last"), &Scope::Global).unwrap();
    check("calls_Example.last.dot", &g.to_dot());
    let local = call_graph(
        &funcs,
        &QName::new("Example", "last"),
        &Scope::Module("Example".into()),
    )
    .unwrap();
    check(
        "calls_Example.last.json",
        &format!("{:#}\n", local.to_json()),
    );
}

#[test]
fn module_views() {
    let s = store();
    let ex = &s.module("Example").unwrap().program;
    check("Example.flat.fl", &flat_view(ex));
    check("Example.source.txt", &source_view(ex));
    check("Example.signatures.txt", &signature_report(ex));
    let prelude = &s.module("Prelude").unwrap().program;
    check("Prelude.interface.fl", &interface_view(prelude));
}
