//! Call graphs and import graphs with canonical ordering.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::analyses::CallIndex;
use crate::ir::{FuncDecl, QName};
use crate::store::ProgramStore;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum NodeKind {
    Function,
    Module,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Node {
    pub id: String,
    pub label: String,
    pub kind: NodeKind,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Edge {
    pub from: String,
    pub to: String,
}

/// Nodes sorted by id, edges sorted by `(from, to)`, no duplicates.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Graph {
    pub title: String,
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
}

impl Graph {
    /// Canonicalizes the given parts. Panics if an edge names an undeclared
    /// node or two nodes share an id with different contents.
    pub fn new(title: impl Into<String>, nodes: Vec<Node>, edges: Vec<(String, String)>) -> Graph {
        let mut by_id: BTreeMap<String, Node> = BTreeMap::new();
        for n in nodes {
            if let Some(prev) = by_id.get(&n.id) {
                assert_eq!(prev, &n, "conflicting nodes for id {}", n.id);
            }
            by_id.insert(n.id.clone(), n);
        }
        let edges: BTreeSet<(String, String)> = edges.into_iter().collect();
        for (a, b) in &edges {
            assert!(
                by_id.contains_key(a) && by_id.contains_key(b),
                "edge {a} -> {b} leaves the graph"
            );
        }
        Graph {
            title: title.into(),
            nodes: by_id.into_values().collect(),
            edges: edges
                .into_iter()
                .map(|(from, to)| Edge { from, to })
                .collect(),
        }
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes
            .binary_search_by(|n| n.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.nodes[i])
    }

    pub fn node_ids(&self) -> BTreeSet<&str> {
        self.nodes.iter().map(|n| n.id.as_str()).collect()
    }

    pub fn to_dot(&self) -> String {
        let mut out = format!("digraph {} {{\n", dot_quote(&self.title));
        for n in &self.nodes {
            out.push_str(&format!("  {};\n", dot_quote(&n.id)));
        }
        for e in &self.edges {
            out.push_str(&format!(
                "  {} -> {};\n",
                dot_quote(&e.from),
                dot_quote(&e.to)
            ));
        }
        out.push_str("}\n");
        out
    }

    /// `{"title","nodes":[{"id","label","kind"}],"edges":[{"from","to"}]}`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("graphs serialize")
    }
}

fn dot_quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Scope {
    Global,
    /// Only edges leaving functions of this module are followed.
    Module(String),
}

fn function_node(q: &QName) -> Node {
    Node {
        id: q.to_string(),
        label: q.name.clone(),
        kind: NodeKind::Function,
    }
}

/// Functions reachable from `root` and the direct calls among them.
/// Callees missing from `funcs` appear as leaves. `None` if `root` is not
/// in `funcs`.
pub fn call_graph(funcs: &[&FuncDecl], root: &QName, scope: &Scope) -> Option<Graph> {
    call_graph_in(&CallIndex::build(funcs), root, scope)
}

/// [`call_graph`] over a prebuilt index.
pub fn call_graph_in(index: &CallIndex<'_>, root: &QName, scope: &Scope) -> Option<Graph> {
    let start = index.index_of(root)?;
    let expands = |i: usize| match scope {
        Scope::Global => true,
        Scope::Module(m) => &index.funcs()[i].name.module == m,
    };
    let mut seen = BTreeSet::from([start]);
    let mut stack = vec![start];
    let mut nodes = vec![function_node(root)];
    let mut edges = Vec::new();
    while let Some(i) = stack.pop() {
        if !expands(i) {
            continue;
        }
        let from = index.funcs()[i].name.to_string();
        for &j in index.direct(i) {
            let callee = &index.funcs()[j].name;
            edges.push((from.clone(), callee.to_string()));
            if seen.insert(j) {
                nodes.push(function_node(callee));
                stack.push(j);
            }
        }
        for callee in index.dangling(i) {
            edges.push((from.clone(), callee.to_string()));
            nodes.push(function_node(callee));
        }
    }
    Some(Graph::new(root.to_string(), nodes, edges))
}

/// One node per loaded module, one edge per declared import.
pub fn import_graph(store: &ProgramStore) -> Graph {
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    for (name, loaded) in store.modules() {
        nodes.push(Node {
            id: name.to_string(),
            label: name.to_string(),
            kind: NodeKind::Module,
        });
        for imp in &loaded.program.imports {
            edges.push((name.to_string(), imp.clone()));
        }
    }
    Graph::new("imports", nodes, edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn module_node(id: &str) -> Node {
        Node {
            id: id.into(),
            label: id.into(),
            kind: NodeKind::Module,
        }
    }

    #[test]
    fn empty_graph_dot() {
        assert_eq!(
            Graph::new("g", vec![], vec![]).to_dot(),
            "digraph \"g\" {\n}\n"
        );
    }

    #[test]
    fn quotes_are_escaped() {
        let g = Graph::new("t", vec![module_node("a\"b")], vec![]);
        assert_eq!(g.to_dot(), "digraph \"t\" {\n  \"a\\\"b\";\n}\n");
    }

    #[test]
    fn diamond_dedup_and_order() {
        let nodes = ["D", "B", "A", "C", "D"].map(module_node).to_vec();
        let e = |a: &str, b: &str| (a.to_string(), b.to_string());
        let g = Graph::new(
            "imports",
            nodes,
            vec![
                e("C", "D"),
                e("A", "C"),
                e("A", "B"),
                e("B", "D"),
                e("A", "B"),
            ],
        );
        assert_eq!(g.nodes.len(), 4);
        assert_eq!(g.edges.len(), 4);
        assert_eq!(
            g.to_dot(),
            "digraph \"imports\" {\n  \"A\";\n  \"B\";\n  \"C\";\n  \"D\";\n  \"A\" -> \"B\";\n  \"A\" -> \"C\";\n  \"B\" -> \"D\";\n  \"C\" -> \"D\";\n}\n"
        );
    }

    #[test]
    #[should_panic(expected = "leaves the graph")]
    fn edges_must_stay_inside() {
        Graph::new("g", vec![module_node("A")], vec![("A".into(), "B".into())]);
    }

    #[test]
    fn json_form() {
        let g = Graph::new("g", vec![module_node("A")], vec![("A".into(), "A".into())]);
        assert_eq!(
            g.to_json(),
            serde_json::json!({"title":"g","nodes":[{"id":"A","label":"A","kind":"Module"}],"edges":[{"from":"A","to":"A"}]})
        );
    }
}
