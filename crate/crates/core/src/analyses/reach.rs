use std::collections::{BTreeSet, HashMap};

use crate::exec::ExecMode;
use crate::ir::{FuncDecl, QName};

use super::calls_directly;

/// Call graph over a list of functions with the reflexive reachable set of
/// every node. Callees absent from the list are kept by name as dangling.
pub struct CallIndex<'a> {
    funcs: Vec<&'a FuncDecl>,
    pos: HashMap<&'a QName, usize>,
    direct: Vec<Vec<usize>>,
    dangling: Vec<BTreeSet<QName>>,
    reach: Vec<Vec<usize>>,
    reaches_dangling: Vec<bool>,
}

impl<'a> CallIndex<'a> {
    pub fn build(funcs: &[&'a FuncDecl]) -> Self {
        Self::build_with(funcs, ExecMode::default())
    }

    pub fn build_with(funcs: &[&'a FuncDecl], mode: ExecMode) -> Self {
        let mut pos = HashMap::with_capacity(funcs.len());
        for (i, f) in funcs.iter().enumerate() {
            pos.entry(&f.name).or_insert(i);
        }
        let edges: Vec<(Vec<usize>, BTreeSet<QName>)> = mode.map(funcs, |f| {
            let mut known = Vec::new();
            let mut dangling = BTreeSet::new();
            for callee in calls_directly(f) {
                match pos.get(&callee) {
                    Some(&j) => known.push(j),
                    None => {
                        dangling.insert(callee);
                    }
                }
            }
            known.sort_unstable();
            known.dedup();
            (known, dangling)
        });
        let (direct, dangling): (Vec<_>, Vec<_>) = edges.into_iter().unzip();
        let n = funcs.len();
        let reach = mode.map_range(n, |start| {
            let mut seen = vec![false; n];
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(i) = stack.pop() {
                for &j in &direct[i] {
                    if !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
            (0..n).filter(|&i| seen[i]).collect::<Vec<usize>>()
        });
        let reaches_dangling = mode.map(&reach, |r: &Vec<usize>| {
            r.iter().any(|&j| !dangling[j].is_empty())
        });
        CallIndex {
            funcs: funcs.to_vec(),
            pos,
            direct,
            dangling,
            reach,
            reaches_dangling,
        }
    }

    pub fn len(&self) -> usize {
        self.funcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.funcs.is_empty()
    }

    pub fn funcs(&self) -> &[&'a FuncDecl] {
        &self.funcs
    }

    pub fn index_of(&self, name: &QName) -> Option<usize> {
        self.pos.get(name).copied()
    }

    /// Known direct callees, ascending by position.
    pub fn direct(&self, i: usize) -> &[usize] {
        &self.direct[i]
    }

    /// Direct callees that are not in the function list.
    pub fn dangling(&self, i: usize) -> &BTreeSet<QName> {
        &self.dangling[i]
    }

    /// Reflexive reachable set, ascending by position.
    pub fn reach(&self, i: usize) -> &[usize] {
        &self.reach[i]
    }

    pub fn reaches_dangling(&self, i: usize) -> bool {
        self.reaches_dangling[i]
    }

    /// Dangling names reachable from `i`.
    pub fn reachable_dangling(&self, i: usize) -> BTreeSet<QName> {
        self.reach[i]
            .iter()
            .flat_map(|&j| self.dangling[j].iter().cloned())
            .collect()
    }

    /// Whether some path from `i` of length at least one returns to `i`.
    pub fn is_recursive(&self, i: usize) -> bool {
        self.reach[i]
            .iter()
            .any(|&j| self.direct[j].binary_search(&i).is_ok())
    }

    /// `∃ g ∈ reach(f): local[g]`, with `on_dangling` as the answer when
    /// nothing reachable holds but a dangling callee is reachable.
    pub fn exists(&self, mode: ExecMode, local: &[bool], on_dangling: bool) -> Vec<bool> {
        mode.map_range(self.len(), |i| {
            self.reach[i].iter().any(|&j| local[j]) || (on_dangling && self.reaches_dangling[i])
        })
    }

    /// `∀ g ∈ reach(f): local[g]`, with `on_dangling` deciding functions
    /// that reach a dangling callee.
    pub fn forall(&self, mode: ExecMode, local: &[bool], on_dangling: bool) -> Vec<bool> {
        mode.map_range(self.len(), |i| {
            self.reach[i].iter().all(|&j| local[j]) && (on_dangling || !self.reaches_dangling[i])
        })
    }
}
