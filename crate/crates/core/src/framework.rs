//! Analysis kinds, the registry, and cached on-demand evaluation.

use std::collections::{HashMap, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use serde_json::json;
use thiserror::Error;

use crate::exec::ExecMode;
use crate::graphs::Graph;
use crate::ir::{FuncDecl, Prog, QName, TypeDecl};
use crate::store::{ProgramStore, StoreError};

pub type LocalFn<R> = Arc<dyn Fn(&FuncDecl) -> R + Send + Sync>;
pub type LocalDataFn<R> = Arc<dyn Fn(&[&TypeDecl], &FuncDecl) -> R + Send + Sync>;
pub type GlobalFn<R> = Arc<dyn Fn(&[&FuncDecl]) -> Vec<(QName, R)> + Send + Sync>;
pub type GlobalDataFn<R> = Arc<dyn Fn(&[&TypeDecl], &[&FuncDecl]) -> Vec<(QName, R)> + Send + Sync>;

/// An analysis of functions, classified by what it is given.
///
/// Local kinds see one function at a time; global kinds see every function
/// of the loaded closure at once and must answer for each of them.
pub enum FunctionAnalysis<R> {
    Local(LocalFn<R>),
    LocalData(LocalDataFn<R>),
    Global(GlobalFn<R>),
    GlobalData(GlobalDataFn<R>),
}

impl<R> Clone for FunctionAnalysis<R> {
    fn clone(&self) -> Self {
        match self {
            FunctionAnalysis::Local(f) => FunctionAnalysis::Local(f.clone()),
            FunctionAnalysis::LocalData(f) => FunctionAnalysis::LocalData(f.clone()),
            FunctionAnalysis::Global(f) => FunctionAnalysis::Global(f.clone()),
            FunctionAnalysis::GlobalData(f) => FunctionAnalysis::GlobalData(f.clone()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AnalysisKind {
    Local,
    LocalData,
    Global,
    GlobalData,
}

impl AnalysisKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AnalysisKind::Local => "local",
            AnalysisKind::LocalData => "localData",
            AnalysisKind::Global => "global",
            AnalysisKind::GlobalData => "globalData",
        }
    }

    pub fn is_global(self) -> bool {
        matches!(self, AnalysisKind::Global | AnalysisKind::GlobalData)
    }
}

impl<R: 'static> FunctionAnalysis<R> {
    pub fn local(f: impl Fn(&FuncDecl) -> R + Send + Sync + 'static) -> Self {
        FunctionAnalysis::Local(Arc::new(f))
    }

    pub fn local_data(f: impl Fn(&[&TypeDecl], &FuncDecl) -> R + Send + Sync + 'static) -> Self {
        FunctionAnalysis::LocalData(Arc::new(f))
    }

    pub fn global(f: impl Fn(&[&FuncDecl]) -> Vec<(QName, R)> + Send + Sync + 'static) -> Self {
        FunctionAnalysis::Global(Arc::new(f))
    }

    pub fn global_data(
        f: impl Fn(&[&TypeDecl], &[&FuncDecl]) -> Vec<(QName, R)> + Send + Sync + 'static,
    ) -> Self {
        FunctionAnalysis::GlobalData(Arc::new(f))
    }

    pub fn kind(&self) -> AnalysisKind {
        match self {
            FunctionAnalysis::Local(_) => AnalysisKind::Local,
            FunctionAnalysis::LocalData(_) => AnalysisKind::LocalData,
            FunctionAnalysis::Global(_) => AnalysisKind::Global,
            FunctionAnalysis::GlobalData(_) => AnalysisKind::GlobalData,
        }
    }

    /// Post-processes every result, keeping the kind.
    pub fn map<S: 'static>(
        self,
        g: impl Fn(R) -> S + Send + Sync + 'static,
    ) -> FunctionAnalysis<S> {
        let g = Arc::new(g);
        match self {
            FunctionAnalysis::Local(f) => FunctionAnalysis::local(move |d| g(f(d))),
            FunctionAnalysis::LocalData(f) => FunctionAnalysis::local_data(move |t, d| g(f(t, d))),
            FunctionAnalysis::Global(f) => FunctionAnalysis::global(move |fs| {
                f(fs).into_iter().map(|(q, r)| (q, g(r))).collect()
            }),
            FunctionAnalysis::GlobalData(f) => FunctionAnalysis::global_data(move |t, fs| {
                f(t, fs).into_iter().map(|(q, r)| (q, g(r))).collect()
            }),
        }
    }
}

/// Wraps each result of `analysis` as [`AnalysisResult::Text`].
pub fn with_text_renderer<R: 'static>(
    analysis: FunctionAnalysis<R>,
    show: impl Fn(R) -> String + Send + Sync + 'static,
) -> FunctionAnalysis<AnalysisResult> {
    analysis.map(move |r| AnalysisResult::Text(show(r)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GraphFormat {
    Dot,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum AnalysisResult {
    Text(String),
    Graph { graph: Graph, format: GraphFormat },
}

impl AnalysisResult {
    pub fn graph(graph: Graph) -> Self {
        AnalysisResult::Graph {
            graph,
            format: GraphFormat::Dot,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            AnalysisResult::Text(s) => Some(s),
            AnalysisResult::Graph { .. } => None,
        }
    }

    /// Text for terminals: the message, or the graph in DOT.
    pub fn render(&self) -> String {
        match self {
            AnalysisResult::Text(s) => s.clone(),
            AnalysisResult::Graph { graph, .. } => graph.to_dot(),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            AnalysisResult::Text(s) => json!({"kind": "text", "message": s}),
            AnalysisResult::Graph { graph, .. } => json!({
                "kind": "graph",
                "format": "dot",
                "dot": graph.to_dot(),
                "graph": graph.to_json(),
            }),
        }
    }
}

pub type ModuleAnalysisFn = Arc<dyn Fn(&Prog, &ProgramStore) -> AnalysisResult + Send + Sync>;

/// Named analyses, in registration order.
#[derive(Clone, Default)]
pub struct Registry {
    functions: Vec<(String, FunctionAnalysis<AnalysisResult>)>,
    tags: Vec<(String, String)>,
    modules: Vec<(String, ModuleAnalysisFn)>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Panics on a duplicate name.
    pub fn with_function(mut self, name: &str, analysis: FunctionAnalysis<AnalysisResult>) -> Self {
        assert!(
            self.function(name).is_none(),
            "duplicate function analysis {name}"
        );
        self.functions.push((name.to_string(), analysis));
        self
    }

    /// Registers a function analysis that is also offered for whole modules,
    /// with a prefix tag of at most four characters.
    pub fn with_tagged_function(
        self,
        name: &str,
        tag: &str,
        analysis: FunctionAnalysis<AnalysisResult>,
    ) -> Self {
        assert!(
            !tag.is_empty() && tag.chars().count() <= 4,
            "bad tag {tag:?}"
        );
        let mut r = self.with_function(name, analysis);
        r.tags.push((name.to_string(), tag.to_string()));
        r
    }

    /// Panics on a duplicate name.
    pub fn with_module(
        mut self,
        name: &str,
        f: impl Fn(&Prog, &ProgramStore) -> AnalysisResult + Send + Sync + 'static,
    ) -> Self {
        assert!(
            self.module_analysis(name).is_none(),
            "duplicate module analysis {name}"
        );
        self.modules.push((name.to_string(), Arc::new(f)));
        self
    }

    pub fn function(&self, name: &str) -> Option<&FunctionAnalysis<AnalysisResult>> {
        self.functions
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, a)| a)
    }

    pub fn functions(&self) -> impl Iterator<Item = (&str, &FunctionAnalysis<AnalysisResult>)> {
        self.functions.iter().map(|(n, a)| (n.as_str(), a))
    }

    pub fn tag(&self, name: &str) -> Option<&str> {
        self.tags
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t.as_str())
    }

    /// `(name, tag)` of the analyses offered for whole modules.
    pub fn module_wide(&self) -> impl Iterator<Item = (&str, &str)> {
        self.tags.iter().map(|(n, t)| (n.as_str(), t.as_str()))
    }

    pub fn module_analysis(&self, name: &str) -> Option<&ModuleAnalysisFn> {
        self.modules.iter().find(|(n, _)| n == name).map(|(_, f)| f)
    }

    pub fn module_analysis_names(&self) -> impl Iterator<Item = &str> {
        self.modules.iter().map(|(n, _)| n.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("unknown analysis {0:?}")]
    UnknownAnalysis(String),
    #[error("unknown function {0}")]
    UnknownFunction(QName),
    #[error("unknown module {0}")]
    UnknownModule(String),
    #[error("analysis {analysis:?} failed: {message}")]
    Panic { analysis: String, message: String },
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// Results of function analyses for one store version.
#[derive(Debug, Default)]
pub struct AnalysisCache {
    version: Option<u64>,
    entries: HashMap<String, HashMap<QName, AnalysisResult>>,
    complete: HashSet<String>,
    evaluations: HashMap<String, u64>,
}

impl AnalysisCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Calls of the analysis body so far, over all versions. A global run
    /// counts once; a local run once per function.
    pub fn evaluations(&self, analysis: &str) -> u64 {
        self.evaluations.get(analysis).copied().unwrap_or(0)
    }

    pub fn version(&self) -> Option<u64> {
        self.version
    }

    pub fn get(&self, analysis: &str, function: &QName) -> Option<&AnalysisResult> {
        self.entries.get(analysis)?.get(function)
    }

    fn sync(&mut self, version: u64) {
        if self.version != Some(version) {
            self.entries.clear();
            self.complete.clear();
            self.version = Some(version);
        }
    }

    fn count(&mut self, analysis: &str, n: u64) {
        *self.evaluations.entry(analysis.to_string()).or_insert(0) += n;
    }
}

fn panic_message(payload: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        s.to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "panic with a non-string payload".to_string()
    }
}

fn guarded<T>(analysis: &str, f: impl FnOnce() -> T) -> Result<T, AnalysisError> {
    catch_unwind(AssertUnwindSafe(f)).map_err(|p| AnalysisError::Panic {
        analysis: analysis.to_string(),
        message: panic_message(p),
    })
}

fn lookup<'r>(
    registry: &'r Registry,
    name: &str,
) -> Result<&'r FunctionAnalysis<AnalysisResult>, AnalysisError> {
    registry
        .function(name)
        .ok_or_else(|| AnalysisError::UnknownAnalysis(name.to_string()))
}

/// Loads what `analysis` needs to answer for functions of `module`.
fn prepare(
    store: &mut ProgramStore,
    cache: &mut AnalysisCache,
    analysis: &FunctionAnalysis<AnalysisResult>,
    module: &str,
) -> Result<(), AnalysisError> {
    *store = store.ensure_full(module)?;
    if analysis.kind().is_global() {
        *store = store.ensure_full_closure()?;
    }
    cache.sync(store.version());
    Ok(())
}

/// Runs a global analysis over the whole closure unless already cached.
fn fill_global(
    store: &ProgramStore,
    cache: &mut AnalysisCache,
    name: &str,
    analysis: &FunctionAnalysis<AnalysisResult>,
) -> Result<(), AnalysisError> {
    if cache.complete.contains(name) {
        return Ok(());
    }
    let funcs = store.all_functions();
    cache.count(name, 1);
    let pairs = guarded(name, || match analysis {
        FunctionAnalysis::Global(f) => f(&funcs),
        FunctionAnalysis::GlobalData(f) => f(&store.all_types(), &funcs),
        _ => unreachable!("local analysis in global path"),
    })?;
    let results: HashMap<QName, AnalysisResult> = pairs.into_iter().collect();
    if results.len() != funcs.len() || funcs.iter().any(|f| !results.contains_key(&f.name)) {
        return Err(AnalysisError::Panic {
            analysis: name.to_string(),
            message: format!(
                "returned {} results for {} functions",
                results.len(),
                funcs.len()
            ),
        });
    }
    cache.entries.insert(name.to_string(), results);
    cache.complete.insert(name.to_string());
    Ok(())
}

fn eval_local(
    store: &ProgramStore,
    name: &str,
    analysis: &FunctionAnalysis<AnalysisResult>,
    func: &FuncDecl,
) -> Result<AnalysisResult, AnalysisError> {
    guarded(name, || match analysis {
        FunctionAnalysis::Local(f) => f(func),
        FunctionAnalysis::LocalData(f) => f(&store.all_types(), func),
        _ => unreachable!("global analysis in local path"),
    })
}

/// Result of analysis `name` for `target`, loading the target's module (and
/// for global kinds the whole closure) on demand.
pub fn run_on_function(
    store: &mut ProgramStore,
    cache: &mut AnalysisCache,
    registry: &Registry,
    name: &str,
    target: &QName,
) -> Result<AnalysisResult, AnalysisError> {
    let analysis = lookup(registry, name)?;
    if !store.contains(&target.module) {
        return Err(AnalysisError::UnknownFunction(target.clone()));
    }
    prepare(store, cache, analysis, &target.module)?;
    if let Some(hit) = cache.get(name, target) {
        return Ok(hit.clone());
    }
    let module = &store.module(&target.module).expect("prepared").program;
    let func = module
        .functions
        .iter()
        .find(|f| &f.name == target)
        .ok_or_else(|| AnalysisError::UnknownFunction(target.clone()))?;
    if analysis.kind().is_global() {
        fill_global(store, cache, name, analysis)?;
        return Ok(cache.get(name, target).expect("filled").clone());
    }
    cache.count(name, 1);
    let result = eval_local(store, name, analysis, func)?;
    cache
        .entries
        .entry(name.to_string())
        .or_default()
        .insert(target.clone(), result.clone());
    Ok(result)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModuleEntry {
    pub function: QName,
    pub tag: Option<String>,
    pub result: AnalysisResult,
}

/// Analysis `name` for every function of `module`, in declaration order.
pub fn run_on_module(
    store: &mut ProgramStore,
    cache: &mut AnalysisCache,
    registry: &Registry,
    name: &str,
    module: &str,
) -> Result<Vec<ModuleEntry>, AnalysisError> {
    let analysis = lookup(registry, name)?;
    if !store.contains(module) {
        return Err(AnalysisError::UnknownModule(module.to_string()));
    }
    prepare(store, cache, analysis, module)?;
    let funcs: Vec<&FuncDecl> = store
        .module(module)
        .expect("prepared")
        .program
        .functions
        .iter()
        .collect();
    if analysis.kind().is_global() {
        fill_global(store, cache, name, analysis)?;
    } else {
        let missing: Vec<&FuncDecl> = funcs
            .iter()
            .copied()
            .filter(|f| cache.get(name, &f.name).is_none())
            .collect();
        cache.count(name, missing.len() as u64);
        let computed = ExecMode::default().map(&missing, |f| eval_local(store, name, analysis, f));
        let slot = cache.entries.entry(name.to_string()).or_default();
        let mut first_error = None;
        for (f, r) in missing.iter().zip(computed) {
            match r {
                Ok(r) => {
                    slot.insert(f.name.clone(), r);
                }
                Err(e) => {
                    first_error.get_or_insert(e);
                }
            }
        }
        if let Some(e) = first_error {
            return Err(e);
        }
    }
    let tag = registry.tag(name).map(str::to_string);
    Ok(funcs
        .iter()
        .map(|f| ModuleEntry {
            function: f.name.clone(),
            tag: tag.clone(),
            result: cache.get(name, &f.name).expect("computed").clone(),
        })
        .collect())
}

/// Module analysis `name` on the full program of `module`.
pub fn run_module_analysis(
    store: &mut ProgramStore,
    registry: &Registry,
    name: &str,
    module: &str,
) -> Result<AnalysisResult, AnalysisError> {
    let f = registry
        .module_analysis(name)
        .ok_or_else(|| AnalysisError::UnknownAnalysis(name.to_string()))?;
    if !store.contains(module) {
        return Err(AnalysisError::UnknownModule(module.to_string()));
    }
    *store = store.ensure_full(module)?;
    let prog = &store.module(module).expect("loaded").program;
    guarded(name, || f(prog, store))
}
