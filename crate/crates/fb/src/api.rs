//! Operations shared by the command line and the HTTP service. Each one
//! returns both a JSON document and a plain-text rendering of it.

use std::path::PathBuf;
use std::sync::Arc;

use flatbrowse::analyses::{
    default_registry, import_usage, import_usage_report, ExternalFacts, FactsError,
};
use flatbrowse::framework::{
    run_module_analysis, run_on_function, run_on_module, AnalysisCache, AnalysisError, Registry,
};
use flatbrowse::graphs::{call_graph, import_graph, Graph, Scope};
use flatbrowse::ir::{QName, Visibility};
use flatbrowse::store::{ProgramStore, StoreError};
use flatbrowse::views::{flat_view, interface_view, signature_report, source_view};
use serde_json::{json, Value};

/// Lets callers (tests, embedders) extend or replace the default catalog.
pub type RegistryHook = Arc<dyn Fn(Registry) -> Registry + Send + Sync>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProjectConfig {
    pub search_paths: Vec<PathBuf>,
    pub main_module: String,
    pub externals_file: Option<PathBuf>,
}

impl ProjectConfig {
    pub fn new(search_paths: Vec<PathBuf>, main_module: impl Into<String>) -> Self {
        ProjectConfig {
            search_paths,
            main_module: main_module.into(),
            externals_file: None,
        }
    }

    pub fn validate(&self) -> Result<(), ApiError> {
        if self.search_paths.is_empty() {
            return Err(ApiError::bad_request(
                "at least one search path is required",
            ));
        }
        if self.main_module.is_empty() {
            return Err(ApiError::bad_request("the main module name is empty"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ErrorCode {
    ModuleNotFound,
    UnknownFunction,
    UnknownAnalysis,
    ParseFailed,
    ImportCycle,
    FullSourceMissing,
    AnalysisPanic,
    BadRequest,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::ModuleNotFound => "MODULE_NOT_FOUND",
            ErrorCode::UnknownFunction => "UNKNOWN_FUNCTION",
            ErrorCode::UnknownAnalysis => "UNKNOWN_ANALYSIS",
            ErrorCode::ParseFailed => "PARSE_FAILED",
            ErrorCode::ImportCycle => "IMPORT_CYCLE",
            ErrorCode::FullSourceMissing => "FULL_SOURCE_MISSING",
            ErrorCode::AnalysisPanic => "ANALYSIS_PANIC",
            ErrorCode::BadRequest => "BAD_REQUEST",
        }
    }

    pub fn status(self) -> u16 {
        match self {
            ErrorCode::ModuleNotFound | ErrorCode::UnknownFunction | ErrorCode::UnknownAnalysis => {
                404
            }
            ErrorCode::ParseFailed | ErrorCode::ImportCycle => 422,
            ErrorCode::FullSourceMissing => 409,
            ErrorCode::AnalysisPanic => 500,
            ErrorCode::BadRequest => 400,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
    pub detail: Option<Value>,
}

impl ApiError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        ApiError {
            code,
            message: message.into(),
            detail: None,
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::BadRequest, message)
    }

    fn with_detail(mut self, detail: Value) -> Self {
        self.detail = Some(detail);
        self
    }

    pub fn status(&self) -> u16 {
        self.code.status()
    }

    pub fn to_json(&self) -> Value {
        let mut body = json!({"code": self.code.as_str(), "message": self.message});
        if let Some(d) = &self.detail {
            body["detail"] = d.clone();
        }
        json!({ "error": body })
    }
}

impl std::fmt::Display for ApiError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.code.as_str(), self.message)
    }
}

impl std::error::Error for ApiError {}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let message = e.to_string();
        match e {
            StoreError::ModuleNotFound { name, tried } => {
                let tried: Vec<String> = tried.iter().map(|p| p.display().to_string()).collect();
                ApiError::new(ErrorCode::ModuleNotFound, message)
                    .with_detail(json!({"module": name, "tried": tried}))
            }
            StoreError::ParseFailed { name, path, .. } => {
                ApiError::new(ErrorCode::ParseFailed, message)
                    .with_detail(json!({"module": name, "path": path.display().to_string()}))
            }
            StoreError::ImportCycle(cycle) => {
                ApiError::new(ErrorCode::ImportCycle, message).with_detail(json!({"cycle": cycle}))
            }
            StoreError::FullSourceMissing(m) => {
                ApiError::new(ErrorCode::FullSourceMissing, message)
                    .with_detail(json!({"module": m}))
            }
        }
    }
}

impl From<AnalysisError> for ApiError {
    fn from(e: AnalysisError) -> Self {
        let message = e.to_string();
        match e {
            AnalysisError::UnknownAnalysis(name) => {
                ApiError::new(ErrorCode::UnknownAnalysis, message)
                    .with_detail(json!({"analysis": name}))
            }
            AnalysisError::UnknownFunction(q) => ApiError::new(ErrorCode::UnknownFunction, message)
                .with_detail(json!({"function": q.to_string()})),
            AnalysisError::UnknownModule(m) => {
                ApiError::new(ErrorCode::ModuleNotFound, message).with_detail(json!({"module": m}))
            }
            AnalysisError::Panic {
                analysis,
                message: m,
            } => ApiError::new(ErrorCode::AnalysisPanic, message)
                .with_detail(json!({"analysis": analysis, "panic": m})),
            AnalysisError::Store(s) => s.into(),
        }
    }
}

impl From<FactsError> for ApiError {
    fn from(e: FactsError) -> Self {
        ApiError::new(ErrorCode::ParseFailed, e.to_string())
    }
}

/// Result of one operation.
#[derive(Clone, Debug, PartialEq)]
pub struct Output {
    pub json: Value,
    pub text: String,
}

impl Output {
    fn new(json: Value, text: impl Into<String>) -> Self {
        let mut text = text.into();
        if !text.is_empty() && !text.ends_with('\n') {
            text.push('\n');
        }
        Output { json, text }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum View {
    Flat,
    Source,
    Interface,
    Signatures,
}

impl View {
    pub fn parse(s: &str) -> Result<View, ApiError> {
        match s {
            "flat" => Ok(View::Flat),
            "source" => Ok(View::Source),
            "interface" => Ok(View::Interface),
            "signatures" => Ok(View::Signatures),
            _ => Err(ApiError::bad_request(format!(
                "unknown view {s:?}; expected flat, source, interface or signatures"
            ))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            View::Flat => "flat",
            View::Source => "source",
            View::Interface => "interface",
            View::Signatures => "signatures",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Select {
    All,
    Exported,
}

impl Select {
    pub fn parse(s: &str) -> Result<Select, ApiError> {
        match s {
            "all" => Ok(Select::All),
            "exported" => Ok(Select::Exported),
            _ => Err(ApiError::bad_request(format!(
                "unknown selection {s:?}; expected all or exported"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GraphScope {
    Global,
    Local,
}

impl GraphScope {
    pub fn parse(s: &str) -> Result<GraphScope, ApiError> {
        match s {
            "global" => Ok(GraphScope::Global),
            "local" => Ok(GraphScope::Local),
            _ => Err(ApiError::bad_request(format!(
                "unknown scope {s:?}; expected global or local"
            ))),
        }
    }
}

pub fn parse_qname(s: &str) -> Result<QName, ApiError> {
    QName::parse(s)
        .ok_or_else(|| ApiError::bad_request(format!("{s:?} is not a qualified name Module.name")))
}

/// An opened program with its analysis cache and catalog.
pub struct Project {
    config: ProjectConfig,
    store: ProgramStore,
    cache: AnalysisCache,
    registry: Registry,
}

impl Project {
    pub fn open(config: ProjectConfig, hook: Option<&RegistryHook>) -> Result<Project, ApiError> {
        config.validate()?;
        let facts = match &config.externals_file {
            Some(path) => ExternalFacts::load(path)?,
            None => ExternalFacts::discover(&config.search_paths)?,
        };
        let store = ProgramStore::open(&config.search_paths, &config.main_module)?;
        let mut registry = default_registry(Arc::new(facts));
        if let Some(h) = hook {
            registry = h(registry);
        }
        Ok(Project {
            config,
            store,
            cache: AnalysisCache::new(),
            registry,
        })
    }

    pub fn config(&self) -> &ProjectConfig {
        &self.config
    }

    pub fn store(&self) -> &ProgramStore {
        &self.store
    }

    pub fn cache(&self) -> &AnalysisCache {
        &self.cache
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    fn known_module(&self, m: &str) -> Result<(), ApiError> {
        if self.store.contains(m) {
            Ok(())
        } else {
            Err(ApiError::new(
                ErrorCode::ModuleNotFound,
                format!("module {m} is not part of the project"),
            )
            .with_detail(json!({"module": m})))
        }
    }

    fn load_full(&mut self, m: &str) -> Result<(), ApiError> {
        self.known_module(m)?;
        self.store = self.store.ensure_full(m)?;
        Ok(())
    }

    pub fn analyses(&self) -> Output {
        let mut entries = Vec::new();
        let mut text = String::new();
        for (name, a) in self.registry.functions() {
            let tag = self.registry.tag(name);
            entries.push(json!({
                "name": name,
                "scope": "function",
                "kind": a.kind().as_str(),
                "tag": tag,
            }));
            match tag {
                Some(t) => text.push_str(&format!("{name}\t{} [{t}]\n", a.kind().as_str())),
                None => text.push_str(&format!("{name}\t{}\n", a.kind().as_str())),
            }
        }
        for name in self.registry.module_analysis_names() {
            entries.push(json!({"name": name, "scope": "module", "kind": "module", "tag": null}));
            text.push_str(&format!("{name}\tmodule\n"));
        }
        Output::new(json!({ "analyses": entries }), text)
    }

    pub fn modules(&self) -> Output {
        let mut list = Vec::new();
        let mut text = String::new();
        for (name, m) in self.store.modules() {
            let diagnostics: Vec<String> = m.diagnostics.iter().map(ToString::to_string).collect();
            list.push(json!({
                "name": name,
                "loadLevel": m.level.as_str(),
                "imports": m.program.imports,
                "diagnostics": diagnostics,
            }));
            text.push_str(&format!(
                "{name} ({}) imports: {}\n",
                m.level.as_str(),
                if m.program.imports.is_empty() {
                    "-".to_string()
                } else {
                    m.program.imports.join(", ")
                }
            ));
            for d in &diagnostics {
                text.push_str(&format!("  {d}\n"));
            }
        }
        Output::new(
            json!({
                "main": self.store.main_module(),
                "version": self.store.version(),
                "modules": list,
            }),
            text,
        )
    }

    /// The interface view is served from whatever is loaded; the others
    /// need the full module.
    pub fn module_view(&mut self, m: &str, view: View) -> Result<Output, ApiError> {
        if view == View::Interface {
            self.known_module(m)?;
        } else {
            self.load_full(m)?;
        }
        let prog = &self.store.module(m).expect("checked").program;
        let text = match view {
            View::Flat => flat_view(prog),
            View::Source => source_view(prog),
            View::Interface => interface_view(prog),
            View::Signatures => signature_report(prog),
        };
        Ok(Output {
            json: json!({"module": m, "view": view.as_str(), "text": text}),
            text,
        })
    }

    pub fn functions(&mut self, m: &str, select: Select) -> Result<Output, ApiError> {
        match select {
            Select::All => self.load_full(m)?,
            Select::Exported => self.known_module(m)?,
        }
        let prog = &self.store.module(m).expect("checked").program;
        let report = signature_report(prog);
        let mut list = Vec::new();
        let mut text = String::new();
        for (f, line) in prog.functions.iter().zip(report.lines()) {
            let public = f.visibility == Visibility::Public;
            if select == Select::Exported && !public {
                continue;
            }
            let signature = line.split_once(" :: ").map_or("", |(_, t)| t);
            list.push(json!({
                "name": f.name.name,
                "qname": f.name.to_string(),
                "visibility": if public { "public" } else { "private" },
                "arity": f.arity,
                "external": f.is_external(),
                "signature": signature,
            }));
            if !public {
                text.push_str("private ");
            }
            text.push_str(line);
            text.push('\n');
        }
        Ok(Output::new(json!({"module": m, "functions": list}), text))
    }

    /// A function analysis for every function of `m`, or a module analysis.
    pub fn module_analysis(&mut self, m: &str, name: &str) -> Result<Output, ApiError> {
        if self.registry.function(name).is_some() {
            let entries = run_on_module(&mut self.store, &mut self.cache, &self.registry, name, m)?;
            let mut text = String::new();
            let list: Vec<Value> = entries
                .iter()
                .map(|e| {
                    let prefix = e
                        .tag
                        .as_deref()
                        .map(|t| format!("[{t}] "))
                        .unwrap_or_default();
                    text.push_str(&format!("{prefix}{}: {}\n", e.function, e.result.render()));
                    json!({
                        "function": e.function.to_string(),
                        "tag": e.tag,
                        "result": e.result.to_json(),
                    })
                })
                .collect();
            return Ok(Output::new(
                json!({"module": m, "analysis": name, "entries": list}),
                text,
            ));
        }
        let result = run_module_analysis(&mut self.store, &self.registry, name, m)?;
        Ok(Output::new(
            json!({"module": m, "analysis": name, "result": result.to_json()}),
            result.render(),
        ))
    }

    pub fn function_analysis(&mut self, q: &QName, name: &str) -> Result<Output, ApiError> {
        let result = run_on_function(&mut self.store, &mut self.cache, &self.registry, name, q)?;
        Ok(Output::new(result.to_json(), result.render()))
    }

    pub fn import_graph(&self) -> Graph {
        import_graph(&self.store)
    }

    /// Global graphs follow calls into imported modules, so the whole
    /// closure is loaded for them.
    pub fn calls_graph(&mut self, q: &QName, scope: GraphScope) -> Result<Graph, ApiError> {
        let unknown = || {
            ApiError::new(ErrorCode::UnknownFunction, format!("unknown function {q}"))
                .with_detail(json!({"function": q.to_string()}))
        };
        if !self.store.contains(&q.module) {
            return Err(unknown());
        }
        let scope = match scope {
            GraphScope::Global => {
                self.store = self.store.ensure_full_closure()?;
                Scope::Global
            }
            GraphScope::Local => {
                self.load_full(&q.module)?;
                Scope::Module(q.module.clone())
            }
        };
        call_graph(&self.store.all_functions(), q, &scope).ok_or_else(unknown)
    }

    pub fn imports_usage(&mut self, m: &str) -> Result<Output, ApiError> {
        self.load_full(m)?;
        let usage = import_usage(&self.store, m).expect("loaded");
        let list: Vec<Value> = usage
            .iter()
            .map(|u| {
                let used: Vec<String> = u.used.iter().map(ToString::to_string).collect();
                json!({"module": u.module, "used": used, "superfluous": u.superfluous})
            })
            .collect();
        Ok(Output::new(
            json!({"module": m, "imports": list}),
            import_usage_report(&usage),
        ))
    }
}

/// Graph output in the requested format.
pub fn graph_output(graph: &Graph) -> Output {
    Output {
        json: graph.to_json(),
        text: graph.to_dot(),
    }
}
