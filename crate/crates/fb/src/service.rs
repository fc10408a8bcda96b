//! HTTP interface under `/api`. Every response body is either a result
//! document or `{"error": …}`.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::Value;

use crate::api::{
    graph_output, parse_qname, ApiError, GraphScope, Project, ProjectConfig, RegistryHook, Select,
    View,
};

#[derive(Clone)]
pub struct AppState {
    project: Arc<Mutex<Project>>,
    hook: Option<RegistryHook>,
}

enum Reply {
    Json(Value),
    Dot(String),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status =
            StatusCode::from_u16(self.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self.to_json())).into_response()
    }
}

impl IntoResponse for Reply {
    fn into_response(self) -> Response {
        match self {
            Reply::Json(v) => Json(v).into_response(),
            Reply::Dot(s) => (
                [(header::CONTENT_TYPE, "text/vnd.graphviz; charset=utf-8")],
                s,
            )
                .into_response(),
        }
    }
}

/// Runs `f` on the project off the async workers. Requests are serialized
/// by the project lock; a poisoned lock is taken over as is, since every
/// operation leaves the project consistent.
async fn with_project<F>(state: &AppState, f: F) -> Response
where
    F: FnOnce(&mut Project) -> Result<Reply, ApiError> + Send + 'static,
{
    let project = state.project.clone();
    let joined = tokio::task::spawn_blocking(move || {
        let mut guard = project.lock().unwrap_or_else(|p| p.into_inner());
        f(&mut guard)
    })
    .await;
    match joined {
        Ok(Ok(reply)) => reply.into_response(),
        Ok(Err(e)) => e.into_response(),
        Err(e) => ApiError::new(
            crate::api::ErrorCode::AnalysisPanic,
            format!("request failed: {e}"),
        )
        .into_response(),
    }
}

fn param<'a>(q: &'a HashMap<String, String>, key: &str) -> Option<&'a str> {
    q.get(key).map(String::as_str)
}

async fn analyses(State(s): State<AppState>) -> Response {
    with_project(&s, |p| Ok(Reply::Json(p.analyses().json))).await
}

async fn modules(State(s): State<AppState>) -> Response {
    with_project(&s, |p| Ok(Reply::Json(p.modules().json))).await
}

async fn module_view(
    State(s): State<AppState>,
    Path(m): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> Response {
    let view = param(&q, "view").map(View::parse);
    with_project(&s, move |p| {
        let view = view.ok_or_else(|| ApiError::bad_request("missing query parameter view"))??;
        Ok(Reply::Json(p.module_view(&m, view)?.json))
    })
    .await
}

async fn functions(
    State(s): State<AppState>,
    Path(m): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> Response {
    let select = Select::parse(param(&q, "select").unwrap_or("all"));
    with_project(&s, move |p| Ok(Reply::Json(p.functions(&m, select?)?.json))).await
}

async fn module_analysis(
    State(s): State<AppState>,
    Path((m, name)): Path<(String, String)>,
) -> Response {
    with_project(&s, move |p| {
        Ok(Reply::Json(p.module_analysis(&m, &name)?.json))
    })
    .await
}

async fn function_analysis(
    State(s): State<AppState>,
    Path((q, name)): Path<(String, String)>,
) -> Response {
    with_project(&s, move |p| {
        let q = parse_qname(&q)?;
        Ok(Reply::Json(p.function_analysis(&q, &name)?.json))
    })
    .await
}

fn graph_reply(
    format: Option<&str>,
) -> Result<impl FnOnce(flatbrowse::graphs::Graph) -> Reply, ApiError> {
    let dot = match format.unwrap_or("dot") {
        "dot" => true,
        "json" => false,
        other => {
            return Err(ApiError::bad_request(format!(
                "unknown format {other:?}; expected dot or json"
            )))
        }
    };
    Ok(move |g| {
        let o = graph_output(&g);
        if dot {
            Reply::Dot(o.text)
        } else {
            Reply::Json(o.json)
        }
    })
}

async fn imports_graph(
    State(s): State<AppState>,
    Query(q): Query<HashMap<String, String>>,
) -> Response {
    let reply = graph_reply(param(&q, "format"));
    with_project(&s, move |p| Ok(reply?(p.import_graph()))).await
}

async fn calls_graph(
    State(s): State<AppState>,
    Path(f): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> Response {
    let reply = graph_reply(param(&q, "format"));
    let scope = GraphScope::parse(param(&q, "scope").unwrap_or("global"));
    with_project(&s, move |p| {
        let reply = reply?;
        let g = p.calls_graph(&parse_qname(&f)?, scope?)?;
        Ok(reply(g))
    })
    .await
}

async fn imports_usage(State(s): State<AppState>, Path(m): Path<String>) -> Response {
    with_project(&s, move |p| Ok(Reply::Json(p.imports_usage(&m)?.json))).await
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct ProjectBody {
    search_paths: Vec<PathBuf>,
    main_module: String,
    #[serde(default)]
    externals_file: Option<PathBuf>,
}

/// Opens the requested project and swaps it in; the current one stays on
/// any failure.
async fn replace_project(State(s): State<AppState>, body: Bytes) -> Response {
    let body: ProjectBody = match serde_json::from_slice(&body) {
        Ok(b) => b,
        Err(e) => {
            return ApiError::bad_request(format!("invalid project body: {e}")).into_response()
        }
    };
    let config = ProjectConfig {
        search_paths: body.search_paths,
        main_module: body.main_module,
        externals_file: body.externals_file,
    };
    let hook = s.hook.clone();
    with_project(&s, move |p| {
        *p = Project::open(config, hook.as_ref())?;
        Ok(Reply::Json(p.modules().json))
    })
    .await
}

async fn no_route() -> Response {
    ApiError::bad_request("no such endpoint").into_response()
}

async fn index() -> Html<&'static str> {
    Html(INDEX)
}

const INDEX: &str =
    "<!doctype html>\n<html><head><meta charset=\"utf-8\"><title>fb</title></head>\n\
<body><h1>fb</h1><p>The JSON interface is served under <code>/api</code>, \
for example <a href=\"/api/modules\">/api/modules</a> and \
<a href=\"/api/analyses\">/api/analyses</a>.</p></body></html>\n";

pub fn router(project: Project, hook: Option<RegistryHook>) -> Router {
    let state = AppState {
        project: Arc::new(Mutex::new(project)),
        hook,
    };
    Router::new()
        .route("/", get(index))
        .route("/api/analyses", get(analyses))
        .route("/api/modules", get(modules))
        .route("/api/modules/{m}", get(module_view))
        .route("/api/modules/{m}/functions", get(functions))
        .route("/api/modules/{m}/analyses/{name}", get(module_analysis))
        .route("/api/modules/{m}/imports-usage", get(imports_usage))
        .route("/api/functions/{q}/analyses/{name}", get(function_analysis))
        .route("/api/graphs/imports", get(imports_graph))
        .route("/api/graphs/calls/{q}", get(calls_graph))
        .route("/api/project", axum::routing::post(replace_project))
        .fallback(no_route)
        .method_not_allowed_fallback(no_route)
        .with_state(state)
}

/// Opens the project and serves it until the process ends.
pub fn serve(
    config: ProjectConfig,
    host: &str,
    port: u16,
    hook: Option<RegistryHook>,
) -> Result<(), ApiError> {
    let project = Project::open(config, hook.as_ref())?;
    let app = router(project, hook);
    let addr = format!("{host}:{port}");
    let runtime = tokio::runtime::Runtime::new()
        .map_err(|e| ApiError::bad_request(format!("cannot start runtime: {e}")))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .map_err(|e| ApiError::bad_request(format!("cannot listen on {addr}: {e}")))?;
        if let Ok(bound) = listener.local_addr() {
            eprintln!("fb: serving on http://{bound}");
        }
        axum::serve(listener, app)
            .await
            .map_err(|e| ApiError::bad_request(format!("server stopped: {e}")))
    })
}
