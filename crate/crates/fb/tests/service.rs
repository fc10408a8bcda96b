mod support;

use std::fs;

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use fb::service::router;
use fb::Project;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use support::*;
use tower::ServiceExt;

struct Reply {
    status: StatusCode,
    content_type: String,
    body: String,
}

impl Reply {
    fn json(&self) -> Value {
        serde_json::from_str(&self.body).unwrap_or_else(|e| panic!("{e}: {}", self.body))
    }

    fn error_code(&self) -> String {
        self.json()["error"]["code"].as_str().unwrap().to_string()
    }
}

async fn send(app: &Router, method: Method, uri: &str, body: &str) -> Reply {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header(header::CONTENT_TYPE, "application/json")
        .body(Body::from(body.to_string()))
        .unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let content_type = res
        .headers()
        .get(header::CONTENT_TYPE)
        .map(|v| v.to_str().unwrap().to_string())
        .unwrap_or_default();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    Reply {
        status,
        content_type,
        body: String::from_utf8(bytes.to_vec()).unwrap(),
    }
}

async fn get(app: &Router, uri: &str) -> Reply {
    send(app, Method::GET, uri, "").await
}

fn app() -> Router {
    router(project(), None)
}

#[tokio::test]
async fn set_valued_message_for_unknown() {
    let r = get(&app(), "/api/functions/Example.unknown/analyses/Set-valued").await;
    assert_eq!(r.status, StatusCode::OK);
    assert!(r.content_type.starts_with("application/json"));
    assert_eq!(r.json(), json!({"kind": "text", "message": "Set-valued"}));
}

#[tokio::test]
async fn analysis_names_with_spaces_are_percent_decoded() {
    let a = app();
    let r = get(
        &a,
        "/api/functions/Example.coin/analyses/Overlapping%20rules",
    )
    .await;
    assert_eq!(r.json()["message"], "Overlapping");
    let r = get(
        &a,
        "/api/functions/Example.last/analyses/Overlapping%20rules",
    )
    .await;
    assert_eq!(r.json()["message"], "Not Overlapping");
}

#[tokio::test]
async fn analyses_listing() {
    let v = get(&app(), "/api/analyses").await.json();
    let list = v["analyses"].as_array().unwrap();
    let find = |n: &str| list.iter().find(|a| a["name"] == n).unwrap().clone();
    assert_eq!(find("Overlapping rules")["tag"], "OVL");
    assert_eq!(find("Overlapping rules")["kind"], "local");
    assert_eq!(find("Totally defined")["kind"], "globalData");
    assert_eq!(find("Called by")["tag"], Value::Null);
    assert_eq!(find("Import graph")["scope"], "module");
    let tags: Vec<&str> = list.iter().filter_map(|a| a["tag"].as_str()).collect();
    assert_eq!(tags, ["OVL", "RL", "PC", "TOT", "SC", "ND", "SET", "PUR"]);
}

#[tokio::test]
async fn modules_listing_tracks_load_levels() {
    let a = app();
    let v = get(&a, "/api/modules").await.json();
    assert_eq!(
        v,
        json!({
            "main": "Example",
            "version": 1,
            "modules": [
                {"name": "Example", "loadLevel": "full", "imports": ["Prelude"], "diagnostics": []},
                {"name": "Prelude", "loadLevel": "interface", "imports": [], "diagnostics": []},
            ]
        })
    );
    // Interface views do not load anything.
    let r = get(&a, "/api/modules/Prelude?view=interface").await;
    assert_eq!(r.json()["text"], golden("Prelude.interface.fl"));
    assert_eq!(get(&a, "/api/modules").await.json()["version"], 1);
    let r = get(&a, "/api/modules/Prelude?view=flat").await;
    assert_eq!(r.status, StatusCode::OK);
    let v = get(&a, "/api/modules").await.json();
    assert_eq!(v["version"], 2);
    assert_eq!(v["modules"][1]["loadLevel"], "full");
}

#[tokio::test]
async fn module_views_match_the_goldens() {
    let a = app();
    for (view, file) in [
        ("flat", "Example.flat.fl"),
        ("source", "Example.source.txt"),
        ("signatures", "Example.signatures.txt"),
    ] {
        let v = get(&a, &format!("/api/modules/Example?view={view}"))
            .await
            .json();
        assert_eq!(v["module"], "Example");
        assert_eq!(v["view"], view);
        assert_eq!(v["text"], golden(file), "{view}");
    }
    let r = get(&a, "/api/modules/Example").await;
    assert_eq!(
        (r.status, r.error_code().as_str()),
        (StatusCode::BAD_REQUEST, "BAD_REQUEST")
    );
    let r = get(&a, "/api/modules/Example?view=fancy").await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    let r = get(&a, "/api/modules/Nowhere?view=flat").await;
    assert_eq!(
        (r.status, r.error_code().as_str()),
        (StatusCode::NOT_FOUND, "MODULE_NOT_FOUND")
    );
}

#[tokio::test]
async fn function_listing() {
    let a = app();
    let v = get(&a, "/api/modules/Example/functions").await.json();
    let fs = v["functions"].as_array().unwrap();
    assert_eq!(fs.len(), 4);
    assert_eq!(
        fs[1],
        json!({
            "name": "last",
            "qname": "Example.last",
            "visibility": "public",
            "arity": 1,
            "external": false,
            "signature": "List a -> a",
        })
    );
    let v = get(&a, "/api/modules/Prelude/functions?select=exported")
        .await
        .json();
    assert!(v["functions"]
        .as_array()
        .unwrap()
        .iter()
        .all(|f| f["visibility"] == "public"));
    assert_eq!(get(&a, "/api/modules").await.json()["version"], 1);
    let r = get(&a, "/api/modules/Example/functions?select=some").await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn module_wide_analyses() {
    let a = app();
    let v = get(&a, "/api/modules/Example/analyses/Pattern%20completeness")
        .await
        .json();
    let entries = v["entries"].as_array().unwrap();
    let names: Vec<&str> = entries
        .iter()
        .map(|e| e["function"].as_str().unwrap())
        .collect();
    assert_eq!(
        names,
        [
            "Example.conc",
            "Example.last",
            "Example.unknown",
            "Example.coin"
        ]
    );
    assert!(entries.iter().all(|e| e["tag"] == "PC"));
    let last = entries[1]["result"]["message"].as_str().unwrap();
    assert!(last.starts_with("Pattern incomplete"), "{last}");
    let v = get(&a, "/api/modules/Example/analyses/Import%20graph")
        .await
        .json();
    assert_eq!(v["result"]["kind"], "graph");
    assert_eq!(v["result"]["dot"], golden("imports.dot"));
    let r = get(&a, "/api/modules/Example/analyses/Nothing").await;
    assert_eq!(
        (r.status, r.error_code().as_str()),
        (StatusCode::NOT_FOUND, "UNKNOWN_ANALYSIS")
    );
    let r = get(&a, "/api/modules/Nowhere/analyses/Purity").await;
    assert_eq!(
        (r.status, r.error_code().as_str()),
        (StatusCode::NOT_FOUND, "MODULE_NOT_FOUND")
    );
}

#[tokio::test]
async fn function_analysis_errors() {
    let a = app();
    let r = get(&a, "/api/functions/Example.nope/analyses/Purity").await;
    assert_eq!(
        (r.status, r.error_code().as_str()),
        (StatusCode::NOT_FOUND, "UNKNOWN_FUNCTION")
    );
    assert_eq!(r.json()["error"]["detail"]["function"], "Example.nope");
    let r = get(&a, "/api/functions/Example.coin/analyses/Nothing").await;
    assert_eq!(
        (r.status, r.error_code().as_str()),
        (StatusCode::NOT_FOUND, "UNKNOWN_ANALYSIS")
    );
    let r = get(&a, "/api/functions/nodot/analyses/Purity").await;
    assert_eq!(
        (r.status, r.error_code().as_str()),
        (StatusCode::BAD_REQUEST, "BAD_REQUEST")
    );
}

#[tokio::test]
async fn graphs() {
    let a = app();
    let r = get(&a, "/api/graphs/imports?format=dot").await;
    assert_eq!(r.status, StatusCode::OK);
    assert!(r.content_type.starts_with("text/vnd.graphviz"));
    assert_eq!(r.body, golden("imports.dot"));
    assert_eq!(
        get(&a, "/api/graphs/imports").await.body,
        golden("imports.dot")
    );
    let v = get(&a, "/api/graphs/imports?format=json").await.json();
    assert_eq!(v["nodes"].as_array().unwrap().len(), 2);
    let r = get(&a, "/api/graphs/calls/Example.last?scope=global&format=dot").await;
    assert_eq!(r.body, golden("calls_Example.last.dot"));
    let v = get(&a, "/api/graphs/calls/Example.last?scope=local&format=json")
        .await
        .json();
    let want: Value = serde_json::from_str(&golden("calls_Example.last.json")).unwrap();
    assert_eq!(v, want);
    for (uri, code, status) in [
        ("/api/graphs/imports?format=png", "BAD_REQUEST", 400),
        (
            "/api/graphs/calls/Example.last?scope=wide",
            "BAD_REQUEST",
            400,
        ),
        ("/api/graphs/calls/Example.nope", "UNKNOWN_FUNCTION", 404),
        ("/api/graphs/calls/Nowhere.f", "UNKNOWN_FUNCTION", 404),
    ] {
        let r = get(&a, uri).await;
        assert_eq!(
            (r.status.as_u16(), r.error_code()),
            (status, code.to_string()),
            "{uri}"
        );
    }
}

#[tokio::test]
async fn imports_usage() {
    let v = get(&app(), "/api/modules/Example/imports-usage")
        .await
        .json();
    assert_eq!(
        v,
        json!({
            "module": "Example",
            "imports": [{
                "module": "Prelude",
                "used": ["Prelude.Bool", "Prelude.False", "Prelude.True", "Prelude.constrEq"],
                "superfluous": false,
            }]
        })
    );
}

#[tokio::test]
async fn unknown_routes_and_methods_are_bad_requests() {
    let a = app();
    let r = get(&a, "/api/nothing/here").await;
    assert_eq!(
        (r.status, r.error_code().as_str()),
        (StatusCode::BAD_REQUEST, "BAD_REQUEST")
    );
    let r = send(&a, Method::DELETE, "/api/modules", "").await;
    assert_eq!(
        (r.status, r.error_code().as_str()),
        (StatusCode::BAD_REQUEST, "BAD_REQUEST")
    );
    let r = get(&a, "/").await;
    assert_eq!(r.status, StatusCode::OK);
    assert!(r.content_type.starts_with("text/html"));
}

#[tokio::test]
async fn replacing_the_project() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("Tiny.fl"),
        "module Tiny imports ()\ndata T = A | B\npick :: T\npick = (A or B)\n",
    )
    .unwrap();
    let a = app();
    let body = json!({"searchPaths": [dir.path()], "mainModule": "Tiny"}).to_string();
    let r = send(&a, Method::POST, "/api/project", &body).await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.body);
    assert_eq!(r.json()["main"], "Tiny");
    let r = get(&a, "/api/functions/Tiny.pick/analyses/Nondeterministic").await;
    assert_eq!(r.json()["message"], "Nondeterministic");
    let r = get(&a, "/api/functions/Example.coin/analyses/Purity").await;
    assert_eq!(r.error_code(), "UNKNOWN_FUNCTION");

    // Failed replacements keep the current project.
    for (body, status, code) in [
        ("{not json", 400, "BAD_REQUEST"),
        (r#"{"searchPaths": [], "mainModule": "Tiny"}"#, 400, "BAD_REQUEST"),
        (r#"{"searchPaths": ["."], "mainModule": "Tiny", "extra": 1}"#, 400, "BAD_REQUEST"),
        (
            &json!({"searchPaths": [dir.path()], "mainModule": "Missing"}).to_string(),
            404,
            "MODULE_NOT_FOUND",
        ),
        (
            &json!({"searchPaths": [dir.path()], "mainModule": "Tiny", "externalsFile": dir.path().join("none.json")})
                .to_string(),
            422,
            "PARSE_FAILED",
        ),
    ] {
        let r = send(&a, Method::POST, "/api/project", body).await;
        assert_eq!((r.status.as_u16(), r.error_code()), (status, code.to_string()), "{body}");
    }
    assert_eq!(get(&a, "/api/modules").await.json()["main"], "Tiny");
}

#[tokio::test]
async fn store_errors_map_to_their_status() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("A.fl"), "module A imports (B)\n").unwrap();
    fs::write(dir.path().join("B.fl"), "module B imports (A)\n").unwrap();
    let body = json!({"searchPaths": [dir.path()], "mainModule": "A"}).to_string();
    let r = send(&app(), Method::POST, "/api/project", &body).await;
    assert_eq!(
        (r.status.as_u16(), r.error_code()),
        (422, "IMPORT_CYCLE".to_string())
    );
    assert_eq!(r.json()["error"]["detail"]["cycle"], json!(["A", "B", "A"]));

    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("Main.fl"),
        "module Main imports (Lib)\nf :: Lib.T\nf = Lib.g\n",
    )
    .unwrap();
    let lib = flatbrowse::flat::parse_module("module Lib imports ()\ndata T = K\ng :: T\ng = K\n")
        .unwrap();
    fs::write(
        dir.path().join("Lib.fint.json"),
        flatbrowse::flat::to_structured(&flatbrowse::flat::to_interface(&lib)),
    )
    .unwrap();
    let a = router(
        Project::open(
            fb::ProjectConfig::new(vec![dir.path().into()], "Main"),
            None,
        )
        .unwrap(),
        None,
    );
    let r = get(&a, "/api/functions/Main.f/analyses/Overlapping%20rules").await;
    assert_eq!(r.json()["message"], "Not Overlapping");
    let r = get(&a, "/api/functions/Main.f/analyses/Nondeterministic").await;
    assert_eq!(
        (r.status.as_u16(), r.error_code()),
        (409, "FULL_SOURCE_MISSING".to_string())
    );
    let r = get(&a, "/api/modules/Lib?view=source").await;
    assert_eq!(r.error_code(), "FULL_SOURCE_MISSING");
    let r = get(&a, "/api/modules/Lib?view=interface").await;
    assert_eq!(r.status, StatusCode::OK);

    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("Bad.fl"), "module Bad imports (\n").unwrap();
    let body = json!({"searchPaths": [dir.path()], "mainModule": "Bad"}).to_string();
    let r = send(&app(), Method::POST, "/api/project", &body).await;
    assert_eq!(
        (r.status.as_u16(), r.error_code()),
        (422, "PARSE_FAILED".to_string())
    );
}

#[tokio::test]
async fn crashing_analysis_is_a_500_and_the_service_keeps_working() {
    let a = router(
        fb::Project::open(config(), Some(&crash_hook())).unwrap(),
        Some(crash_hook()),
    );
    let uri = format!(
        "/api/functions/Example.coin/analyses/{}",
        CRASH.replace(' ', "%20")
    );
    for _ in 0..2 {
        let r = get(&a, &uri).await;
        assert_eq!(r.status, StatusCode::INTERNAL_SERVER_ERROR);
        assert_eq!(r.error_code(), "ANALYSIS_PANIC");
        assert!(r.json()["error"]["message"]
            .as_str()
            .unwrap()
            .contains("cannot handle Example.coin"));
        let r = get(
            &a,
            "/api/functions/Example.coin/analyses/Overlapping%20rules",
        )
        .await;
        assert_eq!(r.json()["message"], "Overlapping");
    }
    let r = get(
        &a,
        &format!(
            "/api/modules/Example/analyses/{}",
            CRASH.replace(' ', "%20")
        ),
    )
    .await;
    assert_eq!(r.status, StatusCode::INTERNAL_SERVER_ERROR);
    assert_eq!(get(&a, "/api/modules").await.status, StatusCode::OK);
    // The hook survives a project replacement.
    let body = json!({"searchPaths": [corpus_dir()], "mainModule": "Example"}).to_string();
    assert_eq!(
        send(&a, Method::POST, "/api/project", &body).await.status,
        StatusCode::OK
    );
    assert_eq!(get(&a, &uri).await.error_code(), "ANALYSIS_PANIC");
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_requests_see_consistent_answers() {
    let a = app();
    let mut tasks = Vec::new();
    for i in 0..32 {
        let a = a.clone();
        tasks.push(tokio::spawn(async move {
            let (f, name) = [
                ("Example.unknown", "Set-valued"),
                ("Example.coin", "Nondeterministic"),
                ("Example.last", "Totally%20defined"),
                ("Example.conc", "Purity"),
            ][i % 4];
            let r = get(&a, &format!("/api/functions/{f}/analyses/{name}")).await;
            (i % 4, r.json()["message"].as_str().unwrap().to_string())
        }));
    }
    let want = [
        "Set-valued",
        "Nondeterministic",
        "Partially defined",
        "Pure",
    ];
    for t in tasks {
        let (k, msg) = t.await.unwrap();
        assert_eq!(msg, want[k]);
    }
}

/// For the same inputs the service payload equals the CLI `--format json`
/// output.
#[tokio::test]
async fn cli_and_service_agree() {
    let listing = get(&app(), "/api/analyses").await.json();
    let analyses: Vec<(String, bool)> = listing["analyses"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| {
            (
                a["name"].as_str().unwrap().to_string(),
                a["scope"] == "function",
            )
        })
        .collect();
    let mut cases: Vec<(Vec<String>, String)> = vec![
        (vec!["modules".into()], "/api/modules".into()),
        (vec!["analyses".into()], "/api/analyses".into()),
        (
            vec!["imports-usage".into(), "--module".into(), "Example".into()],
            "/api/modules/Example/imports-usage".into(),
        ),
    ];
    for view in ["flat", "source", "interface", "signatures"] {
        for m in ["Example", "Prelude"] {
            cases.push((
                vec![
                    "show".into(),
                    "--module".into(),
                    m.into(),
                    "--view".into(),
                    view.into(),
                ],
                format!("/api/modules/{m}?view={view}"),
            ));
        }
    }
    for select in ["all", "exported"] {
        cases.push((
            vec![
                "functions".into(),
                "--module".into(),
                "Example".into(),
                "--select".into(),
                select.into(),
            ],
            format!("/api/modules/Example/functions?select={select}"),
        ));
    }
    for (name, per_function) in &analyses {
        let enc = name.replace(' ', "%20");
        cases.push((
            vec![
                "analyze-module".into(),
                "--module".into(),
                "Example".into(),
                "--analysis".into(),
                name.clone(),
            ],
            format!("/api/modules/Example/analyses/{enc}"),
        ));
        if !per_function {
            continue;
        }
        for f in ["conc", "last", "unknown", "coin"] {
            cases.push((
                vec![
                    "analyze".into(),
                    "--function".into(),
                    format!("Example.{f}"),
                    "--analysis".into(),
                    name.clone(),
                ],
                format!("/api/functions/Example.{f}/analyses/{enc}"),
            ));
        }
    }
    let a = app();
    for (args, uri) in &cases {
        let mut argv: Vec<&str> = args.iter().map(String::as_str).collect();
        argv.extend(["--format", "json"]);
        let (code, out, err) = run_in_process(&argv, None);
        assert_eq!(code, 0, "{args:?}: {err}");
        let cli: Value = serde_json::from_str(&out).unwrap();
        let r = get(&a, uri).await;
        assert_eq!(r.status, StatusCode::OK, "{uri}: {}", r.body);
        assert_eq!(cli, r.json(), "{args:?} vs {uri}");
    }
    for (args, uri) in [
        (
            vec!["graph", "imports", "--json", "-"],
            "/api/graphs/imports?format=json",
        ),
        (
            vec!["graph", "calls", "Example.last", "--json", "-"],
            "/api/graphs/calls/Example.last?scope=global&format=json",
        ),
        (
            vec!["graph", "calls", "Example.conc", "--local", "--json", "-"],
            "/api/graphs/calls/Example.conc?scope=local&format=json",
        ),
    ] {
        let (_, out, _) = run_in_process(&args, None);
        let cli: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(cli, get(&a, uri).await.json(), "{uri}");
        let mut dot_args = args.clone();
        let n = dot_args.len();
        dot_args[n - 2] = "--dot";
        let (_, dot, _) = run_in_process(&dot_args, None);
        let uri = uri.replace("format=json", "format=dot");
        assert_eq!(dot, get(&a, &uri).await.body, "{uri}");
    }
    for (args, uri) in [
        (
            vec![
                "analyze",
                "--function",
                "Example.nope",
                "--analysis",
                "Purity",
            ],
            "/api/functions/Example.nope/analyses/Purity",
        ),
        (
            vec!["show", "--module", "Nowhere", "--view", "flat"],
            "/api/modules/Nowhere?view=flat",
        ),
    ] {
        let mut argv = args.clone();
        argv.extend(["--format", "json"]);
        let (code, _, err) = run_in_process(&argv, None);
        assert_eq!(code, 1);
        let cli: Value = serde_json::from_str(&err).unwrap();
        assert_eq!(cli, get(&a, uri).await.json(), "{uri}");
    }
}
