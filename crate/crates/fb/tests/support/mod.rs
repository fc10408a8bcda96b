#![allow(dead_code)]

use std::path::PathBuf;
use std::process::{Command, Output};
use std::sync::Arc;

use fb::{Project, ProjectConfig, RegistryHook};
use flatbrowse::framework::{AnalysisResult, FunctionAnalysis, Registry};

pub const CRASH: &str = "Always fails";

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../corpus"))
}

pub fn golden(file: &str) -> String {
    let path = corpus_dir().join("golden").join(file);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn config() -> ProjectConfig {
    ProjectConfig::new(vec![corpus_dir()], "Example")
}

pub fn project() -> Project {
    Project::open(config(), None).unwrap()
}

/// Adds an analysis whose body always panics.
pub fn crash_hook() -> RegistryHook {
    Arc::new(|r: Registry| {
        r.with_function(
            CRASH,
            FunctionAnalysis::local(|f| -> AnalysisResult { panic!("cannot handle {}", f.name) }),
        )
    })
}

/// Runs the built binary with the corpus project options appended.
pub fn fb(args: &[&str]) -> Output {
    let corpus = corpus_dir();
    Command::new(env!("CARGO_BIN_EXE_fb"))
        .args(args)
        .arg("--path")
        .arg(&corpus)
        .args(["--main", "Example"])
        .output()
        .expect("run fb")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// In-process CLI run with the corpus project and an optional hook.
pub fn run_in_process(args: &[&str], hook: Option<RegistryHook>) -> (i32, String, String) {
    let corpus = corpus_dir().display().to_string();
    let mut argv = vec!["fb"];
    argv.extend_from_slice(args);
    argv.extend_from_slice(&["--path", &corpus, "--main", "Example"]);
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = fb::run_cli_with(argv, hook, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}
