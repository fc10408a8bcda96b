use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{ArgAction, CommandFactory, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use crate::api::{
    graph_output, parse_qname, ApiError, GraphScope, Output, Project, ProjectConfig, RegistryHook,
    Select, View,
};

#[derive(Parser, Debug)]
#[command(
    name = "fb",
    version,
    about = "Browse and analyse flat functional-logic programs"
)]
struct Cli {
    /// Directory searched for module files; repeatable, first match wins.
    #[arg(long = "path", value_name = "DIR", num_args = 1.., action = ArgAction::Append, global = true)]
    paths: Vec<PathBuf>,
    /// Name of the main module.
    #[arg(long, value_name = "MOD", global = true)]
    main: Option<String>,
    #[arg(long, value_enum, default_value = "text", global = true)]
    format: Format,
    /// Facts for external functions, instead of externals.json in the search path.
    #[arg(long, value_name = "FILE", global = true)]
    externals: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ViewArg {
    Flat,
    Source,
    Interface,
    Signatures,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SelectArg {
    All,
    Exported,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List the registered analyses.
    Analyses,
    /// List the loaded modules with their load level and imports.
    Modules,
    /// Print a view of a module.
    Show {
        #[arg(long)]
        module: String,
        #[arg(long, value_enum)]
        view: ViewArg,
    },
    /// List the functions of a module.
    Functions {
        #[arg(long)]
        module: String,
        #[arg(long, value_enum, default_value = "all")]
        select: SelectArg,
    },
    /// Run a function analysis on one function.
    Analyze {
        #[arg(long, value_name = "QNAME")]
        function: String,
        #[arg(long, value_name = "NAME")]
        analysis: String,
    },
    /// Run an analysis on every function of a module, or a module analysis.
    AnalyzeModule {
        #[arg(long)]
        module: String,
        #[arg(long, value_name = "NAME")]
        analysis: String,
    },
    /// Write the import graph or a call graph.
    Graph {
        /// DOT output file, `-` for standard output.
        #[arg(long, value_name = "FILE", global = true)]
        dot: Option<String>,
        /// JSON output file, `-` for standard output.
        #[arg(long, value_name = "FILE", global = true)]
        json: Option<String>,
        #[command(subcommand)]
        target: GraphTarget,
    },
    /// Report which names each import of a module provides.
    ImportsUsage {
        #[arg(long)]
        module: String,
    },
    /// Serve the HTTP interface.
    Serve {
        #[arg(long, default_value_t = 8321)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
}

#[derive(Subcommand, Debug)]
enum GraphTarget {
    Imports,
    Calls {
        #[arg(value_name = "QNAME")]
        qname: String,
        /// Only follow calls leaving the function's own module.
        #[arg(long)]
        local: bool,
    },
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_API_ERROR: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_cli_with(args, None, out, err)
}

/// Like [`run_cli`], with `hook` applied to the default registry.
pub fn run_cli_with<I, T>(
    args: I,
    hook: Option<RegistryHook>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => return usage(e, out, err),
    };
    let Some(main) = cli.main.clone() else {
        let e = Cli::command().error(ErrorKind::MissingRequiredArgument, "--main MOD is required");
        return usage(e, out, err);
    };
    if cli.paths.is_empty() {
        let e = Cli::command().error(ErrorKind::MissingRequiredArgument, "--path DIR is required");
        return usage(e, out, err);
    }
    let config = ProjectConfig {
        search_paths: cli.paths.clone(),
        main_module: main,
        externals_file: cli.externals.clone(),
    };
    if let Command::Graph {
        dot: None,
        json: None,
        ..
    } = &cli.command
    {
        let e = Cli::command().error(
            ErrorKind::MissingRequiredArgument,
            "graph needs --dot FILE|- or --json FILE|-",
        );
        return usage(e, out, err);
    }
    if let Command::Serve { port, host } = &cli.command {
        return match crate::service::serve(config, host, *port, hook) {
            Ok(()) => EXIT_OK,
            Err(e) => report(&e, cli.format, err),
        };
    }
    let result = Project::open(config, hook.as_ref()).and_then(|mut p| execute(&mut p, &cli, out));
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => report(&e, cli.format, err),
    }
}

fn usage(e: clap::Error, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let text = e.render().to_string();
    match e.kind() {
        ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
            let _ = out.write_all(text.as_bytes());
            EXIT_OK
        }
        _ => {
            let _ = err.write_all(text.as_bytes());
            if !text.contains("Usage:") {
                let _ = writeln!(err, "\n{}", Cli::command().render_usage());
            }
            EXIT_USAGE
        }
    }
}

fn report(e: &ApiError, format: Format, err: &mut dyn Write) -> i32 {
    let _ = match format {
        Format::Text => writeln!(err, "error[{}]: {}", e.code.as_str(), e.message),
        Format::Json => writeln!(err, "{:#}", e.to_json()),
    };
    EXIT_API_ERROR
}

fn emit(o: &Output, format: Format, out: &mut dyn Write) -> Result<(), ApiError> {
    let r = match format {
        Format::Text => out.write_all(o.text.as_bytes()),
        Format::Json => writeln!(out, "{:#}", o.json),
    };
    r.map_err(|e| ApiError::bad_request(format!("cannot write output: {e}")))
}

fn write_to(target: &str, bytes: &[u8], out: &mut dyn Write) -> Result<(), ApiError> {
    let r = if target == "-" {
        out.write_all(bytes)
    } else {
        std::fs::write(target, bytes)
    };
    r.map_err(|e| ApiError::bad_request(format!("cannot write {target}: {e}")))
}

fn pretty(v: &Value) -> String {
    format!("{v:#}\n")
}

fn execute(p: &mut Project, cli: &Cli, out: &mut dyn Write) -> Result<(), ApiError> {
    let o = match &cli.command {
        Command::Analyses => p.analyses(),
        Command::Modules => p.modules(),
        Command::Show { module, view } => {
            let view = match view {
                ViewArg::Flat => View::Flat,
                ViewArg::Source => View::Source,
                ViewArg::Interface => View::Interface,
                ViewArg::Signatures => View::Signatures,
            };
            p.module_view(module, view)?
        }
        Command::Functions { module, select } => {
            let select = match select {
                SelectArg::All => Select::All,
                SelectArg::Exported => Select::Exported,
            };
            p.functions(module, select)?
        }
        Command::Analyze { function, analysis } => {
            p.function_analysis(&parse_qname(function)?, analysis)?
        }
        Command::AnalyzeModule { module, analysis } => p.module_analysis(module, analysis)?,
        Command::ImportsUsage { module } => p.imports_usage(module)?,
        Command::Graph { dot, json, target } => {
            let graph = match target {
                GraphTarget::Imports => p.import_graph(),
                GraphTarget::Calls { qname, local } => {
                    let scope = if *local {
                        GraphScope::Local
                    } else {
                        GraphScope::Global
                    };
                    p.calls_graph(&parse_qname(qname)?, scope)?
                }
            };
            let o = graph_output(&graph);
            if let Some(t) = dot {
                write_to(t, o.text.as_bytes(), out)?;
            }
            if let Some(t) = json {
                write_to(t, pretty(&o.json).as_bytes(), out)?;
            }
            return Ok(());
        }
        Command::Serve { .. } => unreachable!("handled before opening"),
    };
    emit(&o, cli.format, out)
}
