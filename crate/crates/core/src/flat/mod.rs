//! Serialization of flat programs.
//!
//! Two formats share one data model: FlatLang text (`.fl`), meant to be
//! written by hand, and a canonical JSON document (`.fl.json`, and
//! `.fint.json` for interfaces) meant for tools.

mod interface;
mod lexer;
mod parser;
mod printer;
mod structured;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

pub use interface::to_interface;
pub use parser::{parse_header, parse_module, parse_module_with};
pub use printer::emit_text;
pub use structured::{from_structured, to_structured, StructuredError};

pub(crate) use parser::type_var_name;
pub(crate) use printer::{op_decl, Names};

use crate::ir::{Prog, Visibility};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SourceSpan {
    pub line: usize,
    pub column: usize,
    pub length: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub span: SourceSpan,
    pub message: String,
    pub expected: Vec<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}: {}",
            self.span.line, self.span.column, self.message
        )?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(" or "))?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseError {}

/// Public uppercase names (types and constructors) exported by modules,
/// consulted when resolving unqualified names in FlatLang text.
#[derive(Clone, Debug, Default)]
pub struct NameEnv {
    modules: BTreeMap<String, Exports>,
}

#[derive(Clone, Debug, Default)]
struct Exports {
    types: BTreeSet<String>,
    constructors: BTreeSet<String>,
}

impl NameEnv {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records what `program` exports to importers.
    pub fn add_module(&mut self, program: &Prog) {
        let entry = self.modules.entry(program.name.clone()).or_default();
        for t in program
            .types
            .iter()
            .filter(|t| t.visibility == Visibility::Public)
        {
            entry.types.insert(t.name.name.clone());
            // A single private constructor makes the whole type abstract.
            if t.constructors
                .iter()
                .all(|c| c.visibility == Visibility::Public)
            {
                entry
                    .constructors
                    .extend(t.constructors.iter().map(|c| c.name.name.clone()));
            }
        }
    }

    /// `None` when nothing is known about `module`.
    pub fn exports(&self, module: &str, name: &str, is_type: bool) -> Option<bool> {
        let e = self.modules.get(module)?;
        Some(if is_type {
            e.types.contains(name)
        } else {
            e.constructors.contains(name)
        })
    }
}
