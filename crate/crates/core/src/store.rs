//! Locating, loading and caching the modules of an application.
//!
//! Startup reads only interfaces of imported modules; complete programs are
//! read when an analysis needs them. A [`ProgramStore`] value never changes:
//! every load returns a new store sharing unchanged modules.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use thiserror::Error;

use crate::flat::{
    from_structured, parse_header, parse_module_with, to_interface, NameEnv, ParseError,
    StructuredError,
};
use crate::ir::{well_formed, ConstructorIndex, Diagnostic, FuncDecl, Prog, QName, TypeDecl};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LoadLevel {
    InterfaceOnly,
    Full,
}

impl LoadLevel {
    pub fn as_str(self) -> &'static str {
        match self {
            LoadLevel::InterfaceOnly => "interface",
            LoadLevel::Full => "full",
        }
    }
}

/// Why a module file could not be turned into a program.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum LoadFailure {
    #[error("{0}")]
    Text(ParseError),
    #[error("{0}")]
    Structured(StructuredError),
    #[error("cannot read file: {0}")]
    Io(String),
    #[error("file declares module {found}")]
    WrongModule { found: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum StoreError {
    #[error("module {name} not found (tried {})", display_paths(.tried))]
    ModuleNotFound { name: String, tried: Vec<PathBuf> },
    #[error("cannot load module {name} from {}: {failure}", .path.display())]
    ParseFailed {
        name: String,
        path: PathBuf,
        failure: LoadFailure,
    },
    #[error("import cycle: {}", .0.join(" -> "))]
    ImportCycle(Vec<String>),
    #[error("module {0} has only an interface file; its full program is unavailable")]
    FullSourceMissing(String),
}

fn display_paths(paths: &[PathBuf]) -> String {
    paths
        .iter()
        .map(|p| p.display().to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

/// File names probed per search path, in resolution order.
pub const STRUCTURED_EXT: &str = "fl.json";
pub const TEXT_EXT: &str = "fl";
pub const INTERFACE_EXT: &str = "fint.json";

/// The files found for one module, all in the first search path that has
/// any of them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModuleFiles {
    pub structured: Option<PathBuf>,
    pub text: Option<PathBuf>,
    pub interface: Option<PathBuf>,
}

impl ModuleFiles {
    fn full(&self) -> Option<&PathBuf> {
        self.structured.as_ref().or(self.text.as_ref())
    }
}

#[derive(Clone, Debug)]
pub struct LoadedModule {
    pub program: Prog,
    pub level: LoadLevel,
    pub diagnostics: Vec<Diagnostic>,
    pub files: ModuleFiles,
}

#[derive(Clone, Debug)]
pub struct ProgramStore {
    search_paths: Vec<PathBuf>,
    modules: BTreeMap<String, Arc<LoadedModule>>,
    main_module: String,
    version: u64,
}

impl ProgramStore {
    /// Loads `main_module` completely and the transitive imports as
    /// interfaces.
    pub fn open(search_paths: &[PathBuf], main_module: &str) -> Result<ProgramStore, StoreError> {
        let mut store = ProgramStore {
            search_paths: search_paths.to_vec(),
            modules: BTreeMap::new(),
            main_module: main_module.to_string(),
            version: 0,
        };
        let mut stack = Vec::new();
        store.load(main_module, LoadLevel::Full, &mut stack)?;
        store.version = 1;
        Ok(store)
    }

    pub fn search_paths(&self) -> &[PathBuf] {
        &self.search_paths
    }

    pub fn main_module(&self) -> &str {
        &self.main_module
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn module(&self, name: &str) -> Option<&LoadedModule> {
        self.modules.get(name).map(Arc::as_ref)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.modules.contains_key(name)
    }

    pub fn level(&self, name: &str) -> Option<LoadLevel> {
        self.module(name).map(|m| m.level)
    }

    /// Modules in lexicographic order.
    pub fn modules(&self) -> impl Iterator<Item = (&str, &LoadedModule)> {
        self.modules.iter().map(|(k, v)| (k.as_str(), v.as_ref()))
    }

    pub fn module_names(&self) -> Vec<&str> {
        self.modules.keys().map(String::as_str).collect()
    }

    /// Returns a store with `name` loaded completely. The version changes
    /// only when an upgrade happened.
    pub fn ensure_full(&self, name: &str) -> Result<ProgramStore, StoreError> {
        if !self.contains(name) {
            return Err(StoreError::ModuleNotFound {
                name: name.to_string(),
                tried: Vec::new(),
            });
        }
        if self.level(name) == Some(LoadLevel::Full) {
            return Ok(self.clone());
        }
        let mut next = self.clone();
        next.upgrade(name)?;
        next.check_acyclic()?;
        next.version += 1;
        Ok(next)
    }

    /// Returns a store in which every module is loaded completely.
    pub fn ensure_full_closure(&self) -> Result<ProgramStore, StoreError> {
        let mut next = self.clone();
        let mut changed = false;
        loop {
            let pending: Vec<String> = next
                .modules
                .iter()
                .filter(|(_, m)| m.level != LoadLevel::Full)
                .map(|(k, _)| k.clone())
                .collect();
            if pending.is_empty() {
                break;
            }
            for name in pending {
                next.upgrade(&name)?;
                changed = true;
            }
        }
        if changed {
            next.check_acyclic()?;
            next.version += 1;
        }
        Ok(next)
    }

    /// All loaded functions keyed by name.
    pub fn function_index(&self) -> BTreeMap<QName, &FuncDecl> {
        self.modules
            .values()
            .flat_map(|m| m.program.functions.iter().map(|f| (f.name.clone(), f)))
            .collect()
    }

    pub fn constructor_index(&self) -> ConstructorIndex {
        ConstructorIndex::from_programs(self.modules.values().map(|m| &m.program))
    }

    /// Type declarations of every loaded module, modules in name order.
    pub fn all_types(&self) -> Vec<&TypeDecl> {
        self.modules
            .values()
            .flat_map(|m| m.program.types.iter())
            .collect()
    }

    /// Functions of every loaded module, modules in name order.
    pub fn all_functions(&self) -> Vec<&FuncDecl> {
        self.modules
            .values()
            .flat_map(|m| m.program.functions.iter())
            .collect()
    }

    /// Modules reachable from `name` over imports, excluding `name`.
    pub fn import_closure(&self, name: &str) -> BTreeSet<String> {
        let mut seen = BTreeSet::new();
        let mut todo = vec![name.to_string()];
        while let Some(m) = todo.pop() {
            if let Some(lm) = self.modules.get(&m) {
                for imp in &lm.program.imports {
                    if seen.insert(imp.clone()) {
                        todo.push(imp.clone());
                    }
                }
            }
        }
        seen.remove(name);
        seen
    }

    /// True when every import of every loaded module is loaded.
    pub fn is_closed(&self) -> bool {
        self.modules.contains_key(&self.main_module)
            && self.modules.values().all(|m| {
                m.program
                    .imports
                    .iter()
                    .all(|i| self.modules.contains_key(i))
            })
    }

    fn locate(&self, name: &str) -> Result<ModuleFiles, StoreError> {
        let mut tried = Vec::new();
        for dir in &self.search_paths {
            let probe = |ext: &str| {
                let p = dir.join(format!("{name}.{ext}"));
                p.is_file().then_some(p)
            };
            let files = ModuleFiles {
                structured: probe(STRUCTURED_EXT),
                text: probe(TEXT_EXT),
                interface: probe(INTERFACE_EXT),
            };
            if files.structured.is_some() || files.text.is_some() || files.interface.is_some() {
                return Ok(files);
            }
            tried.extend(
                [STRUCTURED_EXT, TEXT_EXT, INTERFACE_EXT]
                    .iter()
                    .map(|ext| dir.join(format!("{name}.{ext}"))),
            );
        }
        Err(StoreError::ModuleNotFound {
            name: name.to_string(),
            tried,
        })
    }

    fn load(
        &mut self,
        name: &str,
        level: LoadLevel,
        stack: &mut Vec<String>,
    ) -> Result<(), StoreError> {
        if let Some(pos) = stack.iter().position(|s| s == name) {
            let mut cycle = stack[pos..].to_vec();
            cycle.push(name.to_string());
            return Err(StoreError::ImportCycle(cycle));
        }
        match self.level(name) {
            Some(l) if l >= level => return Ok(()),
            Some(_) => return self.upgrade(name),
            None => {}
        }
        let files = self.locate(name)?;
        let source = match level {
            LoadLevel::Full => files
                .full()
                .cloned()
                .ok_or_else(|| StoreError::FullSourceMissing(name.to_string()))?,
            LoadLevel::InterfaceOnly => files
                .interface
                .clone()
                .or_else(|| files.full().cloned())
                .expect("locate returns at least one file"),
        };
        stack.push(name.to_string());
        let program = self.read_program(name, &source, stack);
        stack.pop();
        let mut program = program?;
        if level == LoadLevel::InterfaceOnly && Some(&source) != files.interface.as_ref() {
            program = to_interface(&program);
        }
        self.insert(name, program, level, files);
        Ok(())
    }

    /// Reads and parses `path`, loading its imports (as interfaces) first so
    /// that unqualified names in text files can be resolved.
    fn read_program(
        &mut self,
        name: &str,
        path: &Path,
        stack: &mut Vec<String>,
    ) -> Result<Prog, StoreError> {
        let fail = |failure| StoreError::ParseFailed {
            name: name.to_string(),
            path: path.to_path_buf(),
            failure,
        };
        let bytes = fs::read(path).map_err(|e| fail(LoadFailure::Io(e.to_string())))?;
        let is_text = path.to_string_lossy().ends_with(&format!(".{TEXT_EXT}"));
        let program = if is_text {
            let text =
                String::from_utf8(bytes).map_err(|e| fail(LoadFailure::Io(e.to_string())))?;
            let (declared, imports) =
                parse_header(&text).map_err(|e| fail(LoadFailure::Text(e)))?;
            if declared != name {
                return Err(fail(LoadFailure::WrongModule { found: declared }));
            }
            for imp in &imports {
                self.load(imp, LoadLevel::InterfaceOnly, stack)?;
            }
            let mut env = NameEnv::new();
            for imp in &imports {
                if let Some(m) = self.modules.get(imp) {
                    env.add_module(&m.program);
                }
            }
            parse_module_with(&text, &env).map_err(|e| fail(LoadFailure::Text(e)))?
        } else {
            let program = from_structured(&bytes).map_err(|e| fail(LoadFailure::Structured(e)))?;
            if program.name != name {
                return Err(fail(LoadFailure::WrongModule {
                    found: program.name,
                }));
            }
            program
        };
        for imp in &program.imports {
            self.load(imp, LoadLevel::InterfaceOnly, stack)?;
        }
        Ok(program)
    }

    fn upgrade(&mut self, name: &str) -> Result<(), StoreError> {
        let files = match self.modules.get(name) {
            Some(m) if m.level == LoadLevel::Full => return Ok(()),
            Some(m) => m.files.clone(),
            None => self.locate(name)?,
        };
        let source = files
            .full()
            .cloned()
            .ok_or_else(|| StoreError::FullSourceMissing(name.to_string()))?;
        let mut stack = vec![name.to_string()];
        let program = self.read_program(name, &source, &mut stack)?;
        self.insert(name, program, LoadLevel::Full, files);
        Ok(())
    }

    fn insert(&mut self, name: &str, program: Prog, level: LoadLevel, files: ModuleFiles) {
        let index = ConstructorIndex::from_programs(
            self.import_closure_of(&program)
                .iter()
                .filter_map(|m| self.modules.get(m))
                .map(|m| &m.program)
                .chain(std::iter::once(&program)),
        );
        let diagnostics = well_formed(&program, &index);
        self.modules.insert(
            name.to_string(),
            Arc::new(LoadedModule {
                program,
                level,
                diagnostics,
                files,
            }),
        );
    }

    fn import_closure_of(&self, program: &Prog) -> BTreeSet<String> {
        let mut seen = BTreeSet::new();
        let mut todo: Vec<String> = program.imports.clone();
        while let Some(m) = todo.pop() {
            if seen.insert(m.clone()) {
                if let Some(lm) = self.modules.get(&m) {
                    todo.extend(lm.program.imports.iter().cloned());
                }
            }
        }
        seen
    }

    fn check_acyclic(&self) -> Result<(), StoreError> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            Active,
            Done,
        }
        fn visit<'a>(
            store: &'a ProgramStore,
            m: &'a str,
            marks: &mut BTreeMap<&'a str, Mark>,
            path: &mut Vec<&'a str>,
        ) -> Result<(), StoreError> {
            match marks.get(m) {
                Some(Mark::Done) => return Ok(()),
                Some(Mark::Active) => {
                    let start = path.iter().position(|p| *p == m).unwrap_or(0);
                    let mut cycle: Vec<String> =
                        path[start..].iter().map(|s| s.to_string()).collect();
                    cycle.push(m.to_string());
                    return Err(StoreError::ImportCycle(cycle));
                }
                None => {}
            }
            marks.insert(m, Mark::Active);
            path.push(m);
            if let Some(lm) = store.modules.get(m) {
                for imp in &lm.program.imports {
                    visit(store, imp, marks, path)?;
                }
            }
            path.pop();
            marks.insert(m, Mark::Done);
            Ok(())
        }
        let mut marks = BTreeMap::new();
        for m in self.modules.keys() {
            visit(self, m, &mut marks, &mut Vec::new())?;
        }
        Ok(())
    }
}
