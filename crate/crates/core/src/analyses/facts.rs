use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::ir::QName;

/// Declared behaviour of one external primitive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Facts {
    pub suspends: bool,
    pub impure: bool,
    pub totally_defined: bool,
    pub overlapping: bool,
    pub introduces_free_vars: bool,
}

impl Facts {
    /// The worst case assumed for primitives nobody described.
    pub const CONSERVATIVE: Facts = Facts {
        suspends: true,
        impure: true,
        totally_defined: false,
        overlapping: false,
        introduces_free_vars: false,
    };
}

impl Default for Facts {
    fn default() -> Self {
        Facts::CONSERVATIVE
    }
}

/// Facts for named externals plus defaults for the rest.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExternalFacts {
    pub defaults: Facts,
    pub facts: BTreeMap<QName, Facts>,
}

#[derive(Debug, Error)]
pub enum FactsError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("invalid externals file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid external name {0:?}; expected Module.name")]
    BadName(String),
}

#[derive(Deserialize, Default)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct PartialFacts {
    suspends: Option<bool>,
    impure: Option<bool>,
    totally_defined: Option<bool>,
    overlapping: Option<bool>,
    introduces_free_vars: Option<bool>,
}

impl PartialFacts {
    fn over(self, base: Facts) -> Facts {
        Facts {
            suspends: self.suspends.unwrap_or(base.suspends),
            impure: self.impure.unwrap_or(base.impure),
            totally_defined: self.totally_defined.unwrap_or(base.totally_defined),
            overlapping: self.overlapping.unwrap_or(base.overlapping),
            introduces_free_vars: self
                .introduces_free_vars
                .unwrap_or(base.introduces_free_vars),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FactsFile {
    #[serde(default)]
    defaults: PartialFacts,
    #[serde(default)]
    facts: BTreeMap<String, PartialFacts>,
}

/// File name looked up in the project root.
pub const EXTERNALS_FILE: &str = "externals.json";

impl ExternalFacts {
    pub fn lookup(&self, name: &QName) -> Facts {
        self.facts.get(name).copied().unwrap_or(self.defaults)
    }

    /// Parses an externals document. Fields missing from an entry take the
    /// document's defaults, which in turn fall back to [`Facts::CONSERVATIVE`].
    pub fn from_json(bytes: &[u8]) -> Result<ExternalFacts, FactsError> {
        let file: FactsFile = serde_json::from_slice(bytes)?;
        let defaults = file.defaults.over(Facts::CONSERVATIVE);
        let mut facts = BTreeMap::new();
        for (name, partial) in file.facts {
            let q = QName::parse(&name).ok_or(FactsError::BadName(name))?;
            facts.insert(q, partial.over(defaults));
        }
        Ok(ExternalFacts { defaults, facts })
    }

    pub fn load(path: &Path) -> Result<ExternalFacts, FactsError> {
        let bytes = std::fs::read(path).map_err(|e| FactsError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json(&bytes)
    }

    /// The externals file of the first search path that has one; defaults
    /// only when none does.
    pub fn discover(search_paths: &[impl AsRef<Path>]) -> Result<ExternalFacts, FactsError> {
        for dir in search_paths {
            let candidate = dir.as_ref().join(EXTERNALS_FILE);
            if candidate.is_file() {
                return Self::load(&candidate);
            }
        }
        Ok(ExternalFacts::default())
    }
}
