use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use super::facts::ExternalFacts;
use crate::ir::{Expr, FuncDecl, QName, Rule, TypeDecl};

/// One reason a function is not pattern complete.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Incompleteness {
    /// A case over `type_name` lacks branches for `missing`.
    MissingConstructors {
        type_name: QName,
        missing: Vec<QName>,
    },
    /// A case without branches.
    EmptyCase,
    /// An external whose facts do not declare it totally defined.
    PartialPrimitive(QName),
}

impl fmt::Display for Incompleteness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Incompleteness::MissingConstructors { type_name, missing } => {
                let names: Vec<String> = missing.iter().map(QName::to_string).collect();
                write!(f, "{type_name}: missing {}", names.join(", "))
            }
            Incompleteness::EmptyCase => f.write_str("case without branches"),
            Incompleteness::PartialPrimitive(q) => write!(f, "primitive {q} is partial"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct CompletenessReport {
    pub gaps: Vec<Incompleteness>,
}

impl CompletenessReport {
    pub fn complete(&self) -> bool {
        self.gaps.is_empty()
    }

    /// `(scrutinee type, missing constructors)` for each incomplete case.
    pub fn witnesses(&self) -> Vec<(&QName, &[QName])> {
        self.gaps
            .iter()
            .filter_map(|g| match g {
                Incompleteness::MissingConstructors { type_name, missing } => {
                    Some((type_name, missing.as_slice()))
                }
                _ => None,
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("unknown constructor {0}")]
pub struct UnknownConstructor(pub QName);

/// Whether every case in the body of `func` covers all constructors of its
/// type. A disjunction is complete when one of its arms is.
pub fn pattern_completeness(
    types: &[&TypeDecl],
    func: &FuncDecl,
    facts: &ExternalFacts,
) -> Result<CompletenessReport, UnknownConstructor> {
    let body = match &func.rule {
        Rule::External(_) => {
            let gaps = if facts.lookup(&func.name).totally_defined {
                vec![]
            } else {
                vec![Incompleteness::PartialPrimitive(func.name.clone())]
            };
            return Ok(CompletenessReport { gaps });
        }
        Rule::Defined { body, .. } => body,
    };
    let mut owner = HashMap::new();
    for t in types {
        for c in &t.constructors {
            owner.entry(&c.name).or_insert(*t);
        }
    }
    let mut gaps = Vec::new();
    pc(body, &owner, &mut gaps)?;
    Ok(CompletenessReport { gaps })
}

fn pc(
    e: &Expr,
    owner: &HashMap<&QName, &TypeDecl>,
    gaps: &mut Vec<Incompleteness>,
) -> Result<(), UnknownConstructor> {
    match e {
        Expr::Var(_) => Ok(()),
        Expr::Comb(_, _, args) => args.iter().try_for_each(|a| pc(a, owner, gaps)),
        Expr::Free(_, b) => pc(b, owner, gaps),
        Expr::Or(l, r) => {
            let mut left = Vec::new();
            pc(l, owner, &mut left)?;
            if left.is_empty() {
                return Ok(());
            }
            let mut right = Vec::new();
            pc(r, owner, &mut right)?;
            if !right.is_empty() {
                gaps.extend(left);
                gaps.extend(right);
            }
            Ok(())
        }
        Expr::Case(_, s, branches) => {
            pc(s, owner, gaps)?;
            let mut covered = BTreeSet::new();
            let mut decl: Option<&TypeDecl> = None;
            for b in branches {
                let c = &b.pattern.constructor;
                let t = owner.get(c).ok_or_else(|| UnknownConstructor(c.clone()))?;
                decl.get_or_insert(t);
                covered.insert(c);
            }
            match decl {
                None => gaps.push(Incompleteness::EmptyCase),
                Some(t) => {
                    let missing: Vec<QName> = t
                        .constructors
                        .iter()
                        .filter(|c| !covered.contains(&c.name))
                        .map(|c| c.name.clone())
                        .collect();
                    if !missing.is_empty() {
                        gaps.push(Incompleteness::MissingConstructors {
                            type_name: t.name.clone(),
                            missing,
                        });
                    }
                }
            }
            for b in branches {
                pc(&b.body, owner, gaps)?;
            }
            Ok(())
        }
    }
}
