use std::collections::BTreeSet;

use crate::ir::{Prog, Rule, Visibility};

/// Entry name given to every function whose body was stripped.
pub const INTERFACE_ENTRY: &str = "interface";

/// Shrinks a module to what importers may see.
///
/// Private types and functions are dropped. A public type with any private
/// constructor is exported abstractly, with no constructors. Function rules
/// become `External("interface")`. Fixity declarations survive when they
/// name a remaining function or constructor.
pub fn to_interface(program: &Prog) -> Prog {
    let types: Vec<_> = program
        .types
        .iter()
        .filter(|t| t.visibility == Visibility::Public)
        .map(|t| {
            let mut t = t.clone();
            if t.constructors
                .iter()
                .any(|c| c.visibility == Visibility::Private)
            {
                t.constructors.clear();
            }
            t
        })
        .collect();
    let functions: Vec<_> = program
        .functions
        .iter()
        .filter(|f| f.visibility == Visibility::Public)
        .map(|f| {
            let mut f = f.clone();
            f.rule = Rule::External(INTERFACE_ENTRY.into());
            f
        })
        .collect();
    let exported: BTreeSet<_> = functions
        .iter()
        .map(|f| &f.name)
        .chain(
            types
                .iter()
                .flat_map(|t| t.constructors.iter().map(|c| &c.name)),
        )
        .collect();
    let operators = program
        .operators
        .iter()
        .filter(|op| exported.contains(&op.name))
        .cloned()
        .collect();
    Prog {
        name: program.name.clone(),
        imports: program.imports.clone(),
        types,
        functions,
        operators,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flat::parse_module;

    #[test]
    fn private_function_absent() {
        let p =
            parse_module("module M imports ()\nprivate f :: a\nf = g\ng :: a\ng = f\n").unwrap();
        let i = to_interface(&p);
        assert_eq!(i.functions.len(), 1);
        assert_eq!(i.functions[0].name.name, "g");
        assert_eq!(i.functions[0].rule, Rule::External("interface".into()));
    }

    #[test]
    fn private_constructor_makes_type_abstract() {
        let p = parse_module("module M imports ()\ndata T = A | private B\nprivate data U = U\n")
            .unwrap();
        let i = to_interface(&p);
        assert_eq!(i.types.len(), 1);
        assert!(i.types[0].constructors.is_empty());
    }

    #[test]
    fn fixity_follows_exported_names() {
        let src = "module M imports ()\ninfixl 6 +++\ninfixl 6 ---\n(+++) :: a -> a -> a\n(+++) x y = x\nprivate (---) :: a -> a -> a\n(---) x y = y\n";
        let i = to_interface(&parse_module(src).unwrap());
        assert_eq!(i.operators.len(), 1);
        assert_eq!(i.operators[0].name.name, "+++");
        assert_eq!(to_interface(&i), i);
    }
}
