use std::collections::BTreeSet;

use flatbrowse::flat::parse_module;
use flatbrowse::ir::{
    Branch, CaseMode, Expr, FuncDecl, Pattern, QName, Rule, TypeExpr, Visibility,
};
use flatbrowse::testkit::random_program;
use flatbrowse::views::{
    guard_equality, signature_report, source_rules, source_view, LhsPattern, SurfaceRule,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ARGS: [&str; 3] = ["a", "b", "c"];

fn q(n: &str) -> QName {
    QName::new("M", n)
}

/// Random case trees that match argument columns left to right, keep
/// disjunctions right-nested and never match a column again in a later
/// alternative, so that left-to-right compilation recovers them.
struct TreeGen {
    rng: ChaCha8Rng,
    fresh: usize,
}

impl TreeGen {
    fn leaf(&mut self, scope: &[String]) -> Expr {
        let pick = |g: &mut Self| Expr::var(scope[g.rng.gen_range(0..scope.len())].clone());
        match self.rng.gen_range(0..3) {
            0 => pick(self),
            1 => Expr::call(q("k"), vec![pick(self), pick(self)]),
            _ => Expr::cons(q("N"), vec![]),
        }
    }

    fn alternative(
        &mut self,
        next_col: usize,
        forbidden: &BTreeSet<usize>,
        scope: &mut Vec<String>,
        depth: u32,
    ) -> Expr {
        let choice = self.rng.gen_range(0..3);
        let open: Vec<usize> = (next_col..ARGS.len())
            .filter(|c| !forbidden.contains(c))
            .collect();
        if depth > 0 && !open.is_empty() && choice == 0 {
            let col = open[self.rng.gen_range(0..open.len())];
            let mut cons = vec![("N", 0), ("C", 2)];
            if self.rng.gen_bool(0.5) {
                cons.reverse();
            }
            cons.truncate(self.rng.gen_range(1..=2));
            let branches = cons
                .into_iter()
                .map(|(c, n)| {
                    let vars: Vec<String> = (0..n)
                        .map(|_| {
                            self.fresh += 1;
                            format!("p{}", self.fresh)
                        })
                        .collect();
                    let mark = scope.len();
                    scope.extend(vars.iter().cloned());
                    let body = self.expr(col + 1, forbidden, scope, depth - 1);
                    scope.truncate(mark);
                    Branch {
                        pattern: Pattern {
                            constructor: q(c),
                            vars,
                        },
                        body,
                    }
                })
                .collect();
            return Expr::case(CaseMode::Flex, Expr::var(ARGS[col]), branches);
        }
        let free: Vec<String> = (0..self.rng.gen_range(0..=1))
            .map(|_| {
                self.fresh += 1;
                format!("v{}", self.fresh)
            })
            .collect();
        let mark = scope.len();
        scope.extend(free.iter().cloned());
        let e = self.guard_or_leaf(choice == 1, scope);
        scope.truncate(mark);
        if free.is_empty() {
            e
        } else {
            Expr::free(free, e)
        }
    }

    fn guard_or_leaf(&mut self, guard: bool, scope: &[String]) -> Expr {
        let rhs = self.leaf(scope);
        if guard {
            let eq = Expr::call(guard_equality(), vec![self.leaf(scope), self.leaf(scope)]);
            let t = Branch {
                pattern: Pattern {
                    constructor: QName::new("Prelude", "True"),
                    vars: vec![],
                },
                body: rhs,
            };
            return Expr::case(CaseMode::Rigid, eq, vec![t]);
        }
        rhs
    }

    fn expr(
        &mut self,
        next_col: usize,
        forbidden: &BTreeSet<usize>,
        scope: &mut Vec<String>,
        depth: u32,
    ) -> Expr {
        let n = self.rng.gen_range(1..=3);
        let mut later = forbidden.clone();
        let mut alts: Vec<Expr> = Vec::new();
        for _ in 0..n {
            let a = self.alternative(next_col, &later, scope, depth);
            if let Some(c) = case_column(&a) {
                later.insert(ARGS.iter().position(|x| *x == c).unwrap());
            }
            alts.push(a);
        }
        let last = alts.pop().unwrap();
        alts.into_iter().rev().fold(last, |acc, a| Expr::or(a, acc))
    }
}

fn case_column(e: &Expr) -> Option<&str> {
    match e {
        Expr::Case(CaseMode::Flex, s, _) => match s.as_ref() {
            Expr::Var(v) => Some(v),
            _ => None,
        },
        _ => None,
    }
}

/// Left-to-right pattern compilation of equations back to a flat body.
fn compile(rules: &[SurfaceRule], matched: &BTreeSet<usize>) -> Expr {
    let first = &rules[0];
    let col = (0..first.lhs.len())
        .find(|i| !matched.contains(i) && matches!(first.lhs[*i], LhsPattern::Cons(_)));
    let (head, rest) = match col {
        None => {
            let e = match &first.guard {
                None => first.rhs.clone(),
                Some(g) => Expr::case(
                    CaseMode::Rigid,
                    g.clone(),
                    vec![Branch {
                        pattern: Pattern {
                            constructor: QName::new("Prelude", "True"),
                            vars: vec![],
                        },
                        body: first.rhs.clone(),
                    }],
                ),
            };
            let e = if first.free.is_empty() {
                e
            } else {
                Expr::free(first.free.clone(), e)
            };
            (e, &rules[1..])
        }
        Some(c) => {
            let run = rules
                .iter()
                .take_while(|r| matches!(r.lhs[c], LhsPattern::Cons(_)))
                .count();
            let mut groups: Vec<(Pattern, Vec<SurfaceRule>)> = Vec::new();
            for r in &rules[..run] {
                let LhsPattern::Cons(p) = &r.lhs[c] else {
                    unreachable!()
                };
                match groups.last_mut() {
                    Some((gp, rs)) if gp.constructor == p.constructor => rs.push(r.clone()),
                    _ => groups.push((p.clone(), vec![r.clone()])),
                }
            }
            let mut inner = matched.clone();
            inner.insert(c);
            let branches = groups
                .into_iter()
                .map(|(pattern, rs)| Branch {
                    pattern,
                    body: compile(&rs, &inner),
                })
                .collect();
            (
                Expr::case(CaseMode::Flex, Expr::var(ARGS[c]), branches),
                &rules[run..],
            )
        }
    };
    if rest.is_empty() {
        head
    } else {
        Expr::or(head, compile(rest, matched))
    }
}

fn func(body: Expr) -> FuncDecl {
    let l = || TypeExpr::Cons(q("L"), vec![]);
    FuncDecl {
        name: q("f"),
        arity: 3,
        visibility: Visibility::Public,
        type_sig: TypeExpr::func(l(), TypeExpr::func(l(), TypeExpr::func(l(), l()))),
        rule: Rule::Defined {
            args: ARGS.iter().map(|s| s.to_string()).collect(),
            body,
        },
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn equations_recompile_to_the_flat_body(seed in any::<u64>()) {
        let mut g = TreeGen { rng: ChaCha8Rng::seed_from_u64(seed), fresh: 0 };
        let mut scope: Vec<String> = ARGS.iter().map(|s| s.to_string()).collect();
        let body = g.expr(0, &BTreeSet::new(), &mut scope, 3);
        let f = func(body.clone());
        let rules = source_rules(&f).expect("tree shape");
        prop_assert!(!rules.is_empty());
        prop_assert_eq!(compile(&rules, &BTreeSet::new()), body);
    }

    #[test]
    fn signature_report_has_one_line_per_function(seed in any::<u64>()) {
        let p = random_program(&mut ChaCha8Rng::seed_from_u64(seed), "Gen");
        let report = signature_report(&p);
        let lines: Vec<&str> = report.lines().collect();
        prop_assert_eq!(lines.len(), p.functions.len());
        let heads: BTreeSet<&str> = lines.iter().map(|l| l.split(" :: ").next().unwrap()).collect();
        prop_assert_eq!(heads.len(), p.functions.len());
        for l in &lines {
            // Renamed variables start at a and appear in first-use order.
            let vars: Vec<&str> = l
                .split(" :: ")
                .nth(1)
                .unwrap()
                .split(|c: char| !c.is_alphanumeric())
                .filter(|w| w.chars().next().is_some_and(|c| c.is_ascii_lowercase()))
                .collect();
            let mut firsts: Vec<&str> = Vec::new();
            for v in vars {
                if !firsts.contains(&v) {
                    firsts.push(v);
                }
            }
            let want: Vec<String> = (0..firsts.len()).map(|i| ((b'a' + i as u8) as char).to_string()).collect();
            prop_assert_eq!(firsts, want.iter().map(String::as_str).collect::<Vec<_>>());
        }
    }

    #[test]
    fn source_view_of_generated_programs_mentions_every_function(seed in any::<u64>()) {
        let p = random_program(&mut ChaCha8Rng::seed_from_u64(seed), "Gen");
        let v = source_view(&p);
        prop_assert!(v.starts_with("module Gen imports (Prelude, Lib)\n"));
        for f in &p.functions {
            let sig = format!("\n{}{} :: ", if f.visibility == Visibility::Private { "private " } else { "" }, display(&f.name.name));
            prop_assert!(v.contains(&sig), "{} missing in\n{}", sig, v);
        }
    }
}

fn display(name: &str) -> String {
    if name
        .chars()
        .next()
        .is_some_and(|c| c.is_alphabetic() || c == '_')
    {
        name.to_string()
    } else {
        format!("({name})")
    }
}

#[test]
fn externals_and_clashes_have_no_equations() {
    let p = parse_module(
        "module M imports ()\ndata L = N | C L L\n\
         e :: L -> L\ne external \"e\"\n\
         d :: L -> L\nd x = fcase x of { C y y -> y ; N -> N }\n",
    )
    .unwrap();
    assert_eq!(source_rules(&p.functions[0]), None);
    assert_eq!(source_rules(&p.functions[1]), None);
}
