use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use flatbrowse::flat::{emit_text, to_interface, to_structured};
use flatbrowse::ir::Prog;
use flatbrowse::store::{LoadLevel, ProgramStore, StoreError};
use flatbrowse::testkit::random_import_dag;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Layout {
    Text,
    Structured,
    InterfaceOnly,
    TextAndInterface,
}

impl Layout {
    fn has_full(self) -> bool {
        self != Layout::InterfaceOnly
    }
}

fn write(dir: &Path, p: &Prog, layout: Layout) {
    let base = dir.join(&p.name);
    let with = |ext: &str| PathBuf::from(format!("{}.{ext}", base.display()));
    match layout {
        Layout::Text => fs::write(with("fl"), emit_text(p)).unwrap(),
        Layout::Structured => fs::write(with("fl.json"), to_structured(p)).unwrap(),
        Layout::InterfaceOnly => {
            fs::write(with("fint.json"), to_structured(&to_interface(p))).unwrap()
        }
        Layout::TextAndInterface => {
            fs::write(with("fl"), emit_text(p)).unwrap();
            fs::write(with("fint.json"), to_structured(&to_interface(p))).unwrap();
        }
    }
}

struct World {
    _dir: tempfile::TempDir,
    path: PathBuf,
    programs: Vec<Prog>,
    layouts: Vec<Layout>,
    rng: ChaCha8Rng,
}

fn world(seed: u64, n: usize) -> World {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let programs = random_import_dag(&mut rng, n);
    let dir = tempfile::tempdir().unwrap();
    let all = [
        Layout::Text,
        Layout::Structured,
        Layout::InterfaceOnly,
        Layout::TextAndInterface,
    ];
    let mut layouts: Vec<Layout> = (0..n).map(|_| *all.choose(&mut rng).unwrap()).collect();
    // The main module always has a full program.
    if !layouts[n - 1].has_full() {
        layouts[n - 1] = Layout::Text;
    }
    for (p, l) in programs.iter().zip(&layouts) {
        write(dir.path(), p, *l);
    }
    World {
        path: dir.path().to_path_buf(),
        _dir: dir,
        programs,
        layouts,
        rng,
    }
}

fn index(name: &str) -> usize {
    name[1..].parse().unwrap()
}

fn closure(programs: &[Prog], root: usize) -> BTreeSet<String> {
    let mut seen = BTreeSet::new();
    let mut todo = vec![programs[root].name.clone()];
    while let Some(m) = todo.pop() {
        if seen.insert(m.clone()) {
            todo.extend(programs[index(&m)].imports.iter().cloned());
        }
    }
    seen
}

fn check_closed(store: &ProgramStore, w: &World) -> Result<(), TestCaseError> {
    prop_assert!(store.is_closed());
    let main = w.programs.len() - 1;
    let expected = closure(&w.programs, main);
    let loaded: BTreeSet<String> = store.module_names().iter().map(|s| s.to_string()).collect();
    prop_assert_eq!(&loaded, &expected);
    for name in &loaded {
        let m = store.module(name).unwrap();
        let original = &w.programs[index(name)];
        prop_assert!(m.diagnostics.is_empty(), "{}: {:?}", name, m.diagnostics);
        match m.level {
            LoadLevel::Full => prop_assert_eq!(&m.program, original),
            LoadLevel::InterfaceOnly => prop_assert_eq!(&m.program, &to_interface(original)),
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn open_loads_main_fully_and_imports_as_interfaces(seed in any::<u64>(), n in 1usize..8) {
        let w = world(seed, n);
        let main = format!("M{}", n - 1);
        let store = ProgramStore::open(&[w.path.clone()], &main).unwrap();
        prop_assert_eq!(store.version(), 1);
        check_closed(&store, &w)?;
        for name in store.module_names() {
            let want = if name == main { LoadLevel::Full } else { LoadLevel::InterfaceOnly };
            prop_assert_eq!(store.level(name), Some(want));
        }
    }

    #[test]
    fn upgrades_in_any_order(seed in any::<u64>(), n in 1usize..8) {
        let mut w = world(seed, n);
        let main = format!("M{}", n - 1);
        let mut store = ProgramStore::open(&[w.path.clone()], &main).unwrap();
        let mut order: Vec<String> = store.module_names().iter().map(|s| s.to_string()).collect();
        order.shuffle(&mut w.rng);
        for _ in 0..w.rng.gen_range(0..3) {
            let extra = order[w.rng.gen_range(0..order.len())].clone();
            order.push(extra);
        }
        for name in &order {
            let before = store.version();
            let was_full = store.level(name) == Some(LoadLevel::Full);
            match store.ensure_full(name) {
                Ok(next) => {
                    prop_assert!(w.layouts[index(name)].has_full());
                    prop_assert_eq!(next.level(name), Some(LoadLevel::Full));
                    prop_assert_eq!(next.version(), before + u64::from(!was_full));
                    let again = next.ensure_full(name).unwrap();
                    prop_assert_eq!(again.version(), next.version());
                    store = next;
                }
                Err(StoreError::FullSourceMissing(m)) => {
                    prop_assert_eq!(&m, name);
                    prop_assert!(!w.layouts[index(name)].has_full());
                }
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            }
            prop_assert_eq!(store.version(), before + u64::from(!was_full && store.level(name) == Some(LoadLevel::Full)));
            check_closed(&store, &w)?;
        }
        let everything = store.ensure_full_closure();
        let missing = store
            .module_names()
            .iter()
            .any(|m| !w.layouts[index(m)].has_full());
        match everything {
            Ok(full) => {
                prop_assert!(!missing);
                prop_assert!(full.version() >= store.version());
                for name in full.module_names() {
                    prop_assert_eq!(full.level(name), Some(LoadLevel::Full));
                }
                check_closed(&full, &w)?;
                prop_assert_eq!(full.ensure_full_closure().unwrap().version(), full.version());
            }
            Err(StoreError::FullSourceMissing(_)) => prop_assert!(missing),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
    }

    #[test]
    fn final_state_does_not_depend_on_order(seed in any::<u64>(), n in 1usize..7) {
        let mut w = world(seed, n);
        let main = format!("M{}", n - 1);
        let open = ProgramStore::open(&[w.path.clone()], &main).unwrap();
        let mut names: Vec<String> = open
            .module_names()
            .iter()
            .filter(|m| w.layouts[index(m)].has_full())
            .map(|s| s.to_string())
            .collect();
        let run = |order: &[String]| {
            let mut s = open.clone();
            for m in order {
                s = s.ensure_full(m).unwrap();
            }
            s.modules()
                .map(|(k, m)| (k.to_string(), m.level, m.program.clone()))
                .collect::<Vec<_>>()
        };
        let first = run(&names);
        names.shuffle(&mut w.rng);
        prop_assert_eq!(run(&names), first);
    }
}

fn tmp_with(files: &[(&str, &str)]) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    for (name, text) in files {
        fs::write(dir.path().join(name), text).unwrap();
    }
    dir
}

#[test]
fn import_cycle_is_reported_with_its_path() {
    let dir = tmp_with(&[
        ("A.fl", "module A imports (B)\n"),
        ("B.fl", "module B imports (C)\n"),
        ("C.fl", "module C imports (A)\n"),
    ]);
    let err = ProgramStore::open(&[dir.path().to_path_buf()], "A").unwrap_err();
    assert_eq!(
        err,
        StoreError::ImportCycle(vec!["A".into(), "B".into(), "C".into(), "A".into()])
    );
}

#[test]
fn missing_module_lists_probed_paths() {
    let dir = tmp_with(&[("A.fl", "module A imports (Nowhere)\n")]);
    let err = ProgramStore::open(&[dir.path().to_path_buf()], "A").unwrap_err();
    let StoreError::ModuleNotFound { name, tried } = err else {
        panic!("{err:?}")
    };
    assert_eq!(name, "Nowhere");
    let tried: Vec<String> = tried
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    assert_eq!(
        tried,
        ["Nowhere.fl.json", "Nowhere.fl", "Nowhere.fint.json"]
    );
}

#[test]
fn interface_only_main_cannot_be_opened() {
    let p = Prog::empty("I");
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), &p, Layout::InterfaceOnly);
    let err = ProgramStore::open(&[dir.path().to_path_buf()], "I").unwrap_err();
    assert_eq!(err, StoreError::FullSourceMissing("I".into()));
}

#[test]
fn parse_failures_name_the_file() {
    let dir = tmp_with(&[
        ("A.fl", "module A imports (B)\n"),
        ("B.fl.json", "{\"module\": \"B\"}"),
    ]);
    let err = ProgramStore::open(&[dir.path().to_path_buf()], "A").unwrap_err();
    let StoreError::ParseFailed { name, path, .. } = &err else {
        panic!("{err:?}")
    };
    assert_eq!(name, "B");
    assert!(path.ends_with("B.fl.json"));
    let dir = tmp_with(&[("A.fl", "module B imports ()\n")]);
    let err = ProgramStore::open(&[dir.path().to_path_buf()], "A").unwrap_err();
    assert!(err.to_string().contains("declares module B"), "{err}");
}

#[test]
fn structured_file_wins_over_text_and_first_directory_wins() {
    let mut p = Prog::empty("A");
    p.imports.push("Prelude".into());
    let first = tmp_with(&[("A.fl", "module A imports ()\n")]);
    fs::write(first.path().join("A.fl.json"), to_structured(&p)).unwrap();
    let second = tmp_with(&[
        ("A.fl", "module A imports ()\n"),
        (
            "Prelude.fl",
            "module Prelude imports ()\ndata Bool = True | False\n",
        ),
    ]);
    let paths = [first.path().to_path_buf(), second.path().to_path_buf()];
    let store = ProgramStore::open(&paths, "A").unwrap();
    assert_eq!(store.module("A").unwrap().program, p);
    let prelude = store.module("Prelude").unwrap();
    assert!(prelude
        .files
        .text
        .as_ref()
        .unwrap()
        .starts_with(second.path()));
    assert_eq!(prelude.level, LoadLevel::InterfaceOnly);
}

#[test]
fn upgrading_reads_the_full_file_even_when_an_interface_exists() {
    let dir = tmp_with(&[
        ("A.fl", "module A imports (B)\nf :: B.T\nf = B.g\n"),
        (
            "B.fl",
            "module B imports ()\ndata T = K\ng :: T\ng = h\nprivate h :: T\nh = K\n",
        ),
    ]);
    let b = flatbrowse::flat::parse_module(
        "module B imports ()\ndata T = K\ng :: T\ng = h\nprivate h :: T\nh = K\n",
    )
    .unwrap();
    fs::write(
        dir.path().join("B.fint.json"),
        to_structured(&to_interface(&b)),
    )
    .unwrap();
    let store = ProgramStore::open(&[dir.path().to_path_buf()], "A").unwrap();
    assert_eq!(store.module("B").unwrap().program.functions.len(), 1);
    let full = store.ensure_full("B").unwrap();
    assert_eq!(full.module("B").unwrap().program, b);
    assert_eq!(full.version(), 2);
    assert_eq!(store.version(), 1);
    let unknown = full.ensure_full("Zed").unwrap_err();
    assert!(matches!(unknown, StoreError::ModuleNotFound { .. }));
}
