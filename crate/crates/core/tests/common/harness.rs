//! Corpus programs wired to random fact tables, shared by the acceptance
//! suite and the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

use fslang::ast::Type;
use fslang::parser::parse_program;
use fslang::prelude::corpus;
use fslang::runtime::{DValue, PValue, Table};
use fslang::typecheck::{check_program_full, CheckedProgram};
use rand::Rng;

use super::{atoms, always_true, from_plain, random_table, small_nat, symbols, Universe, OD};

pub const UNIVERSE_SIZE: usize = 8;
pub const MAX_ROWS: usize = 32;
pub const BASES: [&str; 5] = ["A", "B", "C", "person", "film"];

pub struct Instance {
    pub name: String,
    pub prog: CheckedProgram,
    pub facts: HashMap<String, Table>,
    pub universe: Universe,
}

fn col(ty: &str) -> Vec<DValue> {
    atoms(&symbols(ty, UNIVERSE_SIZE))
}

fn base_universe() -> Universe {
    let mut u = Universe::default();
    for b in BASES {
        u.atoms.insert(b.to_string(), symbols(b, UNIVERSE_SIZE));
    }
    u
}

fn bool_facts(rng: &mut impl Rng, cols: &[&str]) -> Table {
    let cols: Vec<_> = cols.iter().map(|c| col(c)).collect();
    random_table(rng, &cols, MAX_ROWS, always_true)
}

fn nat_facts(rng: &mut impl Rng, cols: &[&str]) -> Table {
    let cols: Vec<_> = cols.iter().map(|c| col(c)).collect();
    random_table(rng, &cols, MAX_ROWS, small_nat)
}

pub fn source(name: &str) -> String {
    corpus()
        .unwrap()
        .into_iter()
        .find(|e| e.meta.name == name)
        .unwrap_or_else(|| panic!("no corpus entry {name}"))
        .source
}

/// The programs exercised against random facts.
pub const PROGRAMS: [&str; 13] = [
    "cross", "intersect", "filter", "costars", "filmCount", "matMul", "map", "pure", "join", "union", "curry",
    "uncurry", "mutuals",
];

/// Corpus program `name` followed by a `result` definition applying it
/// to fact tables, with an assignment of random facts.
pub fn instance(name: &str, rng: &mut impl Rng) -> Instance {
    let mut src = source(name);
    let mut facts = HashMap::new();
    let mut universe = base_universe();
    let extra = match name {
        "cross" => {
            facts.insert("f".into(), bool_facts(rng, &["A"]));
            facts.insert("g".into(), bool_facts(rng, &["B"]));
            "facts f : A ~> bool from \"f\"; facts g : B ~> bool from \"g\";
             def result : A ~> B ~> bool = cross f g;"
        }
        "intersect" | "union" => {
            facts.insert("f".into(), bool_facts(rng, &["A"]));
            facts.insert("g".into(), bool_facts(rng, &["A"]));
            if name == "union" {
                "facts f : A ~> bool from \"f\"; facts g : A ~> bool from \"g\";
                 def result : A ~> bool = union <f, g>;"
            } else {
                "facts f : A ~> bool from \"f\"; facts g : A ~> bool from \"g\";
                 def result : A ~> bool = intersect f g;"
            }
        }
        "filter" => {
            facts.insert("f".into(), bool_facts(rng, &["A"]));
            facts.insert("p".into(), bool_facts(rng, &["A"]));
            "facts f : A ~> bool from \"f\"; facts p : A ~> bool from \"p\";
             def result : A ~> bool = filter (fn a => p a) f;"
        }
        "costars" | "filmCount" => {
            facts.insert("stars".into(), bool_facts(rng, &["film", "person"]));
            ""
        }
        "mutuals" => {
            facts.insert("follows".into(), bool_facts(rng, &["person", "person"]));
            ""
        }
        "matMul" => {
            facts.insert("m".into(), nat_facts(rng, &["A", "B"]));
            facts.insert("n".into(), nat_facts(rng, &["B", "C"]));
            "facts m : A ~> B ~> nat from \"m\"; facts n : B ~> C ~> nat from \"n\";
             def result : A ~> C ~> nat = matMul m n;"
        }
        "map" => {
            // A total function A -> B needs a default, so B's atoms are declared.
            let bs = symbols("B", UNIVERSE_SIZE);
            src = src.replace("type B;", &format!("type B = {};", bs.join(", ")));
            let b_col = col("B");
            let h = random_table(rng, &[col("A")], MAX_ROWS, |r| {
                PValue::Just(Box::new(b_col[r.gen_range(0..b_col.len())].clone()))
            });
            facts.insert("h".into(), h);
            facts.insert("count".into(), nat_facts(rng, &["A"]));
            "facts h : A ~> maybe B from \"h\"; facts count : A ~> nat from \"count\";
             def result : B ~> nat = map (fn a => if just b = h a then b else b0) count;"
        }
        "pure" => {
            facts.insert("f".into(), bool_facts(rng, &["A"]));
            "facts f : A ~> bool from \"f\";
             def result : A ~> A ~> nat = fn x => fn a => f x and pure x a;"
        }
        "join" => {
            let bags: Vec<DValue> = (0..4)
                .map(|_| loop {
                    let t = nat_facts(rng, &["A"]);
                    if !t.is_empty() {
                        break DValue::Wrapped(PValue::table(t));
                    }
                })
                .collect();
            universe.extra.insert("A ~> nat".into(), bags.iter().map(from_plain).collect::<Vec<OD>>());
            facts.insert("nested".into(), random_table(rng, &[bags], MAX_ROWS, small_nat));
            "facts nested : (A ~> nat) ~> nat from \"nested\";
             def result : A ~> nat = join nested;"
        }
        "curry" => {
            let pairs: Vec<DValue> =
                col("A").into_iter().flat_map(|a| col("B").into_iter().map(move |b| DValue::pair(a.clone(), b))).collect();
            facts.insert("f".into(), random_table(rng, &[pairs], MAX_ROWS, small_nat));
            "facts f : A * B ~> nat from \"f\"; def result : A ~> B ~> nat = curry f;"
        }
        "uncurry" => {
            facts.insert("f".into(), nat_facts(rng, &["A", "B"]));
            "facts f : A ~> B ~> nat from \"f\"; def result : A * B ~> nat = uncurry f;"
        }
        other => panic!("no harness for {other}"),
    };
    src.push('\n');
    src.push_str(extra);
    let prog = check_program_full(&parse_program(&src).unwrap()).unwrap_or_else(|e| panic!("{name}: {e}"));
    Instance { name: name.to_string(), prog, facts, universe }
}

/// Definitions whose values are first-order and can be compared.
pub fn comparable(ty: &Type) -> bool {
    match ty {
        Type::Forget(p) => comparable(p),
        t => t.is_pointed() && t.is_first_order(),
    }
}
