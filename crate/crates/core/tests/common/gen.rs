//! Random surface terms over a fixed signature. Variable occurrences are
//! drawn without regard to grounding order, so both accepted and rejected
//! programs come out.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;

pub const SIGNATURE: &str = "type A = a0, a1, a2, a3;
facts f : A ~> bool from \"f\";
facts g : A ~> bool from \"g\";
facts n : A ~> nat from \"n\";
facts r : A ~> A ~> bool from \"r\";";

const BINDERS: [&str; 3] = ["z", "w", "v"];

fn var<'a>(rng: &mut impl Rng, scope: &[&'a str]) -> &'a str {
    scope.choose(rng).copied().unwrap_or("a0")
}

fn binder(scope: &[&str]) -> &'static str {
    BINDERS.iter().find(|b| !scope.contains(b)).copied().unwrap_or("u")
}

pub fn bool_term(rng: &mut impl Rng, depth: u32, scope: &[&str]) -> String {
    let leaf = depth == 0 || rng.gen_bool(0.3);
    if leaf {
        return match rng.gen_range(0..4) {
            0 => format!("f {}", var(rng, scope)),
            1 => format!("g {}", var(rng, scope)),
            2 => format!("r {} {}", var(rng, scope), var(rng, scope)),
            _ => format!("({} = {})", var(rng, scope), var(rng, scope)),
        };
    }
    let d = depth - 1;
    match rng.gen_range(0..4) {
        0 => format!("({} and {})", bool_term(rng, d, scope), bool_term(rng, d, scope)),
        1 => format!("({} or {})", bool_term(rng, d, scope), bool_term(rng, d, scope)),
        2 => format!("({} when {})", bool_term(rng, d, scope), bool_term(rng, d, scope)),
        _ => {
            let b = binder(scope);
            let inner: Vec<&str> = scope.iter().copied().chain([b]).collect();
            format!("exists (fn {b} => {})", bool_term(rng, d, &inner))
        }
    }
}

pub fn nat_term(rng: &mut impl Rng, depth: u32, scope: &[&str]) -> String {
    let leaf = depth == 0 || rng.gen_bool(0.3);
    if leaf {
        return match rng.gen_range(0..3) {
            0 => "1".into(),
            1 => format!("(2 when {})", bool_term(rng, 0, scope)),
            _ => format!("n {}", var(rng, scope)),
        };
    }
    let d = depth - 1;
    match rng.gen_range(0..4) {
        0 => format!("({} + {})", nat_term(rng, d, scope), nat_term(rng, d, scope)),
        1 => format!("({} * {})", nat_term(rng, d, scope), nat_term(rng, d, scope)),
        2 => format!("({} when {})", nat_term(rng, d, scope), bool_term(rng, d, scope)),
        _ => {
            let b = binder(scope);
            let inner: Vec<&str> = scope.iter().copied().chain([b]).collect();
            format!("sum (fn {b} => {})", nat_term(rng, d, &inner))
        }
    }
}

/// A two-argument definition `d` with either a bool or a nat body.
pub fn definition(rng: &mut impl Rng, depth: u32) -> String {
    definition_with(rng, depth, ["x", "y"])
}

/// Same as [`definition`] with the two parameters named `params`; equal
/// seeds give α-equivalent programs.
pub fn definition_with(rng: &mut impl Rng, depth: u32, params: [&str; 2]) -> String {
    let [x, y] = params;
    if rng.gen_bool(0.5) {
        format!("def d : A ~> A ~> bool = fn {x} => fn {y} => {};", bool_term(rng, depth, &params))
    } else {
        format!("def d : A ~> A ~> nat = fn {x} => fn {y} => {};", nat_term(rng, depth, &params))
    }
}
