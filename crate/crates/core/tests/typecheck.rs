mod common;

use std::collections::BTreeSet;

use common::gen::{definition, definition_with, SIGNATURE};
use fslang::ast::{Context, Span, Type};
use fslang::elab::{Body, Expr, Term, TermKind, UsageReport};
use fslang::parser::{parse_program, parse_term, parse_type};
use fslang::prelude::{corpus, Expect};
use fslang::typecheck::{check_program_full, check_term, CheckedProgram, ErrorKind, Globals};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

fn union(a: &UsageReport, b: &UsageReport) -> UsageReport {
    UsageReport {
        delta: a.delta.as_ref().zip(b.delta.as_ref()).map(|(x, y)| x.union(y).cloned().collect()),
        omega: a.omega.as_ref().zip(b.omega.as_ref()).map(|(x, y)| x.iter().chain(y).cloned().collect()),
    }
}

fn without(u: &UsageReport, names: &[&str]) -> UsageReport {
    UsageReport {
        delta: u.delta.as_ref().map(|d| d.iter().filter(|v| !names.contains(&v.as_str())).cloned().collect()),
        omega: u.omega.clone(),
    }
}

/// Re-derive every node's usage report from its children's and check the
/// side conditions of the rule that introduced it.
fn validate(t: &Term) -> Result<(), String> {
    use TermKind::*;
    let fail = |msg: String| Err(format!("{} node: {msg} (stored {})", t.kind.rule(), t.usage));
    let expected = match &t.kind {
        Nil => UsageReport::top(),
        Nat(_) | Prim(_) | Embed(_) | Just(_) => UsageReport::empty(),
        Var(x) => UsageReport::var(x),
        LamLolli(x, b) => {
            validate(b)?;
            if !b.usage.uses(x) {
                return fail(format!("body does not use `{x}`"));
            }
            if !b.usage.layout().is_empty() {
                return fail("body grounds variables".into());
            }
            UsageReport { omega: Some(Vec::new()), ..without(&b.usage, &[x]) }
        }
        LamFin { param, body, .. } => {
            validate(body)?;
            if !body.usage.grounds(param) {
                return fail(format!("body does not ground `{param}`"));
            }
            UsageReport {
                delta: body.usage.delta.clone(),
                omega: body.usage.omega.as_ref().map(|o| o.iter().filter(|v| *v != param).cloned().collect()),
            }
        }
        AppLolli(a, b) | SmashPair(a, b) | LetJust(_, a, b) => {
            validate(a)?;
            validate(b)?;
            disjoint(&a.usage, &b.usage).map_err(|m| format!("{}: {m}", t.kind.rule()))?;
            union(&a.usage, &b.usage)
        }
        LetSmash(x, y, s, u) => {
            validate(s)?;
            validate(u)?;
            if !u.usage.uses(x) || !u.usage.uses(y) {
                return fail("a component is unused".into());
            }
            let inner = without(&u.usage, &[x, y]);
            disjoint(&s.usage, &inner).map_err(|m| format!("@ e: {m}"))?;
            union(&s.usage, &inner)
        }
        AppFin(f, x) => {
            validate(f)?;
            if f.usage.omega.as_ref().is_some_and(|o| o.contains(x)) {
                return fail(format!("`{x}` grounded twice"));
            }
            UsageReport { delta: f.usage.delta.clone(), omega: f.usage.omega.as_ref().map(|o| [o.clone(), vec![x.clone()]].concat()) }
        }
        AppFinExpr(f, _) | WithProj(_, f) => {
            validate(f)?;
            f.usage.clone()
        }
        WithPair(a, b) => {
            validate(a)?;
            validate(b)?;
            let same = |x: Option<BTreeSet<&String>>, y: Option<BTreeSet<&String>>| x.is_none() || y.is_none() || x == y;
            if !same(a.usage.delta.as_ref().map(|d| d.iter().collect()), b.usage.delta.as_ref().map(|d| d.iter().collect()))
                || !same(a.usage.omega.as_ref().map(|o| o.iter().collect()), b.usage.omega.as_ref().map(|o| o.iter().collect()))
            {
                return fail("components disagree".into());
            }
            if a.usage.delta.is_some() { a.usage.clone() } else { b.usage.clone() }
        }
    };
    if let Embed(e) | Just(e) | AppFinExpr(_, e) = &t.kind {
        validate_expr(e)?;
    }
    if t.usage != expected {
        return fail(format!("re-derived {expected}"));
    }
    Ok(())
}

fn disjoint(a: &UsageReport, b: &UsageReport) -> Result<(), String> {
    if let (Some(x), Some(y)) = (&a.omega, &b.omega) {
        if let Some(v) = y.iter().find(|v| x.contains(v)) {
            return Err(format!("`{v}` grounded on both sides"));
        }
    }
    Ok(())
}

/// Pointed terms inside expressions are closed (rule `ui`).
fn validate_expr(e: &Expr) -> Result<(), String> {
    let mut result = Ok(());
    e.walk_terms(&mut |t| {
        if result.is_ok() {
            result = validate(t);
        }
    });
    if result.is_ok() {
        visit_ui(e, &mut result);
    }
    result
}

fn visit_ui(e: &Expr, result: &mut Result<(), String>) {
    match e {
        Expr::Term(t) => {
            if !t.usage.is_closed() {
                *result = Err(format!("ui node with open usage {}", t.usage));
            }
        }
        Expr::Lam(_, b) | Expr::Proj(_, b) => visit_ui(b, result),
        Expr::App(a, b) | Expr::Pair(a, b) => {
            visit_ui(a, result);
            visit_ui(b, result);
        }
        Expr::IfJust(s, _, a, b) => {
            visit_ui(s, result);
            visit_ui(a, result);
            visit_ui(b, result);
        }
        _ => {}
    }
}

fn validate_program(p: &CheckedProgram) -> Result<(), String> {
    for (name, _, body) in p.defs() {
        let r = match &**body {
            Body::Term(t) => {
                if !t.usage.is_closed() {
                    return Err(format!("{name}: open root usage {}", t.usage));
                }
                validate(t)
            }
            Body::Expr(e) => validate_expr(e),
        };
        r.map_err(|m| format!("{name}: {m}"))?;
    }
    Ok(())
}

#[test]
fn corpus_derivations_are_valid() {
    let mut n = 0;
    for e in corpus().unwrap().into_iter().filter(|e| e.meta.expect == Expect::Accept) {
        let p = check_program_full(&e.parse().unwrap()).unwrap();
        validate_program(&p).unwrap_or_else(|m| panic!("{}: {m}", e.meta.name));
        n += 1;
    }
    assert!(n >= 20);
}

fn globals() -> Globals {
    let mut g = Globals::default();
    g.declare_type("A", &[], Span::default()).unwrap();
    g.declare_var("f", parse_type("A ~> bool").unwrap(), Span::default()).unwrap();
    g.declare_var("r", parse_type("A ~> A ~> bool").unwrap(), Span::default()).unwrap();
    g
}

fn in_context(ctx: &Context, src: &str, ty: &str) -> Result<Term, ErrorKind> {
    check_term(&globals(), ctx, &parse_term(src).unwrap(), &parse_type(ty).unwrap()).map_err(|e| e.kind)
}

fn ctx(delta: &[(&str, &str)], omega: &[(&str, &str)]) -> Context {
    let ty = |(n, t): &(&str, &str)| (n.to_string(), parse_type(t).unwrap());
    Context { gamma: Vec::new(), delta: delta.iter().map(ty).collect(), omega: omega.iter().map(ty).collect() }
}

#[test]
fn lookups_ground_in_order() {
    let c = ctx(&[], &[("x", "A"), ("y", "A")]);
    let t = in_context(&c, "r x y", "bool").unwrap();
    assert_eq!(t.usage, UsageReport::new(&[], &["x", "y"]));
    let t = in_context(&c, "r y x", "bool").unwrap();
    assert_eq!(t.usage, UsageReport::new(&[], &["y", "x"]));
    // The second lookup may use x once the first has grounded it.
    let t = in_context(&c, "f x and r x y", "bool").unwrap();
    assert_eq!(t.usage, UsageReport::new(&[], &["x", "y"]));
    validate(&t).unwrap();
}

#[test]
fn relevant_usage_is_reported() {
    let c = ctx(&[("p", "bool"), ("q", "bool")], &[("x", "A")]);
    let t = in_context(&c, "p and f x", "bool").unwrap();
    assert_eq!(t.usage, UsageReport::new(&["p"], &["x"]));
    let t = in_context(&c, "<p, q>", "bool & bool");
    assert_eq!(t.unwrap_err(), ErrorKind::RelevanceError);
    let t = in_context(&c, "<p and q, q and p>", "bool & bool").unwrap();
    assert_eq!(t.usage, UsageReport::new(&["p", "q"], &[]));
}

#[test]
fn with_components_must_ground_alike() {
    let c = ctx(&[], &[("x", "A")]);
    assert_eq!(in_context(&c, "<f x, nil>", "bool & bool").unwrap().usage, UsageReport::new(&[], &["x"]));
    assert_eq!(in_context(&c, "<f x, true>", "bool & bool").unwrap_err(), ErrorKind::GroundingError);
}

#[test]
fn nil_is_top() {
    let c = ctx(&[("p", "nat")], &[("x", "A")]);
    let t = in_context(&c, "nil", "nat").unwrap();
    assert_eq!(t.usage, UsageReport::top());
    // TOP absorbs the relevant usage of its partner.
    let t = in_context(&c, "(nil, p)", "nat @ nat").unwrap();
    assert_eq!(t.usage.delta, None);
}

#[test]
fn relevant_variables_cannot_be_keys() {
    let c = ctx(&[("p", "maybe A")], &[]);
    assert!(in_context(&c, "let just a = p in f a", "bool").is_ok());
    assert_eq!(in_context(&c, "f p", "bool").unwrap_err(), ErrorKind::RelevanceError);
}

#[test]
fn duplicate_context_entries_are_rejected() {
    let c = ctx(&[("p", "nat")], &[("p", "A")]);
    assert_eq!(in_context(&c, "p", "nat").unwrap_err(), ErrorKind::Redefinition);
}

fn check_src(src: &str) -> Result<CheckedProgram, ErrorKind> {
    check_program_full(&parse_program(&format!("{SIGNATURE}\n{src}")).unwrap()).map_err(|e| e.kind)
}

#[test]
fn generator_produces_both_verdicts() {
    let mut rng = StdRng::seed_from_u64(11);
    let verdicts: Vec<bool> = (0..300).map(|_| check_src(&definition(&mut rng, 3)).is_ok()).collect();
    let accepted = verdicts.iter().filter(|v| **v).count();
    assert!(accepted > 30 && accepted < 270, "{accepted} of 300 accepted");
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn accepted_programs_have_valid_derivations(seed in any::<u64>()) {
        let src = definition(&mut StdRng::seed_from_u64(seed), 3);
        if let Ok(p) = check_src(&src) {
            prop_assert!(validate_program(&p).is_ok(), "{}: {:?}", src, validate_program(&p));
        }
    }

    #[test]
    fn verdicts_are_invariant_under_renaming(seed in any::<u64>()) {
        let a = definition_with(&mut StdRng::seed_from_u64(seed), 3, ["x", "y"]);
        let b = definition_with(&mut StdRng::seed_from_u64(seed), 3, ["left", "right"]);
        prop_assert_eq!(check_src(&a).map(|_| ()), check_src(&b).map(|_| ()), "{} / {}", a, b);
    }

    #[test]
    fn shadowing_a_binder_is_harmless(seed in any::<u64>()) {
        // Wrapping the body in an unrelated finite lambda over `x` changes
        // nothing about the verdict: binders are renamed apart.
        let src = definition(&mut StdRng::seed_from_u64(seed), 2);
        let wrapped = src.replacen("fn x => fn y => ", "fn x => fn y => exists (fn x => f x) and ", 1);
        if src.contains("A ~> A ~> bool") {
            let plain = check_src(&src).map(|_| ());
            let shadowed = check_src(&wrapped).map(|_| ());
            prop_assert_eq!(plain, shadowed, "{}", wrapped);
        }
    }

    #[test]
    fn well_formed_signatures_round_trip(seed in any::<u64>()) {
        let src = definition(&mut StdRng::seed_from_u64(seed), 2);
        if let Ok(p) = check_src(&src) {
            let (ty, _) = p.def("d").unwrap();
            prop_assert_eq!(&parse_type(&ty.to_string()).unwrap(), ty);
            prop_assert!(matches!(ty, Type::Fin(..)));
        }
    }
}
