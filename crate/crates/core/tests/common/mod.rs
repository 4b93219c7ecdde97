//! Test oracles.
//!
//! [`Oracle`] evaluates checked programs pointwise: finitely supported
//! variables are bound to concrete values, every finite lambda is tabulated
//! by enumerating the whole universe of its key type, and point preserving
//! closures are entered even on nil. It shares nothing with the relational
//! evaluator beyond the elaborated tree.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

use fslang::ast::{Prim, Type};
use fslang::elab::{Body, Expr, Term, TermKind};
use fslang::eval::nest;
use fslang::runtime::{DValue, PValue, Table};
use fslang::typecheck::{CheckedItem, CheckedProgram};
use rand::Rng;

pub mod gen;
pub mod harness;

#[derive(Clone, Debug)]
pub enum OP {
    Nil,
    Nat(u64),
    Just(Box<OD>),
    With(Box<OP>, Box<OP>),
    Smash(Box<OP>, Box<OP>),
    Fun(Rc<(String, Term, Env)>),
    Prim(Prim),
    /// Canonical key string to (key, non-nil value).
    Map(BTreeMap<String, (OD, OP)>),
}

#[derive(Clone, Debug)]
pub enum OD {
    Atom(String),
    Unit,
    Pair(Box<OD>, Box<OD>),
    Wrapped(OP),
    Fun(Rc<(String, Expr, Env)>),
    Eq,
}

/// Persistent environment: extending shares the tail.
#[derive(Clone, Debug, Default)]
pub struct Env {
    plain: Scope<OD>,
    pointed: Scope<OP>,
}

#[derive(Debug)]
struct Link<V> {
    name: String,
    value: V,
    next: Scope<V>,
}

#[derive(Debug)]
struct Scope<V>(Option<Rc<Link<V>>>);

impl<V> Default for Scope<V> {
    fn default() -> Self {
        Scope(None)
    }
}

impl<V> Clone for Scope<V> {
    fn clone(&self) -> Self {
        Scope(self.0.clone())
    }
}

impl<V> Scope<V> {
    fn extend(&self, name: &str, value: V) -> Scope<V> {
        Scope(Some(Rc::new(Link { name: name.to_string(), value, next: self.clone() })))
    }

    fn get(&self, name: &str) -> Option<&V> {
        let mut cur = self.0.as_deref();
        while let Some(link) = cur {
            if link.name == name {
                return Some(&link.value);
            }
            cur = link.next.0.as_deref();
        }
        None
    }
}

impl Env {
    fn plain(&self, x: &str, v: OD) -> Env {
        Env { plain: self.plain.extend(x, v), pointed: self.pointed.clone() }
    }

    fn pointed(&self, x: &str, v: OP) -> Env {
        Env { plain: self.plain.clone(), pointed: self.pointed.extend(x, v) }
    }

    pub fn get(&self, x: &str) -> Option<&OD> {
        self.plain.get(x)
    }
}

pub fn norm(p: OP) -> OP {
    match p {
        OP::Nat(0) => OP::Nil,
        OP::With(a, b) => {
            let (a, b) = (norm(*a), norm(*b));
            if is_nil(&a) && is_nil(&b) { OP::Nil } else { OP::With(Box::new(a), Box::new(b)) }
        }
        OP::Smash(a, b) => {
            let (a, b) = (norm(*a), norm(*b));
            if is_nil(&a) || is_nil(&b) { OP::Nil } else { OP::Smash(Box::new(a), Box::new(b)) }
        }
        OP::Map(m) if m.is_empty() => OP::Nil,
        other => other,
    }
}

pub fn is_nil(p: &OP) -> bool {
    match p {
        OP::Nil | OP::Nat(0) => true,
        OP::With(a, b) => is_nil(a) && is_nil(b),
        OP::Smash(a, b) => is_nil(a) || is_nil(b),
        OP::Map(m) => m.is_empty(),
        _ => false,
    }
}

/// Structural canonical form of a plain value, used as a map key.
pub fn canon(d: &OD) -> String {
    match d {
        OD::Atom(a) => format!("a:{a}"),
        OD::Unit => "()".into(),
        OD::Pair(a, b) => format!("({},{})", canon(a), canon(b)),
        OD::Wrapped(p) => format!("w[{}]", canon_p(&norm(p.clone()))),
        OD::Fun(_) | OD::Eq => panic!("function used as a key"),
    }
}

fn canon_p(p: &OP) -> String {
    match p {
        OP::Nil => "nil".into(),
        OP::Nat(n) => n.to_string(),
        OP::Just(d) => format!("just {}", canon(d)),
        OP::With(a, b) => format!("<{},{}>", canon_p(a), canon_p(b)),
        OP::Smash(a, b) => format!("({},{})", canon_p(a), canon_p(b)),
        OP::Map(m) => {
            let parts: Vec<String> = m.iter().map(|(k, (_, v))| format!("{k}=>{}", canon_p(v))).collect();
            format!("{{{}}}", parts.join(";"))
        }
        OP::Fun(_) | OP::Prim(_) => panic!("function used as a key"),
    }
}

fn singleton(k: OD, v: OP) -> OP {
    let mut m = BTreeMap::new();
    m.insert(canon(&k), (k, v));
    OP::Map(m)
}

fn lookup(f: &OP, k: &OD) -> OP {
    match f {
        OP::Map(m) => m.get(&canon(k)).map(|(_, v)| v.clone()).unwrap_or(OP::Nil),
        OP::Nil => OP::Nil,
        other => panic!("lookup in {other:?}"),
    }
}

fn nat(p: &OP) -> u64 {
    match p {
        OP::Nat(n) => *n,
        _ if is_nil(p) => 0,
        other => panic!("not a nat: {other:?}"),
    }
}

fn boolean(b: bool) -> OP {
    if b { OP::Just(Box::new(OD::Unit)) } else { OP::Nil }
}

/// Universes to enumerate, by key type.
#[derive(Clone, Debug, Default)]
pub struct Universe {
    pub atoms: HashMap<String, Vec<String>>,
    /// Explicit candidates for keys that are themselves pointed values.
    pub extra: HashMap<String, Vec<OD>>,
}

impl Universe {
    pub fn values(&self, ty: &Type) -> Vec<OD> {
        match ty {
            Type::Base(n) => self.atoms.get(n).unwrap_or_else(|| panic!("no universe for {n}")).iter().map(|a| OD::Atom(a.clone())).collect(),
            Type::Unit => vec![OD::Unit],
            Type::Prod(a, b) => {
                let bs = self.values(b);
                self.values(a)
                    .into_iter()
                    .flat_map(|x| bs.iter().map(move |y| OD::Pair(Box::new(x.clone()), Box::new(y.clone()))))
                    .collect()
            }
            other => self.extra.get(&other.to_string()).unwrap_or_else(|| panic!("no universe for {other}")).clone(),
        }
    }
}

pub struct Oracle<'u> {
    pub universe: &'u Universe,
}

impl Oracle<'_> {
    pub fn term(&self, t: &Term, env: &Env) -> OP {
        norm(self.term_raw(t, env))
    }

    fn term_raw(&self, t: &Term, env: &Env) -> OP {
        match &t.kind {
            TermKind::Nil => OP::Nil,
            TermKind::Nat(n) => OP::Nat(*n),
            TermKind::Embed(e) => match self.expr(e, env) {
                OD::Wrapped(p) => p,
                other => panic!("embedded {other:?}"),
            },
            TermKind::Var(x) => env.pointed.get(x).cloned().unwrap_or_else(|| panic!("unbound {x}")),
            TermKind::Prim(p) => OP::Prim(*p),
            TermKind::LamLolli(x, b) => OP::Fun(Rc::new((x.clone(), (**b).clone(), env.clone()))),
            TermKind::LamFin { param, key, body } => {
                let mut m = BTreeMap::new();
                for k in self.universe.values(key) {
                    let v = self.term(body, &env.plain(param, k.clone()));
                    if !is_nil(&v) {
                        m.insert(canon(&k), (k, v));
                    }
                }
                OP::Map(m)
            }
            TermKind::AppLolli(f, a) => self.apply(&self.term(f, env), self.term(a, env)),
            TermKind::AppFin(f, x) => lookup(&self.term(f, env), env.plain.get(x).unwrap_or_else(|| panic!("unbound {x}"))),
            TermKind::AppFinExpr(f, e) => lookup(&self.term(f, env), &self.expr(e, env)),
            TermKind::WithPair(a, b) => OP::With(Box::new(self.term(a, env)), Box::new(self.term(b, env))),
            TermKind::WithProj(i, a) => match self.term(a, env) {
                OP::With(p, q) => if *i == 1 { *p } else { *q },
                OP::Nil => OP::Nil,
                other => panic!("projection of {other:?}"),
            },
            TermKind::SmashPair(a, b) => OP::Smash(Box::new(self.term(a, env)), Box::new(self.term(b, env))),
            TermKind::LetSmash(x, y, s, u) => match self.term(s, env) {
                OP::Smash(p, q) => self.term(u, &env.pointed(x, *p).pointed(y, *q)),
                OP::Nil => OP::Nil,
                other => panic!("let-pair on {other:?}"),
            },
            TermKind::Just(e) => OP::Just(Box::new(self.expr(e, env))),
            TermKind::LetJust(x, s, u) => match self.term(s, env) {
                OP::Just(d) => self.term(u, &env.plain(x, *d)),
                OP::Nil => OP::Nil,
                other => panic!("let-just on {other:?}"),
            },
        }
    }

    /// Application without any shortcut for nil arguments.
    pub fn apply(&self, f: &OP, a: OP) -> OP {
        let parts = |a: &OP| match a {
            OP::With(p, q) | OP::Smash(p, q) => ((**p).clone(), (**q).clone()),
            _ => (OP::Nil, OP::Nil),
        };
        norm(match f {
            OP::Fun(c) => self.term(&c.1, &c.2.pointed(&c.0, a)),
            OP::Prim(Prim::Or) => {
                let (p, q) = parts(&a);
                boolean(!is_nil(&p) || !is_nil(&q))
            }
            OP::Prim(Prim::Plus) => {
                let (p, q) = parts(&a);
                OP::Nat(nat(&p) + nat(&q))
            }
            OP::Prim(Prim::Times) => {
                let (p, q) = parts(&a);
                OP::Nat(nat(&p) * nat(&q))
            }
            OP::Prim(Prim::Exists) => match &a {
                OP::Map(m) => boolean(m.values().any(|(_, v)| !is_nil(v))),
                _ => OP::Nil,
            },
            OP::Prim(Prim::Sum) => match &a {
                OP::Map(m) => OP::Nat(m.values().map(|(_, v)| nat(v)).sum()),
                _ => OP::Nil,
            },
            OP::Nil => OP::Nil,
            other => panic!("apply {other:?}"),
        })
    }

    pub fn expr(&self, e: &Expr, env: &Env) -> OD {
        match e {
            Expr::Var(x) => env.plain.get(x).cloned().unwrap_or_else(|| panic!("unbound {x}")),
            Expr::Unit => OD::Unit,
            Expr::Atom(a) => OD::Atom(a.to_string()),
            Expr::Eq => OD::Eq,
            Expr::Lam(x, b) => OD::Fun(Rc::new((x.clone(), (**b).clone(), env.clone()))),
            Expr::App(f, a) => {
                let a = self.expr(a, env);
                match self.expr(f, env) {
                    OD::Fun(c) => self.expr(&c.1, &c.2.plain(&c.0, a)),
                    OD::Eq => OD::Wrapped(singleton(a, boolean(true))),
                    other => panic!("apply {other:?}"),
                }
            }
            Expr::Pair(a, b) => OD::Pair(Box::new(self.expr(a, env)), Box::new(self.expr(b, env))),
            Expr::Proj(i, a) => match self.expr(a, env) {
                OD::Pair(x, y) => if *i == 1 { *x } else { *y },
                other => panic!("projection of {other:?}"),
            },
            Expr::IfJust(s, x, a, b) => match self.expr(s, env) {
                OD::Wrapped(OP::Just(d)) => self.expr(a, &env.plain(x, *d)),
                OD::Wrapped(_) => self.expr(b, env),
                other => panic!("case on {other:?}"),
            },
            Expr::Term(t) => OD::Wrapped(self.term(t, env)),
        }
    }

    /// Values of every declaration, in order.
    pub fn run(&self, prog: &CheckedProgram, facts: &HashMap<String, Table>) -> (Env, Vec<(String, Type, OD)>) {
        let mut env = Env::default();
        let mut out = Vec::new();
        for item in &prog.items {
            let (name, ty, v) = match item {
                CheckedItem::Type { .. } => continue,
                CheckedItem::Facts { name, ty, .. } => {
                    (name, ty, OD::Wrapped(from_pointed(&PValue::table(nest(&facts[name])))))
                }
                CheckedItem::Def { name, ty, body } => match &**body {
                    Body::Term(t) => (name, ty, OD::Wrapped(self.term(t, &env))),
                    Body::Expr(e) => (name, ty, self.expr(e, &env)),
                },
            };
            env = env.plain(name, v.clone());
            out.push((name.clone(), ty.clone(), v));
        }
        (env, out)
    }
}

pub fn from_plain(d: &DValue) -> OD {
    match d {
        DValue::Atom(a) => OD::Atom(a.to_string()),
        DValue::Unit => OD::Unit,
        DValue::Prod(a, b) => OD::Pair(Box::new(from_plain(a)), Box::new(from_plain(b))),
        DValue::Wrapped(p) => OD::Wrapped(from_pointed(p)),
        other => panic!("cannot convert {other}"),
    }
}

pub fn from_pointed(p: &PValue) -> OP {
    norm(match p {
        PValue::Nil => OP::Nil,
        PValue::Nat(n) => OP::Nat(*n),
        PValue::Just(d) => OP::Just(Box::new(from_plain(d))),
        PValue::With(a, b) => OP::With(Box::new(from_pointed(a)), Box::new(from_pointed(b))),
        PValue::Smash(a, b) => OP::Smash(Box::new(from_pointed(a)), Box::new(from_pointed(b))),
        PValue::Table(t) => {
            assert_eq!(t.arity(), 1, "nest tables before converting");
            let mut m = BTreeMap::new();
            for (k, v) in t.iter() {
                let k = from_plain(&k[0]);
                m.insert(canon(&k), (k, from_pointed(v)));
            }
            OP::Map(m)
        }
        other => panic!("cannot convert {other}"),
    })
}

pub fn to_plain(d: &OD) -> DValue {
    match d {
        OD::Atom(a) => DValue::atom(a),
        OD::Unit => DValue::Unit,
        OD::Pair(a, b) => DValue::pair(to_plain(a), to_plain(b)),
        OD::Wrapped(p) => DValue::Wrapped(to_pointed(p)),
        other => panic!("cannot convert {other:?}"),
    }
}

pub fn to_pointed(p: &OP) -> PValue {
    match norm(p.clone()) {
        OP::Nil => PValue::Nil,
        OP::Nat(n) => PValue::nat(n),
        OP::Just(d) => PValue::Just(Box::new(to_plain(&d))),
        OP::With(a, b) => PValue::with(to_pointed(&a), to_pointed(&b)),
        OP::Smash(a, b) => fslang::runtime::smash(to_pointed(&a), to_pointed(&b)),
        OP::Map(m) => {
            let mut t = Table::new(1);
            for (k, v) in m.values() {
                t.insert(vec![to_plain(k)], to_pointed(v)).unwrap();
            }
            PValue::table(t)
        }
        other => panic!("cannot convert {other:?}"),
    }
}

/// `n`-symbol universe for a base type: `person0`, `person1`, ...
pub fn symbols(ty: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{}{i}", ty.to_lowercase())).collect()
}

/// A random flat table over the given key columns with at most
/// `max_rows` rows; `value` draws each value.
pub fn random_table(
    rng: &mut impl Rng,
    columns: &[Vec<DValue>],
    max_rows: usize,
    mut value: impl FnMut(&mut dyn rand::RngCore) -> PValue,
) -> Table {
    let rows = rng.gen_range(0..=max_rows);
    let mut t = Table::new(columns.len());
    for _ in 0..rows {
        let key: Vec<DValue> = columns.iter().map(|c| c[rng.gen_range(0..c.len())].clone()).collect();
        t.insert(key, value(rng)).unwrap();
    }
    t
}

pub fn atoms(names: &[String]) -> Vec<DValue> {
    names.iter().map(|n| DValue::atom(n)).collect()
}

pub fn always_true(_: &mut dyn rand::RngCore) -> PValue {
    PValue::bool(true)
}

pub fn small_nat(rng: &mut dyn rand::RngCore) -> PValue {
    PValue::nat(rng.gen_range(0..=9))
}

/// Every table reachable from `v` stores only non-nil values.
pub fn no_stored_nil(v: &PValue) -> bool {
    match v {
        PValue::Table(t) => t.values().all(|x| !x.is_nil() && no_stored_nil(x)),
        PValue::With(a, b) | PValue::Smash(a, b) => no_stored_nil(a) && no_stored_nil(b),
        PValue::Just(d) => match &**d {
            DValue::Wrapped(p) => no_stored_nil(p),
            _ => true,
        },
        _ => true,
    }
}
