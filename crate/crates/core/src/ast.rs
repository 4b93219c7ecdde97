//! Abstract syntax: the two-sorted type grammar, the surface term tree,
//! typing contexts and top-level programs.
//!
//! Types come in two sorts. Set types (`Base`, `Unit`, `Prod`, `Arrow`,
//! `Forget`) denote ordinary sets; pointed types (`With`, `Smash`, `Lolli`,
//! `Fin`, `Maybe`, `Nat0`) denote sets with a distinguished `nil`.
//!
//! Surface terms are sort-neutral: `(t, u)` may be a smash pair or a set
//! product, `fn x => t` may introduce `->`, `-o` or `~>`, and `pi1` projects
//! either a `&` pair or a `*` pair. The checker assigns sorts while
//! elaborating into [`crate::elab`].

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// A 1-based source region.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Span {
    pub start_line: u32,
    pub start_col: u32,
    pub end_line: u32,
    pub end_col: u32,
}

impl Span {
    pub fn new(start_line: u32, start_col: u32, end_line: u32, end_col: u32) -> Self {
        Span { start_line, start_col, end_line, end_col }
    }

    pub fn to(self, other: Span) -> Span {
        Span {
            start_line: self.start_line,
            start_col: self.start_col,
            end_line: other.end_line,
            end_col: other.end_col,
        }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}-{}:{}", self.start_line, self.start_col, self.end_line, self.end_col)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Type {
    // set types
    Base(String),
    Unit,
    Prod(Box<Type>, Box<Type>),
    Arrow(Box<Type>, Box<Type>),
    /// A pointed type viewed as a plain set.
    Forget(Box<Type>),
    // pointed types
    With(Box<Type>, Box<Type>),
    Smash(Box<Type>, Box<Type>),
    Lolli(Box<Type>, Box<Type>),
    Fin(Box<Type>, Box<Type>),
    Maybe(Box<Type>),
    Nat0,
    /// Inference variable. Only the checker creates these; they never survive
    /// into checked signatures.
    Meta(u32),
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum WellFormedError {
    #[error("sort error: expected a {expected} type, found `{found}`")]
    SortError { expected: Sort, found: Type },
    #[error("finite map key type `{0}` is not an eqtype")]
    KeyNotEqType(Type),
    #[error("unresolved inference variable ?{0}")]
    Unresolved(u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sort {
    Set,
    Pointed,
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sort::Set => "set",
            Sort::Pointed => "pointed",
        })
    }
}

impl Type {
    pub fn bool() -> Type {
        Type::Maybe(Box::new(Type::Unit))
    }

    pub fn base(name: &str) -> Type {
        Type::Base(name.to_string())
    }

    pub fn prod(a: Type, b: Type) -> Type {
        Type::Prod(Box::new(a), Box::new(b))
    }

    pub fn arrow(a: Type, b: Type) -> Type {
        Type::Arrow(Box::new(a), Box::new(b))
    }

    pub fn forget(p: Type) -> Type {
        Type::Forget(Box::new(p))
    }

    pub fn with(p: Type, q: Type) -> Type {
        Type::With(Box::new(p), Box::new(q))
    }

    pub fn smash(p: Type, q: Type) -> Type {
        Type::Smash(Box::new(p), Box::new(q))
    }

    pub fn lolli(p: Type, q: Type) -> Type {
        Type::Lolli(Box::new(p), Box::new(q))
    }

    pub fn fin(a: Type, p: Type) -> Type {
        Type::Fin(Box::new(a), Box::new(p))
    }

    pub fn maybe(a: Type) -> Type {
        Type::Maybe(Box::new(a))
    }

    /// Sort of a type, `None` for an inference variable.
    pub fn sort(&self) -> Option<Sort> {
        match self {
            Type::Base(_) | Type::Unit | Type::Prod(..) | Type::Arrow(..) | Type::Forget(_) => {
                Some(Sort::Set)
            }
            Type::With(..)
            | Type::Smash(..)
            | Type::Lolli(..)
            | Type::Fin(..)
            | Type::Maybe(_)
            | Type::Nat0 => Some(Sort::Pointed),
            Type::Meta(_) => None,
        }
    }

    pub fn is_pointed(&self) -> bool {
        self.sort() == Some(Sort::Pointed)
    }

    /// Embed a type in set position, wrapping pointed types in `Forget`.
    pub fn into_set(self) -> Type {
        if self.is_pointed() {
            Type::Forget(Box::new(self))
        } else {
            self
        }
    }

    /// First-order: contains no `-o` or `->` anywhere.
    pub fn is_first_order(&self) -> bool {
        match self {
            Type::Base(_) | Type::Unit | Type::Nat0 => true,
            Type::Arrow(..) | Type::Lolli(..) | Type::Meta(_) => false,
            Type::Prod(a, b) | Type::With(a, b) | Type::Smash(a, b) | Type::Fin(a, b) => {
                a.is_first_order() && b.is_first_order()
            }
            Type::Forget(a) | Type::Maybe(a) => a.is_first_order(),
        }
    }

    /// Types whose values admit equality and a canonical key encoding.
    pub fn is_eqtype(&self) -> bool {
        match self {
            Type::Base(_) | Type::Unit => true,
            Type::Prod(a, b) => a.is_eqtype() && b.is_eqtype(),
            Type::Forget(p) => p.is_first_order(),
            _ => false,
        }
    }

    pub fn metas(&self, out: &mut Vec<u32>) {
        match self {
            Type::Meta(m) => out.push(*m),
            Type::Base(_) | Type::Unit | Type::Nat0 => {}
            Type::Forget(a) | Type::Maybe(a) => a.metas(out),
            Type::Prod(a, b)
            | Type::Arrow(a, b)
            | Type::With(a, b)
            | Type::Smash(a, b)
            | Type::Lolli(a, b)
            | Type::Fin(a, b) => {
                a.metas(out);
                b.metas(out);
            }
        }
    }

    pub fn well_formed(&self) -> Result<(), WellFormedError> {
        fn want(ty: &Type, sort: Sort) -> Result<(), WellFormedError> {
            match ty.sort() {
                Some(s) if s != sort => {
                    Err(WellFormedError::SortError { expected: sort, found: ty.clone() })
                }
                _ => ty.well_formed(),
            }
        }
        match self {
            Type::Base(_) | Type::Unit | Type::Nat0 => Ok(()),
            Type::Meta(m) => Err(WellFormedError::Unresolved(*m)),
            Type::Prod(a, b) | Type::Arrow(a, b) => {
                want(a, Sort::Set)?;
                want(b, Sort::Set)
            }
            Type::Forget(p) => want(p, Sort::Pointed),
            Type::With(p, q) | Type::Smash(p, q) | Type::Lolli(p, q) => {
                want(p, Sort::Pointed)?;
                want(q, Sort::Pointed)
            }
            Type::Fin(a, p) => {
                want(a, Sort::Set)?;
                want(p, Sort::Pointed)?;
                if a.is_eqtype() {
                    Ok(())
                } else {
                    Err(WellFormedError::KeyNotEqType((**a).clone()))
                }
            }
            Type::Maybe(a) => want(a, Sort::Set),
        }
    }

    /// Split a chain of finite maps `A1 ~> ... ~> An ~> P` into its keys
    /// and the final non-map value type.
    pub fn fin_chain(&self) -> (Vec<&Type>, &Type) {
        let mut keys = Vec::new();
        let mut cur = self;
        while let Type::Fin(a, p) = cur {
            keys.push(&**a);
            cur = p;
        }
        (keys, cur)
    }
}

fn fmt_type(ty: &Type, prec: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    // 0: arrows, 1: products, 2: prefix, 3: atoms
    let (my, s): (u8, String) = match ty {
        Type::Base(n) => (3, n.clone()),
        Type::Unit => (3, "1".into()),
        Type::Nat0 => (3, "nat".into()),
        Type::Meta(m) => (3, format!("?{m}")),
        Type::Maybe(a) if **a == Type::Unit => (3, "bool".into()),
        Type::Forget(p) => return fmt_type(p, prec, f),
        Type::Maybe(a) => (2, format!("maybe {}", Paren(a, 3))),
        Type::Prod(a, b) => (1, format!("{} * {}", Paren(a, 2), Paren(b, 1))),
        Type::With(a, b) => (1, format!("{} & {}", Paren(a, 2), Paren(b, 1))),
        Type::Smash(a, b) => (1, format!("{} @ {}", Paren(a, 2), Paren(b, 1))),
        Type::Arrow(a, b) => (0, format!("{} -> {}", Paren(a, 1), Paren(b, 0))),
        Type::Lolli(a, b) => (0, format!("{} -o {}", Paren(a, 1), Paren(b, 0))),
        Type::Fin(a, b) => (0, format!("{} ~> {}", Paren(a, 1), Paren(b, 0))),
    };
    if my < prec {
        write!(f, "({s})")
    } else {
        f.write_str(&s)
    }
}

struct Paren<'a>(&'a Type, u8);

impl fmt::Display for Paren<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_type(self.0, self.1, f)
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_type(self, 0, f)
    }
}

/// Builtin primitives. `And` does not appear: `and` is sugar.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Prim {
    Or,
    Plus,
    Times,
    Exists,
    Sum,
    Eq,
}

impl Prim {
    pub fn name(self) -> &'static str {
        match self {
            Prim::Or => "or",
            Prim::Plus => "+",
            Prim::Times => "*",
            Prim::Exists => "exists",
            Prim::Sum => "sum",
            Prim::Eq => "=",
        }
    }

    /// Primitives reachable by an ordinary identifier.
    pub fn from_ident(name: &str) -> Option<Prim> {
        match name {
            "exists" => Some(Prim::Exists),
            "sum" => Some(Prim::Sum),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub kind: TermKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TermKind {
    Nil,
    Var(String),
    Unit,
    Nat(u64),
    Lam(String, Box<Term>),
    App(Box<Term>, Box<Term>),
    /// `(t, u)`: smash pair or set product, decided by sort.
    Pair(Box<Term>, Box<Term>),
    /// `<t, u>`
    WithPair(Box<Term>, Box<Term>),
    /// `pi1` / `pi2`, index 1 or 2.
    Proj(u8, Box<Term>),
    LetPair(String, String, Box<Term>, Box<Term>),
    Just(Box<Term>),
    LetJust(String, Box<Term>, Box<Term>),
    IfJust(Box<Term>, String, Box<Term>, Box<Term>),
    Prim(Prim),
}

impl Term {
    pub fn new(kind: TermKind, span: Span) -> Term {
        Term { kind, span }
    }

    /// Build a term with a dummy span; used for desugaring and tests.
    pub fn synth(kind: TermKind) -> Term {
        Term { kind, span: Span::default() }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        use TermKind::*;
        match &self.kind {
            Nil | Unit | Nat(_) | Prim(_) => {}
            Var(x) => {
                if !bound.contains(x) {
                    out.insert(x.clone());
                }
            }
            Lam(x, body) => {
                bound.push(x.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
            App(a, b) | Pair(a, b) | WithPair(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Proj(_, t) | Just(t) => t.collect_free(bound, out),
            LetPair(x, y, t, u) => {
                t.collect_free(bound, out);
                bound.push(x.clone());
                bound.push(y.clone());
                u.collect_free(bound, out);
                bound.truncate(bound.len() - 2);
            }
            LetJust(x, t, u) => {
                t.collect_free(bound, out);
                bound.push(x.clone());
                u.collect_free(bound, out);
                bound.pop();
            }
            IfJust(s, x, a, b) => {
                s.collect_free(bound, out);
                bound.push(x.clone());
                a.collect_free(bound, out);
                bound.pop();
                b.collect_free(bound, out);
            }
        }
    }

    /// True when no surface-only sugar survives. Sugar is expanded by the
    /// parser, so this only fails for hand-built trees using reserved names.
    pub fn is_core(&self) -> bool {
        use TermKind::*;
        match &self.kind {
            Var(x) => !matches!(x.as_str(), "true" | "false" | "and" | "when"),
            Nil | Unit | Nat(_) | Prim(_) => true,
            Lam(_, t) | Proj(_, t) | Just(t) => t.is_core(),
            App(a, b) | Pair(a, b) | WithPair(a, b) | LetPair(_, _, a, b) | LetJust(_, a, b) => {
                a.is_core() && b.is_core()
            }
            IfJust(s, _, a, b) => s.is_core() && a.is_core() && b.is_core(),
        }
    }
}

/// Typing context with its three zones.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Context {
    pub gamma: Vec<(String, Type)>,
    pub delta: Vec<(String, Type)>,
    pub omega: Vec<(String, Type)>,
}

impl Context {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_gamma(mut self, name: &str, ty: Type) -> Self {
        self.gamma.push((name.to_string(), ty));
        self
    }

    pub fn with_delta(mut self, name: &str, ty: Type) -> Self {
        self.delta.push((name.to_string(), ty));
        self
    }

    pub fn with_omega(mut self, name: &str, ty: Type) -> Self {
        self.omega.push((name.to_string(), ty));
        self
    }

    /// Name of the first variable declared twice, if any.
    pub fn duplicate(&self) -> Option<&str> {
        let mut seen = BTreeSet::new();
        self.gamma
            .iter()
            .chain(&self.delta)
            .chain(&self.omega)
            .map(|(n, _)| n.as_str())
            .find(|n| !seen.insert(*n))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Decl {
    /// `type person;` or `type person = john, mary;`
    Type { name: String, atoms: Vec<String>, span: Span },
    /// `facts follows : person ~> person ~> bool from "follows.csv";`
    Facts { name: String, ty: Type, source: String, span: Span },
    /// `def name : type = term;`
    Def { name: String, ty: Type, body: Term, span: Span },
}

impl Decl {
    pub fn name(&self) -> &str {
        match self {
            Decl::Type { name, .. } | Decl::Facts { name, .. } | Decl::Def { name, .. } => name,
        }
    }

    pub fn span(&self) -> Span {
        match self {
            Decl::Type { span, .. } | Decl::Facts { span, .. } | Decl::Def { span, .. } => *span,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Program {
    pub decls: Vec<Decl>,
}

impl Program {
    pub fn defs(&self) -> impl Iterator<Item = (&str, &Type, &Term)> {
        self.decls.iter().filter_map(|d| match d {
            Decl::Def { name, ty, body, .. } => Some((name.as_str(), ty, body)),
            _ => None,
        })
    }
}
