//! Elaborated trees produced by the checker: every node knows which typing
//! rule introduced it, and every pointed term carries its usage report.
//! The evaluator and the test oracles consume these.

use std::collections::BTreeSet;
use std::fmt;
use std::rc::Rc;

use crate::ast::{Prim, Type};

/// Which relevant variables a term uses and which finitely supported
/// variables it grounds, in grounding order. `None` is TOP: the term is
/// `nil`-like and fits any context.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UsageReport {
    pub delta: Option<BTreeSet<String>>,
    pub omega: Option<Vec<String>>,
}

impl UsageReport {
    pub fn top() -> Self {
        UsageReport { delta: None, omega: None }
    }

    pub fn empty() -> Self {
        UsageReport { delta: Some(BTreeSet::new()), omega: Some(Vec::new()) }
    }

    pub fn var(x: &str) -> Self {
        UsageReport { delta: Some(BTreeSet::from([x.to_string()])), omega: Some(Vec::new()) }
    }

    pub fn new(delta: &[&str], omega: &[&str]) -> Self {
        UsageReport {
            delta: Some(delta.iter().map(|s| s.to_string()).collect()),
            omega: Some(omega.iter().map(|s| s.to_string()).collect()),
        }
    }

    /// Key layout of the term's table. Empty for TOP, whose table is empty.
    pub fn layout(&self) -> &[String] {
        self.omega.as_deref().unwrap_or(&[])
    }

    pub fn uses(&self, x: &str) -> bool {
        self.delta.as_ref().is_none_or(|d| d.contains(x))
    }

    pub fn grounds(&self, x: &str) -> bool {
        self.omega.as_ref().is_none_or(|o| o.iter().any(|y| y == x))
    }

    /// Δ-free and Ω-free, as required of closed definitions and embedded
    /// expressions.
    pub fn is_closed(&self) -> bool {
        self.delta.as_ref().is_none_or(|d| d.is_empty())
            && self.omega.as_ref().is_none_or(|o| o.is_empty())
    }
}

impl fmt::Display for UsageReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.delta {
            None => f.write_str("used: TOP")?,
            Some(d) => {
                let v: Vec<&str> = d.iter().map(|s| s.as_str()).collect();
                write!(f, "used: {{{}}}", v.join(", "))?
            }
        }
        match &self.omega {
            None => f.write_str(", grounded: TOP"),
            Some(o) => write!(f, ", grounded: [{}]", o.join(", ")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Var(String),
    Unit,
    Atom(Rc<str>),
    Lam(String, Box<Expr>),
    App(Box<Expr>, Box<Expr>),
    Pair(Box<Expr>, Box<Expr>),
    Proj(u8, Box<Expr>),
    IfJust(Box<Expr>, String, Box<Expr>, Box<Expr>),
    /// Rule `ui`: a closed pointed term used as an expression.
    Term(Box<Term>),
    /// `(=)`, the only set-sorted primitive.
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub kind: TermKind,
    pub usage: UsageReport,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TermKind {
    Nil,
    Nat(u64),
    /// Rule `ue`: an expression of type `Forget(P)` used at `P`.
    Embed(Expr),
    Var(String),
    Prim(Prim),
    /// Rule `-o i`.
    LamLolli(String, Rc<Term>),
    /// Rule `~> i`; `key` is the zonked key type.
    LamFin { param: String, key: Type, body: Box<Term> },
    /// Rule `-o e`.
    AppLolli(Box<Term>, Box<Term>),
    /// Rule `~> e`: applying a finite map to an ungrounded variable.
    AppFin(Box<Term>, String),
    /// Rule `~> e2`: looking up an expression.
    AppFinExpr(Box<Term>, Expr),
    WithPair(Box<Term>, Box<Term>),
    WithProj(u8, Box<Term>),
    SmashPair(Box<Term>, Box<Term>),
    LetSmash(String, String, Box<Term>, Box<Term>),
    Just(Expr),
    LetJust(String, Box<Term>, Box<Term>),
}

impl TermKind {
    pub fn rule(&self) -> &'static str {
        match self {
            TermKind::Nil => "nil",
            TermKind::Nat(_) | TermKind::Embed(_) | TermKind::Prim(_) => "ue",
            TermKind::Var(_) => "var",
            TermKind::LamLolli(..) => "-o i",
            TermKind::LamFin { .. } => "~> i",
            TermKind::AppLolli(..) => "-o e",
            TermKind::AppFin(..) => "~> e",
            TermKind::AppFinExpr(..) => "~> e2",
            TermKind::WithPair(..) => "& i",
            TermKind::WithProj(..) => "& e",
            TermKind::SmashPair(..) => "@ i",
            TermKind::LetSmash(..) => "@ e",
            TermKind::Just(_) => "maybe i",
            TermKind::LetJust(..) => "maybe e",
        }
    }
}

impl Term {
    pub fn new(kind: TermKind, usage: UsageReport) -> Term {
        Term { kind, usage }
    }

    /// Visit this node and every pointed subterm, including those under
    /// embedded expressions.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Term)) {
        f(self);
        use TermKind::*;
        match &self.kind {
            Nil | Nat(_) | Var(_) | Prim(_) => {}
            Embed(e) | Just(e) => e.walk_terms(f),
            LamLolli(_, b) => b.walk(f),
            LamFin { body, .. } => body.walk(f),
            AppFin(t, _) | WithProj(_, t) => t.walk(f),
            AppFinExpr(t, e) => {
                t.walk(f);
                e.walk_terms(f);
            }
            AppLolli(a, b) | WithPair(a, b) | SmashPair(a, b) | LetSmash(_, _, a, b)
            | LetJust(_, a, b) => {
                a.walk(f);
                b.walk(f);
            }
        }
    }
}

impl Expr {
    pub fn walk_terms<'a>(&'a self, f: &mut dyn FnMut(&'a Term)) {
        match self {
            Expr::Var(_) | Expr::Unit | Expr::Atom(_) | Expr::Eq => {}
            Expr::Lam(_, b) | Expr::Proj(_, b) => b.walk_terms(f),
            Expr::App(a, b) | Expr::Pair(a, b) => {
                a.walk_terms(f);
                b.walk_terms(f);
            }
            Expr::IfJust(s, _, a, b) => {
                s.walk_terms(f);
                a.walk_terms(f);
                b.walk_terms(f);
            }
            Expr::Term(t) => t.walk(f),
        }
    }
}

/// A checked top-level definition.
#[derive(Clone, Debug, PartialEq)]
pub enum Body {
    Term(Term),
    Expr(Expr),
}
