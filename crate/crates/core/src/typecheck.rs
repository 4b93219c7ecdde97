//! The checker for `Γ ⊢ e : A` and `Γ; Δ; Ω ⊢ t : P`.
//!
//! Checking is rooted at the annotated type of each definition and runs
//! bidirectionally. Instead of guessing how `Δ` and `Ω` split between
//! subterms, every pointed term reports what it used and what it grounded
//! ([`UsageReport`]); binders then check their own variable against that
//! report. Subterms are visited left to right, and variables grounded by a
//! left subterm are available as ordinary variables to everything on its
//! right.
//!
//! Binder names are made unique per definition, so elaborated trees never
//! shadow.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::rc::Rc;

use serde::Serialize;
use thiserror::Error;

use crate::ast::{Decl, Prim, Program, Span, Term, TermKind, Type, WellFormedError};
use crate::elab::{self, Body, UsageReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum ErrorKind {
    SortError,
    TypeMismatch,
    RelevanceError,
    GroundingError,
    CircularGrounding,
    UnknownVar,
    NotEqType,
    Redefinition,
}

impl ErrorKind {
    pub fn from_name(s: &str) -> Option<ErrorKind> {
        use ErrorKind::*;
        [
            SortError,
            TypeMismatch,
            RelevanceError,
            GroundingError,
            CircularGrounding,
            UnknownVar,
            NotEqType,
            Redefinition,
        ]
        .into_iter()
        .find(|k| k.to_string() == s)
    }
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
#[error("{span}: {kind} (rule {rule}): {detail}")]
pub struct TypeError {
    pub kind: ErrorKind,
    pub span: Span,
    /// The typing rule whose premise failed.
    pub rule: &'static str,
    pub detail: String,
    /// Usage of the subterm at the failure point, when one was computed.
    pub usage: Option<UsageReport>,
}

type R<T> = Result<T, TypeError>;

fn err<T>(kind: ErrorKind, span: Span, rule: &'static str, detail: impl Into<String>) -> R<T> {
    Err(TypeError { kind, span, rule, detail: detail.into(), usage: None })
}

fn with_usage(mut e: TypeError, u: &UsageReport) -> TypeError {
    e.usage.get_or_insert_with(|| u.clone());
    e
}

/// Names visible to every definition: declared base types and their
/// atoms, fact tables, earlier definitions.
#[derive(Clone, Debug, Default)]
pub struct Globals {
    pub types: BTreeSet<String>,
    pub atoms: BTreeMap<String, String>,
    pub vars: BTreeMap<String, Type>,
}

impl Globals {
    pub fn declare_type(&mut self, name: &str, atoms: &[String], span: Span) -> R<()> {
        if !self.types.insert(name.to_string()) {
            return err(ErrorKind::Redefinition, span, "decl", format!("type `{name}` declared twice"));
        }
        for a in atoms {
            self.declare_atom(a, name, span)?;
        }
        Ok(())
    }

    pub fn declare_atom(&mut self, atom: &str, ty: &str, span: Span) -> R<()> {
        if self.vars.contains_key(atom) {
            return err(ErrorKind::Redefinition, span, "decl", format!("atom `{atom}` clashes with a definition"));
        }
        match self.atoms.get(atom) {
            Some(t) if t != ty => err(
                ErrorKind::Redefinition,
                span,
                "decl",
                format!("atom `{atom}` already belongs to type `{t}`"),
            ),
            _ => {
                self.atoms.insert(atom.to_string(), ty.to_string());
                Ok(())
            }
        }
    }

    pub fn declare_var(&mut self, name: &str, ty: Type, span: Span) -> R<()> {
        if self.vars.contains_key(name) || self.atoms.contains_key(name) {
            return err(ErrorKind::Redefinition, span, "decl", format!("`{name}` is already defined"));
        }
        self.vars.insert(name.to_string(), ty.into_set());
        Ok(())
    }

    /// Well-formedness plus: every base type has been declared.
    pub fn check_signature(&self, ty: &Type, span: Span) -> R<()> {
        ty.well_formed().or_else(|e| match e {
            WellFormedError::SortError { .. } => err(ErrorKind::SortError, span, "wf", e.to_string()),
            WellFormedError::KeyNotEqType(_) => err(ErrorKind::NotEqType, span, "wf", e.to_string()),
            WellFormedError::Unresolved(_) => err(ErrorKind::TypeMismatch, span, "wf", e.to_string()),
        })?;
        fn bases<'a>(ty: &'a Type, out: &mut Vec<&'a str>) {
            match ty {
                Type::Base(n) => out.push(n),
                Type::Unit | Type::Nat0 | Type::Meta(_) => {}
                Type::Forget(a) | Type::Maybe(a) => bases(a, out),
                Type::Prod(a, b)
                | Type::Arrow(a, b)
                | Type::With(a, b)
                | Type::Smash(a, b)
                | Type::Lolli(a, b)
                | Type::Fin(a, b) => {
                    bases(a, out);
                    bases(b, out);
                }
            }
        }
        let mut names = Vec::new();
        bases(ty, &mut names);
        match names.into_iter().find(|n| !self.types.contains(*n)) {
            Some(n) => err(ErrorKind::UnknownVar, span, "wf", format!("unknown type `{n}`")),
            None => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Zone {
    Gamma,
    Delta,
    Omega,
}

#[derive(Clone, Debug)]
struct Entry {
    src: String,
    name: String,
    zone: Zone,
    ty: Type,
}

enum Lookup {
    Local { name: String, zone: Zone, ty: Type, hidden: bool },
    Global(Type),
    Atom(String),
    Prim(Prim),
}

/// Result of synthesizing a surface term in a pointed-term position: the
/// term may turn out to be an ordinary expression.
enum Synth {
    Term(elab::Term, Type),
    Expr(elab::Expr, Type),
}

fn prim_type(p: Prim, key: Type) -> Type {
    use Type as T;
    match p {
        Prim::Or => T::lolli(T::with(T::bool(), T::bool()), T::bool()),
        Prim::Plus => T::lolli(T::with(T::Nat0, T::Nat0), T::Nat0),
        Prim::Times => T::lolli(T::smash(T::Nat0, T::Nat0), T::Nat0),
        Prim::Exists => T::lolli(T::fin(key, T::bool()), T::bool()),
        Prim::Sum => T::lolli(T::fin(key, T::Nat0), T::Nat0),
        Prim::Eq => T::arrow(key.clone(), T::forget(T::fin(key, T::bool()))),
    }
}

/// Combine the reports of a left and right subterm (rules `-o e`, `@ i`,
/// `@ e`, `maybe e`): relevant usage is unioned, groundings concatenate.
pub fn concat_usage(a: &UsageReport, b: &UsageReport, span: Span, rule: &'static str) -> R<UsageReport> {
    let delta = match (&a.delta, &b.delta) {
        (Some(x), Some(y)) => Some(x.union(y).cloned().collect()),
        _ => None,
    };
    let omega = match (&a.omega, &b.omega) {
        (Some(x), Some(y)) => {
            if let Some(dup) = y.iter().find(|v| x.contains(v)) {
                return Err(TypeError {
                    kind: ErrorKind::CircularGrounding,
                    span,
                    rule,
                    detail: format!("`{dup}` is grounded twice; groundings must be disjoint"),
                    usage: Some(a.clone()),
                });
            }
            Some(x.iter().chain(y).cloned().collect())
        }
        _ => None,
    };
    Ok(UsageReport { delta, omega })
}

/// Both components of a `&` pair are checked in the same context, so their
/// reports must agree; TOP agrees with anything.
pub fn unify_usage(a: &UsageReport, b: &UsageReport, span: Span) -> R<UsageReport> {
    let delta = match (&a.delta, &b.delta) {
        (None, d) | (d, None) => d.clone(),
        (Some(x), Some(y)) => {
            if let Some(v) = x.symmetric_difference(y).next() {
                return Err(TypeError {
                    kind: ErrorKind::RelevanceError,
                    span,
                    rule: "& i",
                    detail: format!(
                        "`{v}` is used by only one component of a direct pair; both components must use the same relevant variables"
                    ),
                    usage: Some(a.clone()),
                });
            }
            Some(x.clone())
        }
    };
    let omega = match (&a.omega, &b.omega) {
        (None, o) | (o, None) => o.clone(),
        (Some(x), Some(y)) => {
            let (xs, ys): (BTreeSet<_>, BTreeSet<_>) = (x.iter().collect(), y.iter().collect());
            if let Some(v) = xs.symmetric_difference(&ys).next() {
                return Err(TypeError {
                    kind: ErrorKind::GroundingError,
                    span,
                    rule: "& i",
                    detail: format!("`{v}` is grounded by only one component of a direct pair"),
                    usage: Some(a.clone()),
                });
            }
            Some(x.clone())
        }
    };
    Ok(UsageReport { delta, omega })
}

struct Checker<'g> {
    globals: &'g Globals,
    scope: Vec<Entry>,
    /// Relevant and finitely supported entries below this index are out of
    /// reach (inside an embedded expression).
    barrier: usize,
    metas: Vec<Option<Type>>,
    used_names: HashSet<String>,
    eq_keys: Vec<(Type, Span)>,
}

impl<'g> Checker<'g> {
    fn new(globals: &'g Globals) -> Self {
        Checker {
            globals,
            scope: Vec::new(),
            barrier: 0,
            metas: Vec::new(),
            used_names: HashSet::new(),
            eq_keys: Vec::new(),
        }
    }

    fn fresh_meta(&mut self) -> Type {
        self.metas.push(None);
        Type::Meta(self.metas.len() as u32 - 1)
    }

    fn resolve(&self, ty: &Type) -> Type {
        let mut cur = ty.clone();
        while let Type::Meta(m) = cur {
            match &self.metas[m as usize] {
                Some(t) => cur = t.clone(),
                None => break,
            }
        }
        cur
    }

    fn zonk(&self, ty: &Type) -> Type {
        let b = |t: &Type| Box::new(self.zonk(t));
        match self.resolve(ty) {
            Type::Prod(a, c) => Type::Prod(b(&a), b(&c)),
            Type::Arrow(a, c) => Type::Arrow(b(&a), b(&c)),
            Type::Forget(a) => Type::Forget(b(&a)),
            Type::With(a, c) => Type::With(b(&a), b(&c)),
            Type::Smash(a, c) => Type::Smash(b(&a), b(&c)),
            Type::Lolli(a, c) => Type::Lolli(b(&a), b(&c)),
            Type::Fin(a, c) => Type::Fin(b(&a), b(&c)),
            Type::Maybe(a) => Type::Maybe(b(&a)),
            other => other,
        }
    }

    fn occurs(&self, m: u32, ty: &Type) -> bool {
        let mut ms = Vec::new();
        self.zonk(ty).metas(&mut ms);
        ms.contains(&m)
    }

    fn unify(&mut self, a: &Type, b: &Type) -> Result<(), ()> {
        let (a, b) = (self.resolve(a), self.resolve(b));
        match (&a, &b) {
            (Type::Meta(x), Type::Meta(y)) if x == y => Ok(()),
            (Type::Meta(m), t) | (t, Type::Meta(m)) => {
                if self.occurs(*m, t) {
                    return Err(());
                }
                self.metas[*m as usize] = Some(t.clone());
                Ok(())
            }
            (Type::Base(x), Type::Base(y)) if x == y => Ok(()),
            (Type::Unit, Type::Unit) | (Type::Nat0, Type::Nat0) => Ok(()),
            (Type::Forget(x), Type::Forget(y)) | (Type::Maybe(x), Type::Maybe(y)) => self.unify(x, y),
            (Type::Prod(a1, a2), Type::Prod(b1, b2))
            | (Type::Arrow(a1, a2), Type::Arrow(b1, b2))
            | (Type::With(a1, a2), Type::With(b1, b2))
            | (Type::Smash(a1, a2), Type::Smash(b1, b2))
            | (Type::Lolli(a1, a2), Type::Lolli(b1, b2))
            | (Type::Fin(a1, a2), Type::Fin(b1, b2)) => {
                self.unify(a1, b1)?;
                self.unify(a2, b2)
            }
            _ => Err(()),
        }
    }

    fn expect(&mut self, found: &Type, expected: &Type, span: Span, rule: &'static str) -> R<()> {
        self.unify(found, expected).or_else(|_| {
            err(
                ErrorKind::TypeMismatch,
                span,
                rule,
                format!("expected `{}`, found `{}`", self.zonk(expected), self.zonk(found)),
            )
        })
    }

    fn fresh_name(&mut self, src: &str) -> String {
        let mut name = src.to_string();
        let mut n = 1;
        while !self.used_names.insert(name.clone()) {
            n += 1;
            name = format!("{src}'{n}");
        }
        name
    }

    fn push(&mut self, zone: Zone, src: &str, ty: Type) -> String {
        let name = self.fresh_name(src);
        self.scope.push(Entry { src: src.to_string(), name: name.clone(), zone, ty });
        name
    }

    fn push_exact(&mut self, zone: Zone, name: &str, ty: Type) {
        self.used_names.insert(name.to_string());
        self.scope.push(Entry { src: name.to_string(), name: name.to_string(), zone, ty });
    }

    /// Run `f` with the variables of `grounded` promoted to ordinary ones.
    fn with_grounded<T>(&mut self, grounded: &[String], f: impl FnOnce(&mut Self) -> R<T>) -> R<T> {
        let mark = self.scope.len();
        for g in grounded {
            if let Some(e) = self.scope.iter().rev().find(|e| e.name == *g && e.zone == Zone::Omega).cloned() {
                self.scope.push(Entry { zone: Zone::Gamma, ..e });
            }
        }
        let r = f(self);
        self.scope.truncate(mark);
        r
    }

    fn lookup(&mut self, src: &str) -> Option<Lookup> {
        if let Some((i, e)) = self.scope.iter().enumerate().rev().find(|(_, e)| e.src == src) {
            let hidden = e.zone != Zone::Gamma && i < self.barrier;
            return Some(Lookup::Local { name: e.name.clone(), zone: e.zone, ty: e.ty.clone(), hidden });
        }
        if let Some(ty) = self.globals.vars.get(src) {
            return Some(Lookup::Global(ty.clone()));
        }
        if let Some(ty) = self.globals.atoms.get(src) {
            return Some(Lookup::Atom(ty.clone()));
        }
        Prim::from_ident(src).map(Lookup::Prim)
    }

    fn prim(&mut self, p: Prim, span: Span) -> Synth {
        let key = self.fresh_meta();
        if matches!(p, Prim::Eq | Prim::Exists | Prim::Sum) {
            self.eq_keys.push((key.clone(), span));
        }
        let ty = prim_type(p, key);
        if p == Prim::Eq {
            Synth::Expr(elab::Expr::Eq, ty)
        } else {
            Synth::Term(elab::Term::new(elab::TermKind::Prim(p), UsageReport::empty()), ty)
        }
    }

    fn var(&mut self, x: &str, span: Span) -> R<Synth> {
        match self.lookup(x) {
            None => err(ErrorKind::UnknownVar, span, "var", format!("unknown variable `{x}`")),
            Some(Lookup::Local { name, zone: Zone::Delta, ty, hidden: false }) => {
                Ok(Synth::Term(elab::Term::new(elab::TermKind::Var(name.clone()), UsageReport::var(&name)), ty))
            }
            Some(Lookup::Local { zone: Zone::Delta, hidden: true, .. }) => err(
                ErrorKind::RelevanceError,
                span,
                "ui",
                format!("relevant variable `{x}` cannot be used inside an ordinary expression"),
            ),
            Some(Lookup::Local { zone: Zone::Omega, hidden, .. }) => err(
                ErrorKind::GroundingError,
                span,
                "var",
                if hidden {
                    format!("`{x}` is finitely supported and cannot be grounded inside an ordinary expression")
                } else {
                    format!(
                        "`{x}` is finitely supported but used directly; it must first be grounded by applying a finite map to it"
                    )
                },
            ),
            Some(Lookup::Local { name, zone: Zone::Gamma, ty, .. }) => Ok(Synth::Expr(elab::Expr::Var(name), ty)),
            Some(Lookup::Global(ty)) => Ok(Synth::Expr(elab::Expr::Var(x.to_string()), ty)),
            Some(Lookup::Atom(ty)) => Ok(Synth::Expr(elab::Expr::Atom(Rc::from(x)), Type::Base(ty))),
            Some(Lookup::Prim(p)) => Ok(self.prim(p, span)),
        }
    }

    fn term_of(&mut self, s: Synth, span: Span) -> R<(elab::Term, Type)> {
        match s {
            Synth::Term(t, ty) => Ok((t, ty)),
            Synth::Expr(e, ty) => {
                let p = match self.resolve(&ty) {
                    Type::Forget(p) => *p,
                    Type::Meta(_) => {
                        let p = self.fresh_meta();
                        self.expect(&ty, &Type::forget(p.clone()), span, "ue")?;
                        p
                    }
                    other => {
                        return err(
                            ErrorKind::SortError,
                            span,
                            "ue",
                            format!("expression of set type `{}` used where a pointed term is required", self.zonk(&other)),
                        )
                    }
                };
                Ok((elab::Term::new(elab::TermKind::Embed(e), UsageReport::empty()), p))
            }
        }
    }

    fn synth_term(&mut self, t: &Term) -> R<(elab::Term, Type)> {
        let s = self.synth(t)?;
        self.term_of(s, t.span)
    }

    fn check_term(&mut self, t: &Term, expected: &Type) -> R<elab::Term> {
        let (el, _) = self.term_mode(t, Some(expected))?;
        Ok(el)
    }

    /// Synthesize in a pointed-term position.
    fn synth(&mut self, t: &Term) -> R<Synth> {
        match &t.kind {
            TermKind::Var(x) => self.var(x, t.span),
            TermKind::Unit => Ok(Synth::Expr(elab::Expr::Unit, Type::Unit)),
            TermKind::Prim(p) => Ok(self.prim(*p, t.span)),
            TermKind::App(f, a) => self.app(f, a, t.span),
            TermKind::Proj(i, a) => {
                let inner = self.synth(a)?;
                if let Synth::Expr(e, ty) = &inner {
                    if let Type::Prod(x, y) = self.resolve(ty) {
                        let ty = if *i == 1 { *x } else { *y };
                        return Ok(Synth::Expr(elab::Expr::Proj(*i, Box::new(e.clone())), ty));
                    }
                }
                let (el, ty) = self.term_of(inner, a.span)?;
                let (p, q) = match self.resolve(&ty) {
                    Type::With(p, q) => (*p, *q),
                    other => {
                        return err(
                            ErrorKind::TypeMismatch,
                            t.span,
                            "& e",
                            format!("cannot project from `{}`", self.zonk(&other)),
                        )
                    }
                };
                let usage = el.usage.clone();
                let ty = if *i == 1 { p } else { q };
                Ok(Synth::Term(elab::Term::new(elab::TermKind::WithProj(*i, Box::new(el)), usage), ty))
            }
            TermKind::Pair(a, b) => {
                let left = self.synth(a)?;
                if let Synth::Expr(e, ty) = &left {
                    let rty = self.resolve(ty);
                    if rty.sort() == Some(crate::ast::Sort::Set) && !matches!(rty, Type::Forget(_)) {
                        let (eb, tb) = self.synth_expr(b)?;
                        return Ok(Synth::Expr(
                            elab::Expr::Pair(Box::new(e.clone()), Box::new(eb)),
                            Type::prod(rty, tb),
                        ));
                    }
                }
                let (ta, pa) = self.term_of(left, a.span)?;
                let (tb, pb) = self.with_grounded(ta.usage.layout(), |c| c.synth_term(b))?;
                let usage = concat_usage(&ta.usage, &tb.usage, t.span, "@ i")?;
                Ok(Synth::Term(
                    elab::Term::new(elab::TermKind::SmashPair(Box::new(ta), Box::new(tb)), usage),
                    Type::smash(pa, pb),
                ))
            }
            TermKind::IfJust(..) => {
                let (e, ty) = self.synth_expr(t)?;
                Ok(Synth::Expr(e, ty))
            }
            _ => {
                let (el, ty) = self.term_mode(t, None)?;
                Ok(Synth::Term(el, ty))
            }
        }
    }

    fn app(&mut self, f: &Term, arg: &Term, span: Span) -> R<Synth> {
        let head = self.synth(f)?;
        if let Synth::Expr(e, ty) = &head {
            match self.resolve(ty) {
                Type::Arrow(dom, cod) => {
                    let a = self.check_expr(arg, &dom)?;
                    return Ok(Synth::Expr(elab::Expr::App(Box::new(e.clone()), Box::new(a)), *cod));
                }
                Type::Meta(_) => {
                    return err(ErrorKind::TypeMismatch, f.span, "-> e", "cannot infer the type of the applied function")
                }
                _ => {}
            }
        }
        let (head, hty) = self.term_of(head, f.span)?;
        match self.resolve(&hty) {
            Type::Fin(key, _p) => {
                let p = *_p;
                if let TermKind::Var(x) = &arg.kind {
                    let grounded_by_head =
                        |n: &str| head.usage.omega.as_ref().is_some_and(|o| o.iter().any(|v| v == n));
                    if let Some(Lookup::Local { name, zone: Zone::Omega, ty, hidden: false }) = self.lookup(x) {
                        if !grounded_by_head(&name) {
                            self.expect(&ty, &key, arg.span, "~> e")?;
                            let usage = UsageReport {
                                delta: head.usage.delta.clone(),
                                omega: head.usage.omega.as_ref().map(|o| {
                                    let mut o = o.clone();
                                    o.push(name.clone());
                                    o
                                }),
                            };
                            return Ok(Synth::Term(
                                elab::Term::new(elab::TermKind::AppFin(Box::new(head), name), usage),
                                p,
                            ));
                        }
                    }
                }
                let e = self
                    .with_grounded(head.usage.layout(), |c| c.check_expr(arg, &key))
                    .map_err(|e| with_usage(e, &head.usage))?;
                let usage = head.usage.clone();
                Ok(Synth::Term(elab::Term::new(elab::TermKind::AppFinExpr(Box::new(head), e), usage), p))
            }
            Type::Lolli(dom, cod) => {
                let a = self
                    .with_grounded(head.usage.layout(), |c| c.check_term(arg, &dom))
                    .map_err(|e| with_usage(e, &head.usage))?;
                let usage = concat_usage(&head.usage, &a.usage, span, "-o e")?;
                Ok(Synth::Term(elab::Term::new(elab::TermKind::AppLolli(Box::new(head), Box::new(a)), usage), *cod))
            }
            Type::Meta(_) => err(ErrorKind::TypeMismatch, f.span, "-o e", "cannot infer the type of the applied term"),
            other => err(
                ErrorKind::TypeMismatch,
                f.span,
                "-o e",
                format!("a term of type `{}` cannot be applied", self.zonk(&other)),
            ),
        }
    }

    /// Pointed-term forms with an optional expected type (check when
    /// `Some`, synthesize when `None`).
    fn term_mode(&mut self, t: &Term, expected: Option<&Type>) -> R<(elab::Term, Type)> {
        let exp = expected.map(|e| self.resolve(e));
        match (&t.kind, exp.as_ref()) {
            (TermKind::Nil, exp) => {
                let ty = match exp {
                    Some(ty) if ty.sort() == Some(crate::ast::Sort::Set) => {
                        return err(ErrorKind::SortError, t.span, "nil", format!("`nil` is not an element of set type `{}`", self.zonk(ty)))
                    }
                    Some(ty) => ty.clone(),
                    None => self.fresh_meta(),
                };
                Ok((elab::Term::new(elab::TermKind::Nil, UsageReport::top()), ty))
            }
            (TermKind::Nat(n), _) => {
                let el = elab::Term::new(elab::TermKind::Nat(*n), UsageReport::empty());
                if let Some(e) = expected {
                    self.expect(&Type::Nat0, e, t.span, "ue")?;
                }
                Ok((el, Type::Nat0))
            }
            (TermKind::Lam(x, body), Some(Type::Lolli(p, q))) => {
                let mark = self.scope.len();
                let name = self.push(Zone::Delta, x, (**p).clone());
                let r = self.check_term(body, q);
                self.scope.truncate(mark);
                let body = r?;
                let u = &body.usage;
                if !u.uses(&name) {
                    return Err(with_usage(
                        TypeError {
                            kind: ErrorKind::RelevanceError,
                            span: t.span,
                            rule: "-o i",
                            detail: format!("`{x}` is never used; a point preserving function must use its argument"),
                            usage: None,
                        },
                        u,
                    ));
                }
                if let Some(g) = u.omega.as_ref().and_then(|o| o.first()) {
                    return Err(with_usage(
                        TypeError {
                            kind: ErrorKind::GroundingError,
                            span: t.span,
                            rule: "-o i",
                            detail: format!("the body of a point preserving function grounds `{g}`; its finite support context must be empty"),
                            usage: None,
                        },
                        u,
                    ));
                }
                let usage = UsageReport {
                    delta: u.delta.as_ref().map(|d| d.iter().filter(|v| **v != name).cloned().collect()),
                    omega: Some(Vec::new()),
                };
                let ty = exp.clone().unwrap();
                Ok((elab::Term::new(elab::TermKind::LamLolli(name, Rc::new(body)), usage), ty))
            }
            (TermKind::Lam(x, body), Some(Type::Fin(a, p))) => {
                let mark = self.scope.len();
                let name = self.push(Zone::Omega, x, (**a).clone());
                let r = self.check_term(body, p);
                self.scope.truncate(mark);
                let body = r?;
                let u = &body.usage;
                if !u.grounds(&name) {
                    return Err(with_usage(
                        TypeError {
                            kind: ErrorKind::GroundingError,
                            span: t.span,
                            rule: "~> i",
                            detail: format!("`{x}` is never grounded; apply a finite map to it so the result is finitely supported"),
                            usage: None,
                        },
                        u,
                    ));
                }
                let usage = UsageReport {
                    delta: u.delta.clone(),
                    omega: u.omega.as_ref().map(|o| o.iter().filter(|v| **v != name).cloned().collect()),
                };
                let ty = exp.clone().unwrap();
                Ok((
                    elab::Term::new(elab::TermKind::LamFin { param: name, key: (**a).clone(), body: Box::new(body) }, usage),
                    ty,
                ))
            }
            (TermKind::Lam(..), Some(Type::Meta(_))) | (TermKind::Lam(..), None) => {
                // An unannotated lambda in term position is read as a finite map.
                let key = self.fresh_meta();
                let val = self.fresh_meta();
                let ty = Type::fin(key, val);
                if let Some(e) = expected {
                    self.expect(&ty, e, t.span, "~> i")?;
                }
                self.term_mode(t, Some(&ty))
            }
            (TermKind::Lam(..), Some(other)) => err(
                ErrorKind::TypeMismatch,
                t.span,
                "-o i",
                format!("a function cannot have type `{}`", self.zonk(other)),
            ),
            (TermKind::WithPair(a, b), exp) => {
                let (pa, pb) = match exp {
                    Some(Type::With(p, q)) => ((**p).clone(), (**q).clone()),
                    Some(Type::Meta(_)) | None => (self.fresh_meta(), self.fresh_meta()),
                    Some(other) => {
                        return err(ErrorKind::TypeMismatch, t.span, "& i", format!("expected `{}`, found a direct pair", self.zonk(other)))
                    }
                };
                let ta = self.check_term(a, &pa)?;
                let tb = self.check_term(b, &pb)?;
                let usage = unify_usage(&ta.usage, &tb.usage, t.span)?;
                let ty = Type::with(pa, pb);
                if let Some(e) = expected {
                    self.expect(&ty, e, t.span, "& i")?;
                }
                Ok((elab::Term::new(elab::TermKind::WithPair(Box::new(ta), Box::new(tb)), usage), ty))
            }
            (TermKind::Pair(a, b), Some(Type::Smash(p, q))) => {
                let (p, q) = ((**p).clone(), (**q).clone());
                let ta = self.check_term(a, &p)?;
                let tb = self
                    .with_grounded(ta.usage.layout(), |c| c.check_term(b, &q))
                    .map_err(|e| with_usage(e, &ta.usage))?;
                let usage = concat_usage(&ta.usage, &tb.usage, t.span, "@ i")?;
                Ok((elab::Term::new(elab::TermKind::SmashPair(Box::new(ta), Box::new(tb)), usage), Type::smash(p, q)))
            }
            (TermKind::LetPair(x, y, s, u), _) => {
                let (ts, sty) = self.synth_term(s)?;
                let (p, q) = match self.resolve(&sty) {
                    Type::Smash(p, q) => (*p, *q),
                    other => {
                        let (p, q) = (self.fresh_meta(), self.fresh_meta());
                        if self.unify(&other, &Type::smash(p.clone(), q.clone())).is_err() {
                            return err(ErrorKind::TypeMismatch, s.span, "@ e", format!("expected a smash pair, found `{}`", self.zonk(&other)));
                        }
                        (p, q)
                    }
                };
                let layout = ts.usage.layout().to_vec();
                let (tu, uty, xn, yn) = self
                    .with_grounded(&layout, |c| {
                        let xn = c.push(Zone::Delta, x, p);
                        let yn = c.push(Zone::Delta, y, q);
                        let (tu, uty) = c.term_mode(u, expected)?;
                        Ok((tu, uty, xn, yn))
                    })
                    .map_err(|e| with_usage(e, &ts.usage))?;
                for (src, n) in [(x, &xn), (y, &yn)] {
                    if !tu.usage.uses(n) {
                        return Err(with_usage(
                            TypeError {
                                kind: ErrorKind::RelevanceError,
                                span: t.span,
                                rule: "@ e",
                                detail: format!("`{src}` is never used; both components of a smash pair must be used"),
                                usage: None,
                            },
                            &tu.usage,
                        ));
                    }
                }
                let inner = UsageReport {
                    delta: tu.usage.delta.as_ref().map(|d| d.iter().filter(|v| **v != xn && **v != yn).cloned().collect()),
                    omega: tu.usage.omega.clone(),
                };
                let usage = concat_usage(&ts.usage, &inner, t.span, "@ e")?;
                Ok((elab::Term::new(elab::TermKind::LetSmash(xn, yn, Box::new(ts), Box::new(tu)), usage), uty))
            }
            (TermKind::LetJust(x, s, u), _) => {
                let a = self.fresh_meta();
                let ts = self.check_term(s, &Type::maybe(a.clone()))?;
                let layout = ts.usage.layout().to_vec();
                let (tu, uty, xn) = self
                    .with_grounded(&layout, |c| {
                        let xn = c.push(Zone::Gamma, x, a);
                        let (tu, uty) = c.term_mode(u, expected)?;
                        Ok((tu, uty, xn))
                    })
                    .map_err(|e| with_usage(e, &ts.usage))?;
                let usage = concat_usage(&ts.usage, &tu.usage, t.span, "maybe e")?;
                Ok((elab::Term::new(elab::TermKind::LetJust(xn, Box::new(ts), Box::new(tu)), usage), uty))
            }
            (TermKind::Just(e), exp) => {
                let a = match exp {
                    Some(Type::Maybe(a)) => (**a).clone(),
                    _ => self.fresh_meta(),
                };
                let el = self.check_expr(e, &a)?;
                let ty = Type::maybe(a);
                if let Some(ex) = expected {
                    self.expect(&ty, ex, t.span, "maybe i")?;
                }
                Ok((elab::Term::new(elab::TermKind::Just(el), UsageReport::empty()), ty))
            }
            (TermKind::IfJust(..), Some(p)) => {
                let p = p.clone();
                let e = self.check_expr(t, &Type::forget(p.clone()))?;
                Ok((elab::Term::new(elab::TermKind::Embed(e), UsageReport::empty()), p))
            }
            _ => {
                let (el, ty) = self.synth_term(t)?;
                if let Some(e) = expected {
                    self.expect(&ty, e, t.span, el.kind.rule())?;
                }
                Ok((el, ty))
            }
        }
    }

    /// Rule `ui`: check a pointed term with relevant and finitely supported
    /// variables out of reach.
    fn ui(&mut self, t: &Term, expected: Option<&Type>) -> R<(elab::Expr, Type)> {
        let saved = self.barrier;
        self.barrier = self.scope.len();
        let r = self.term_mode(t, expected);
        self.barrier = saved;
        let (el, ty) = r?;
        if !el.usage.is_closed() {
            return Err(with_usage(
                TypeError {
                    kind: ErrorKind::RelevanceError,
                    span: t.span,
                    rule: "ui",
                    detail: "an embedded pointed term must not use relevant or finitely supported variables".into(),
                    usage: None,
                },
                &el.usage,
            ));
        }
        let e = match el.kind {
            elab::TermKind::Embed(e) => e,
            _ => elab::Expr::Term(Box::new(el)),
        };
        Ok((e, Type::forget(ty)))
    }

    fn check_expr(&mut self, t: &Term, expected: &Type) -> R<elab::Expr> {
        let exp = self.resolve(expected);
        match (&t.kind, &exp) {
            (TermKind::Lam(x, body), Type::Arrow(a, b)) => {
                let mark = self.scope.len();
                let name = self.push(Zone::Gamma, x, (**a).clone());
                let r = self.check_expr(body, b);
                self.scope.truncate(mark);
                Ok(elab::Expr::Lam(name, Box::new(r?)))
            }
            (TermKind::Pair(a, b), Type::Prod(x, y)) => {
                let ea = self.check_expr(a, x)?;
                let eb = self.check_expr(b, y)?;
                Ok(elab::Expr::Pair(Box::new(ea), Box::new(eb)))
            }
            (TermKind::IfJust(s, x, a, b), _) => self.if_just(s, x, a, b, &exp),
            (TermKind::Var(_) | TermKind::App(..) | TermKind::Proj(..) | TermKind::Unit, _) => {
                let (e, ty) = self.synth_expr(t)?;
                self.expect(&ty, &exp, t.span, "evar")?;
                Ok(e)
            }
            (_, Type::Forget(p)) => {
                let p = (**p).clone();
                Ok(self.ui(t, Some(&p))?.0)
            }
            (TermKind::Lam(..), _) => err(
                ErrorKind::TypeMismatch,
                t.span,
                "-> i",
                format!("a function cannot have type `{}`", self.zonk(&exp)),
            ),
            _ => {
                let (e, ty) = self.synth_expr(t)?;
                self.expect(&ty, &exp, t.span, "ui")?;
                Ok(e)
            }
        }
    }

    fn if_just(&mut self, s: &Term, x: &str, a: &Term, b: &Term, expected: &Type) -> R<elab::Expr> {
        let m = self.fresh_meta();
        let es = self.check_expr(s, &Type::forget(Type::maybe(m.clone())))?;
        let mark = self.scope.len();
        let name = self.push(Zone::Gamma, x, m);
        let ea = self.check_expr(a, expected);
        self.scope.truncate(mark);
        let ea = ea?;
        let eb = self.check_expr(b, expected)?;
        Ok(elab::Expr::IfJust(Box::new(es), name, Box::new(ea), Box::new(eb)))
    }

    fn synth_expr(&mut self, t: &Term) -> R<(elab::Expr, Type)> {
        match &t.kind {
            TermKind::Var(x) => match self.var(x, t.span)? {
                Synth::Expr(e, ty) => Ok((e, ty)),
                Synth::Term(el, ty) => {
                    let _ = el;
                    self.ui(t, Some(&ty))
                }
            },
            TermKind::Unit => Ok((elab::Expr::Unit, Type::Unit)),
            TermKind::Prim(Prim::Eq) => match self.prim(Prim::Eq, t.span) {
                Synth::Expr(e, ty) => Ok((e, ty)),
                Synth::Term(..) => unreachable!(),
            },
            TermKind::App(f, a) if !self.is_pointed_head(f) => {
                let (ef, tf) = self.synth_expr(f)?;
                match self.resolve(&tf) {
                    Type::Arrow(dom, cod) => {
                        let ea = self.check_expr(a, &dom)?;
                        Ok((elab::Expr::App(Box::new(ef), Box::new(ea)), *cod))
                    }
                    Type::Meta(_) => err(ErrorKind::TypeMismatch, f.span, "-> e", "cannot infer the type of the applied function"),
                    _ => self.ui(t, None),
                }
            }
            TermKind::Pair(a, b) => {
                let (ea, ta) = self.synth_expr(a)?;
                let (eb, tb) = self.synth_expr(b)?;
                Ok((elab::Expr::Pair(Box::new(ea), Box::new(eb)), Type::prod(ta, tb)))
            }
            TermKind::Proj(i, a) if !self.is_pointed_head(a) => {
                let (ea, ta) = self.synth_expr(a)?;
                match self.resolve(&ta) {
                    Type::Prod(x, y) => Ok((elab::Expr::Proj(*i, Box::new(ea)), if *i == 1 { *x } else { *y })),
                    Type::Meta(_) => err(ErrorKind::TypeMismatch, a.span, "x e", "cannot infer the type of the projected pair"),
                    _ => self.ui(t, None),
                }
            }
            TermKind::IfJust(s, x, a, b) => {
                let ty = self.fresh_meta();
                let e = self.if_just(s, x, a, b, &ty)?;
                Ok((e, ty))
            }
            TermKind::Lam(..) => err(ErrorKind::TypeMismatch, t.span, "-> i", "cannot infer the type of a function; add an annotation"),
            _ => self.ui(t, None),
        }
    }

    /// Whether the head of an application spine is syntactically pointed
    /// (a relevant variable or a pointed primitive), so the application
    /// can only be a term.
    fn is_pointed_head(&mut self, t: &Term) -> bool {
        match &t.kind {
            TermKind::App(f, _) | TermKind::Proj(_, f) => self.is_pointed_head(f),
            TermKind::Var(x) => matches!(
                self.lookup(x),
                Some(Lookup::Local { zone: Zone::Delta | Zone::Omega, .. }) | Some(Lookup::Prim(_))
            ),
            TermKind::Prim(p) => *p != Prim::Eq,
            _ => false,
        }
    }

    fn zonk_term(&mut self, t: &mut elab::Term) -> R<()> {
        use elab::TermKind::*;
        match &mut t.kind {
            Nil | Nat(_) | Var(_) | Prim(_) => Ok(()),
            Embed(e) | Just(e) => self.zonk_expr(e),
            LamLolli(_, b) => {
                let b = Rc::get_mut(b).expect("freshly elaborated");
                self.zonk_term(b)
            }
            LamFin { key, body, .. } => {
                *key = self.zonk(key);
                self.zonk_term(body)
            }
            AppFin(a, _) | WithProj(_, a) => self.zonk_term(a),
            AppFinExpr(a, e) => {
                self.zonk_term(a)?;
                self.zonk_expr(e)
            }
            AppLolli(a, b) | WithPair(a, b) | SmashPair(a, b) | LetSmash(_, _, a, b) | LetJust(_, a, b) => {
                self.zonk_term(a)?;
                self.zonk_term(b)
            }
        }
    }

    fn zonk_expr(&mut self, e: &mut elab::Expr) -> R<()> {
        use elab::Expr::*;
        match e {
            Var(_) | Unit | Atom(_) | Eq => Ok(()),
            Lam(_, b) | Proj(_, b) => self.zonk_expr(b),
            App(a, b) | Pair(a, b) => {
                self.zonk_expr(a)?;
                self.zonk_expr(b)
            }
            IfJust(s, _, a, b) => {
                self.zonk_expr(s)?;
                self.zonk_expr(a)?;
                self.zonk_expr(b)
            }
            Term(t) => self.zonk_term(t),
        }
    }

    /// After a definition: resolve finite-map key types and check they are
    /// eqtypes.
    fn finish(&mut self, body: &mut Body, span: Span) -> R<()> {
        match body {
            Body::Term(t) => self.zonk_term(t)?,
            Body::Expr(e) => self.zonk_expr(e)?,
        }
        let mut keys: Vec<(Type, Span)> = self.eq_keys.iter().map(|(k, s)| (self.zonk(k), *s)).collect();
        let mut lam_keys = Vec::new();
        let mut collect = |t: &elab::Term| {
            if let elab::TermKind::LamFin { key, .. } = &t.kind {
                lam_keys.push(key.clone());
            }
        };
        match body {
            Body::Term(t) => t.walk(&mut collect),
            Body::Expr(e) => e.walk_terms(&mut collect),
        }
        keys.extend(lam_keys.into_iter().map(|k| (k, span)));
        for (k, s) in keys {
            let mut ms = Vec::new();
            k.metas(&mut ms);
            if !ms.is_empty() {
                return err(ErrorKind::TypeMismatch, s, "~> i", format!("cannot infer the key type `{k}`"));
            }
            if !k.is_eqtype() {
                return err(ErrorKind::NotEqType, s, "~> i", format!("`{k}` is not an eqtype and cannot be a finite-map key"));
            }
        }
        Ok(())
    }
}

/// Check a pointed term against `expected` in an explicit context. The
/// returned tree carries the usage report at its root.
pub fn check_term(globals: &Globals, ctx: &crate::ast::Context, t: &Term, expected: &Type) -> R<elab::Term> {
    if let Some(d) = ctx.duplicate() {
        return err(ErrorKind::Redefinition, t.span, "ctx", format!("`{d}` is declared twice in the context"));
    }
    let mut c = Checker::new(globals);
    for (n, ty) in &ctx.gamma {
        c.push_exact(Zone::Gamma, n, ty.clone());
    }
    for (n, ty) in &ctx.delta {
        c.push_exact(Zone::Delta, n, ty.clone());
    }
    for (n, ty) in &ctx.omega {
        c.push_exact(Zone::Omega, n, ty.clone());
    }
    let mut body = Body::Term(c.check_term(t, expected)?);
    c.finish(&mut body, t.span)?;
    match body {
        Body::Term(t) => Ok(t),
        Body::Expr(_) => unreachable!(),
    }
}

/// Check an ordinary expression against a set type under `gamma`.
pub fn check_expr(globals: &Globals, gamma: &[(String, Type)], t: &Term, expected: &Type) -> R<elab::Expr> {
    let mut c = Checker::new(globals);
    for (n, ty) in gamma {
        c.push_exact(Zone::Gamma, n, ty.clone());
    }
    let mut body = Body::Expr(c.check_expr(t, expected)?);
    c.finish(&mut body, t.span)?;
    match body {
        Body::Expr(e) => Ok(e),
        Body::Term(_) => unreachable!(),
    }
}

/// Check a closed definition body against its annotation.
pub fn check_definition(globals: &Globals, ty: &Type, t: &Term, span: Span) -> R<Body> {
    globals.check_signature(ty, span)?;
    let mut c = Checker::new(globals);
    let mut body = if ty.is_pointed() {
        let el = c.check_term(t, ty)?;
        if !el.usage.is_closed() {
            return Err(with_usage(
                TypeError {
                    kind: ErrorKind::GroundingError,
                    span,
                    rule: "ui",
                    detail: "a definition must not depend on relevant or finitely supported variables".into(),
                    usage: None,
                },
                &el.usage,
            ));
        }
        Body::Term(el)
    } else {
        Body::Expr(c.check_expr(t, ty)?)
    };
    c.finish(&mut body, span)?;
    Ok(body)
}

/// Check a closed query with an optional annotation, returning its type.
pub fn check_query(globals: &Globals, t: &Term, ann: Option<&Type>) -> R<(Body, Type)> {
    if let Some(ty) = ann {
        return Ok((check_definition(globals, ty, t, t.span)?, ty.clone()));
    }
    let mut c = Checker::new(globals);
    let s = c.synth(t)?;
    let (mut body, ty) = match s {
        Synth::Term(el, ty) => {
            if !el.usage.is_closed() {
                return err(ErrorKind::GroundingError, t.span, "ui", "query is not closed");
            }
            (Body::Term(el), ty)
        }
        Synth::Expr(e, ty) => (Body::Expr(e), ty),
    };
    c.finish(&mut body, t.span)?;
    let ty = c.zonk(&ty);
    let mut ms = Vec::new();
    ty.metas(&mut ms);
    if !ms.is_empty() {
        return err(ErrorKind::TypeMismatch, t.span, "ui", format!("cannot infer the type `{ty}`; add an annotation"));
    }
    Ok((body, ty))
}

#[derive(Clone, Debug)]
pub enum CheckedItem {
    Type { name: String, atoms: Vec<String> },
    Facts { name: String, ty: Type, source: String },
    Def { name: String, ty: Type, body: Rc<Body> },
}

#[derive(Clone, Debug, Default)]
pub struct CheckedProgram {
    pub items: Vec<CheckedItem>,
    pub globals: Globals,
}

impl CheckedProgram {
    /// Add one declaration, checking it against everything before it.
    pub fn add(&mut self, decl: &Decl) -> R<()> {
        match decl {
            Decl::Type { name, atoms, span } => {
                self.globals.declare_type(name, atoms, *span)?;
                self.items.push(CheckedItem::Type { name: name.clone(), atoms: atoms.clone() });
            }
            Decl::Facts { name, ty, source, span } => {
                self.globals.check_signature(ty, *span)?;
                if !matches!(ty, Type::Fin(..)) {
                    return err(ErrorKind::SortError, *span, "decl", format!("fact table `{name}` must have a finite-map type"));
                }
                self.globals.declare_var(name, ty.clone(), *span)?;
                self.items.push(CheckedItem::Facts { name: name.clone(), ty: ty.clone(), source: source.clone() });
            }
            Decl::Def { name, ty, body, span } => {
                if self.globals.vars.contains_key(name) || self.globals.atoms.contains_key(name) {
                    return err(ErrorKind::Redefinition, *span, "decl", format!("`{name}` is already defined"));
                }
                let checked = check_definition(&self.globals, ty, body, *span)?;
                self.globals.declare_var(name, ty.clone(), *span)?;
                self.items.push(CheckedItem::Def { name: name.clone(), ty: ty.clone(), body: Rc::new(checked) });
            }
        }
        Ok(())
    }

    pub fn defs(&self) -> impl Iterator<Item = (&str, &Type, &Rc<Body>)> {
        self.items.iter().filter_map(|i| match i {
            CheckedItem::Def { name, ty, body } => Some((name.as_str(), ty, body)),
            _ => None,
        })
    }

    pub fn def(&self, name: &str) -> Option<(&Type, &Rc<Body>)> {
        self.defs().find(|(n, _, _)| *n == name).map(|(_, t, b)| (t, b))
    }
}

pub fn check_program_full(p: &Program) -> R<CheckedProgram> {
    let mut out = CheckedProgram::default();
    for d in &p.decls {
        out.add(d)?;
    }
    Ok(out)
}

/// Signatures of every definition, in declaration order.
pub fn check_program(p: &Program) -> R<Vec<(String, Type)>> {
    let checked = check_program_full(p)?;
    Ok(checked.defs().map(|(n, t, _)| (n.to_string(), t.clone())).collect())
}
