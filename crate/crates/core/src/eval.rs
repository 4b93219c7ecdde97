//! Evaluation.
//!
//! A pointed term with grounded variables `x1..xn` denotes a finite table
//! from their values to the term's value. [`eval_term`] computes that table
//! directly, keyed in the order of the term's usage report: grounding
//! becomes enumeration, lookups become probes, and pairing becomes a join.

use std::collections::HashMap;
use std::rc::Rc;

use thiserror::Error;

use crate::ast::{Prim, Type};
use crate::elab::{Body, Expr, Term, TermKind};
use crate::prelude;
use crate::runtime::{Closure, DValue, DeltaEnv, Env, FunClosure, KeyError, PValue, Table};
use crate::typecheck::{CheckedItem, CheckedProgram};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum EvalError {
    #[error(transparent)]
    Key(#[from] KeyError),
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("no facts supplied for `{0}`")]
    MissingFacts(String),
    #[error("evaluation stuck: {0}")]
    Stuck(String),
}

type R<T> = Result<T, EvalError>;

fn stuck<T>(msg: impl Into<String>) -> R<T> {
    Err(EvalError::Stuck(msg.into()))
}

fn unit_table(v: PValue) -> Table {
    let mut t = Table::new(0);
    t.insert(Vec::new(), v).expect("arity 0");
    t
}

/// The value of a closed pointed term (arity-0 table).
fn value_of(t: &Table) -> PValue {
    t.get(&[]).cloned().unwrap_or(PValue::Nil)
}

fn concat(a: &[DValue], b: &[DValue]) -> Vec<DValue> {
    a.iter().chain(b).cloned().collect()
}

/// The table of `t` under plain bindings `gamma` and relevant bindings
/// `delta`. Keys follow `t.usage.layout()`.
pub fn eval_term(t: &Term, gamma: &Env, delta: &DeltaEnv) -> R<Table> {
    let arity = t.usage.layout().len();
    if delta.is_nil() {
        return Ok(Table::new(arity));
    }
    match &t.kind {
        TermKind::Nil => Ok(Table::new(arity)),
        TermKind::Nat(n) => Ok(unit_table(PValue::nat(*n))),
        TermKind::Embed(e) => match eval_expr(e, gamma)? {
            DValue::Wrapped(p) => Ok(unit_table(p)),
            other => stuck(format!("embedded expression produced plain value `{other}`")),
        },
        TermKind::Var(x) => match delta.get(x) {
            Some(v) => Ok(unit_table(v.clone())),
            None => Err(EvalError::Unbound(x.clone())),
        },
        TermKind::Prim(p) => Ok(unit_table(PValue::Prim(*p))),
        TermKind::LamLolli(x, body) => Ok(unit_table(PValue::Closure(Rc::new(Closure::Lambda {
            param: x.clone(),
            body: body.clone(),
            gamma: gamma.clone(),
            delta: delta.clone(),
        })))),
        TermKind::LamFin { param, body, .. } => {
            let inner = eval_term(body, gamma, delta)?;
            let Some(pos) = body.usage.layout().iter().position(|v| v == param) else {
                // TOP body: nothing was enumerated.
                return Ok(Table::new(arity));
            };
            let mut groups: HashMap<Vec<u8>, (Vec<DValue>, Table)> = HashMap::new();
            let mut order = Vec::new();
            for (k, v) in inner.iter() {
                let mut outer = k.to_vec();
                let x = outer.remove(pos);
                let enc = crate::runtime::encode_key(&outer)?;
                let slot = groups.entry(enc.clone()).or_insert_with(|| {
                    order.push(enc);
                    (outer, Table::new(1))
                });
                slot.1.insert(vec![x], v.clone())?;
            }
            let mut out = Table::new(arity);
            for enc in order {
                let (outer, tbl) = groups.remove(&enc).expect("grouped");
                out.insert(outer, PValue::table(tbl))?;
            }
            Ok(out)
        }
        TermKind::AppLolli(f, a) => {
            let tf = eval_term(f, gamma, delta)?;
            let mut out = Table::new(arity);
            for (k1, fv) in tf.iter() {
                let g = gamma.extend_all(f.usage.layout(), k1);
                for (k2, av) in eval_term(a, &g, delta)?.iter() {
                    out.insert(concat(k1, k2), apply_closure(fv, av)?)?;
                }
            }
            Ok(out)
        }
        TermKind::AppFin(f, _) => {
            let tf = eval_term(f, gamma, delta)?;
            let mut out = Table::new(arity);
            for (k1, fv) in tf.iter() {
                let Some(inner) = fv.as_table() else { return stuck(format!("applied non-table `{fv}`")) };
                for (k, v) in inner.iter() {
                    out.insert(concat(k1, k), v.clone())?;
                }
            }
            Ok(out)
        }
        TermKind::AppFinExpr(f, e) => {
            let tf = eval_term(f, gamma, delta)?;
            let mut out = Table::new(arity);
            for (k1, fv) in tf.iter() {
                let Some(inner) = fv.as_table() else { return stuck(format!("applied non-table `{fv}`")) };
                let g = gamma.extend_all(f.usage.layout(), k1);
                let key = eval_expr(e, &g)?;
                out.insert(k1.to_vec(), inner.lookup(&[key])?)?;
            }
            Ok(out)
        }
        TermKind::WithPair(a, b) => {
            let layout = t.usage.layout();
            let ta = reorder(&eval_term(a, gamma, delta)?, a.usage.layout(), layout)?;
            let tb = reorder(&eval_term(b, gamma, delta)?, b.usage.layout(), layout)?;
            let mut out = Table::new(arity);
            for (k, va) in ta.iter() {
                let vb = tb.get(k).cloned().unwrap_or(PValue::Nil);
                out.insert(k.to_vec(), PValue::with(va.clone(), vb))?;
            }
            for (k, vb) in tb.iter() {
                if ta.get(k).is_none() {
                    out.insert(k.to_vec(), PValue::with(PValue::Nil, vb.clone()))?;
                }
            }
            Ok(out)
        }
        TermKind::WithProj(i, a) => {
            let ta = eval_term(a, gamma, delta)?;
            let mut out = Table::new(arity);
            for (k, v) in ta.iter() {
                let c = match v {
                    PValue::With(p, q) => if *i == 1 { (**p).clone() } else { (**q).clone() },
                    other => return stuck(format!("projected from non-pair `{other}`")),
                };
                out.insert(k.to_vec(), c)?;
            }
            Ok(out)
        }
        TermKind::SmashPair(a, b) => {
            let ta = eval_term(a, gamma, delta)?;
            let mut out = Table::new(arity);
            for (k1, va) in ta.iter() {
                let g = gamma.extend_all(a.usage.layout(), k1);
                for (k2, vb) in eval_term(b, &g, delta)?.iter() {
                    out.insert(concat(k1, k2), crate::runtime::smash(va.clone(), vb.clone()))?;
                }
            }
            Ok(out)
        }
        TermKind::LetSmash(x, y, s, u) => {
            let ts = eval_term(s, gamma, delta)?;
            let mut out = Table::new(arity);
            for (k1, sv) in ts.iter() {
                let PValue::Smash(p, q) = sv else { return stuck(format!("let-pair on non-pair `{sv}`")) };
                let g = gamma.extend_all(s.usage.layout(), k1);
                let d = delta.extend(x, (**p).clone()).extend(y, (**q).clone());
                for (k2, v) in eval_term(u, &g, &d)?.iter() {
                    out.insert(concat(k1, k2), v.clone())?;
                }
            }
            Ok(out)
        }
        TermKind::Just(e) => Ok(unit_table(PValue::Just(Box::new(eval_expr(e, gamma)?)))),
        TermKind::LetJust(x, s, u) => {
            let ts = eval_term(s, gamma, delta)?;
            let mut out = Table::new(arity);
            for (k1, sv) in ts.iter() {
                let PValue::Just(d) = sv else { return stuck(format!("let-just on `{sv}`")) };
                let g = gamma.extend_all(s.usage.layout(), k1).extend(x, (**d).clone());
                for (k2, v) in eval_term(u, &g, delta)?.iter() {
                    out.insert(concat(k1, k2), v.clone())?;
                }
            }
            Ok(out)
        }
    }
}

/// Permute the keys of `t` from layout `from` to layout `to` (the same
/// variables). An empty `from` with non-empty `to` only happens for TOP
/// children, whose tables are empty.
fn reorder(t: &Table, from: &[String], to: &[String]) -> R<Table> {
    if from == to || t.is_empty() {
        return Ok(if t.arity() == to.len() { t.clone() } else { Table::new(to.len()) });
    }
    let perm: Vec<usize> = to
        .iter()
        .map(|v| from.iter().position(|w| w == v).ok_or_else(|| EvalError::Stuck(format!("layout lacks `{v}`"))))
        .collect::<R<_>>()?;
    let mut out = Table::new(to.len());
    for (k, v) in t.iter() {
        out.insert(perm.iter().map(|&i| k[i].clone()).collect(), v.clone())?;
    }
    Ok(out)
}

pub fn eval_expr(e: &Expr, gamma: &Env) -> R<DValue> {
    match e {
        Expr::Var(x) => gamma.get(x).cloned().ok_or_else(|| EvalError::Unbound(x.clone())),
        Expr::Unit => Ok(DValue::Unit),
        Expr::Atom(a) => Ok(DValue::Atom(a.clone())),
        Expr::Eq => Ok(DValue::Eq),
        Expr::Lam(x, b) => Ok(DValue::Fun(Rc::new(FunClosure {
            param: x.clone(),
            body: Rc::new((**b).clone()),
            gamma: gamma.clone(),
        }))),
        Expr::App(f, a) => {
            let fv = eval_expr(f, gamma)?;
            let av = eval_expr(a, gamma)?;
            apply_fun(&fv, av)
        }
        Expr::Pair(a, b) => Ok(DValue::pair(eval_expr(a, gamma)?, eval_expr(b, gamma)?)),
        Expr::Proj(i, a) => match eval_expr(a, gamma)? {
            DValue::Prod(x, y) => Ok(if *i == 1 { *x } else { *y }),
            other => stuck(format!("projected from non-pair `{other}`")),
        },
        Expr::IfJust(s, x, a, b) => match eval_expr(s, gamma)? {
            DValue::Wrapped(PValue::Just(d)) => eval_expr(a, &gamma.extend(x, *d)),
            DValue::Wrapped(p) if p.is_nil() => eval_expr(b, gamma),
            other => stuck(format!("case on `{other}`")),
        },
        Expr::Term(t) => Ok(DValue::Wrapped(value_of(&eval_term(t, gamma, &DeltaEnv::default())?))),
    }
}

pub fn apply_fun(f: &DValue, a: DValue) -> R<DValue> {
    match f {
        DValue::Fun(c) => eval_expr(&c.body, &c.gamma.extend(&c.param, a)),
        DValue::Eq => Ok(DValue::Wrapped(prelude::prim_eq(a)?)),
        other => stuck(format!("applied non-function `{other}`")),
    }
}

/// Apply a point preserving function. A nil argument yields nil without
/// entering the body.
pub fn apply_closure(f: &PValue, a: &PValue) -> R<PValue> {
    if a.is_nil() || f.is_nil() {
        return Ok(PValue::Nil);
    }
    match f {
        PValue::Closure(c) => match &**c {
            Closure::ConstNil => Ok(PValue::Nil),
            Closure::Lambda { param, body, gamma, delta } => {
                Ok(value_of(&eval_term(body, gamma, &delta.extend(param, a.clone()))?))
            }
        },
        PValue::Prim(p) => apply_prim(*p, a),
        other => stuck(format!("applied non-function `{other}`")),
    }
}

fn apply_prim(p: Prim, a: &PValue) -> R<PValue> {
    let pair = |a: &PValue| match a {
        PValue::With(x, y) | PValue::Smash(x, y) => Ok(((**x).clone(), (**y).clone())),
        other => stuck(format!("`{}` applied to `{other}`", p.name())),
    };
    match p {
        Prim::Or => {
            let (x, y) = pair(a)?;
            Ok(prelude::prim_or(&x, &y))
        }
        Prim::Plus => {
            let (x, y) = pair(a)?;
            Ok(prelude::prim_plus(&x, &y))
        }
        Prim::Times => {
            let (x, y) = pair(a)?;
            Ok(prelude::prim_times(&x, &y))
        }
        Prim::Exists | Prim::Sum => match a.as_table() {
            Some(t) => Ok(prelude::aggregate(
                if p == Prim::Exists { &prelude::ANY } else { &prelude::SUM },
                t,
            )),
            None => stuck(format!("`{}` applied to `{a}`", p.name())),
        },
        Prim::Eq => stuck("`=` is not point preserving"),
    }
}

/// A top-level value.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Pointed(PValue),
    Plain(DValue),
}

impl Value {
    pub fn as_plain(&self) -> DValue {
        match self {
            Value::Plain(d) => d.clone(),
            Value::Pointed(p) => DValue::Wrapped(p.clone()),
        }
    }
}

pub fn eval_body(body: &Body, gamma: &Env) -> R<Value> {
    match body {
        Body::Term(t) => Ok(Value::Pointed(value_of(&eval_term(t, gamma, &DeltaEnv::default())?))),
        Body::Expr(e) => Ok(Value::Plain(eval_expr(e, gamma)?)),
    }
}

/// Nest a flat table of arity `n` into `n` levels of unary tables, the
/// runtime shape of `A1 ~> ... ~> An ~> P`.
pub fn nest(flat: &Table) -> Table {
    if flat.arity() <= 1 {
        return flat.clone();
    }
    let mut out = Table::new(1);
    for (k, v) in flat.curry(1).iter() {
        let inner = nest(v.as_table().expect("curried"));
        out.insert(k.to_vec(), PValue::table(inner)).expect("arity 1");
    }
    out
}

/// Values of the definitions of a program, in order.
#[derive(Clone, Debug, Default)]
pub struct Machine {
    pub env: Env,
    pub values: Vec<(String, Type, Value)>,
}

impl Machine {
    pub fn get(&self, name: &str) -> Option<&Value> {
        self.values.iter().rev().find(|(n, _, _)| n == name).map(|(_, _, v)| v)
    }

    pub fn bind(&mut self, name: &str, ty: Type, v: Value) {
        self.env = self.env.extend(name, v.as_plain());
        self.values.push((name.to_string(), ty, v));
    }

    /// Bind a fact table given in flat form (one key column per `~>`).
    pub fn bind_facts(&mut self, name: &str, ty: &Type, flat: &Table) {
        self.bind(name, ty.clone(), Value::Pointed(PValue::table(nest(flat))));
    }

    pub fn define(&mut self, name: &str, ty: &Type, body: &Body) -> R<()> {
        let v = eval_body(body, &self.env)?;
        self.bind(name, ty.clone(), v);
        Ok(())
    }
}

/// Run every definition of `prog`, taking fact tables (flat form) from
/// `facts`. Atoms are bound to themselves. With `only`, definitions after
/// it are skipped.
pub fn eval_program(prog: &CheckedProgram, facts: &HashMap<String, Table>, only: Option<&str>) -> R<Machine> {
    let mut m = Machine::default();
    for item in &prog.items {
        match item {
            CheckedItem::Type { .. } => {}
            CheckedItem::Facts { name, ty, .. } => {
                let t = facts.get(name).ok_or_else(|| EvalError::MissingFacts(name.clone()))?;
                m.bind_facts(name, ty, t);
            }
            CheckedItem::Def { name, ty, body } => {
                m.define(name, ty, body)?;
                if only == Some(name.as_str()) {
                    break;
                }
            }
        }
    }
    Ok(m)
}
