//! Runtime values: pointed values, plain (set) values and finite tables.
//!
//! Every nil of every pointed type normalizes to [`PValue::Nil`]. Tables
//! never store a nil value, so a table's entry count is exactly the size of
//! its support.

use std::collections::BTreeMap;
use std::fmt;
use std::rc::Rc;

use thiserror::Error;

use crate::ast::{Prim, Type};
use crate::elab;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum KeyError {
    #[error("key has arity {found}, table expects {expected}")]
    Arity { expected: usize, found: usize },
    #[error("value `{0}` cannot be used as a key")]
    NotEqType(String),
}

/// Values of set types.
#[derive(Clone, Debug)]
pub enum DValue {
    Atom(Rc<str>),
    Unit,
    Prod(Box<DValue>, Box<DValue>),
    /// A pointed value viewed as a plain value.
    Wrapped(PValue),
    Fun(Rc<FunClosure>),
    /// `(=)`, unapplied.
    Eq,
}

/// Values of pointed types.
#[derive(Clone, Debug)]
pub enum PValue {
    Nil,
    Nat(u64),
    Just(Box<DValue>),
    With(Box<PValue>, Box<PValue>),
    Smash(Box<PValue>, Box<PValue>),
    Closure(Rc<Closure>),
    Prim(Prim),
    Table(Rc<Table>),
}

/// A point preserving function value.
#[derive(Debug)]
pub enum Closure {
    Lambda { param: String, body: Rc<elab::Term>, gamma: Env, delta: DeltaEnv },
    /// `fn _ => nil`, the nil of a `-o` type.
    ConstNil,
}

/// An ordinary function value.
#[derive(Debug)]
pub struct FunClosure {
    pub param: String,
    pub body: Rc<elab::Expr>,
    pub gamma: Env,
}

/// Persistent environment of plain values; extension is O(1).
#[derive(Clone, Debug, Default)]
pub struct Env(Option<Rc<EnvNode>>);

#[derive(Debug)]
pub struct EnvNode {
    name: String,
    value: DValue,
    next: Env,
}

impl Env {
    pub fn new() -> Self {
        Env(None)
    }

    pub fn extend(&self, name: &str, value: DValue) -> Env {
        Env(Some(Rc::new(EnvNode { name: name.to_string(), value, next: self.clone() })))
    }

    pub fn extend_all<'a>(&self, names: &[String], values: impl IntoIterator<Item = &'a DValue>) -> Env {
        names.iter().zip(values).fold(self.clone(), |env, (n, v)| env.extend(n, v.clone()))
    }

    pub fn get(&self, name: &str) -> Option<&DValue> {
        let mut cur = &self.0;
        while let Some(node) = cur {
            if node.name == name {
                return Some(&node.value);
            }
            cur = &node.next.0;
        }
        None
    }
}

/// Environment of relevant variables. Binding a nil collapses the whole
/// environment to `Nil`, the point of the smash product of the context.
#[derive(Clone, Debug)]
pub enum DeltaEnv {
    Nil,
    Bindings(Vec<(String, PValue)>),
}

impl Default for DeltaEnv {
    fn default() -> Self {
        DeltaEnv::Bindings(Vec::new())
    }
}

impl DeltaEnv {
    pub fn extend(&self, name: &str, value: PValue) -> DeltaEnv {
        match self {
            DeltaEnv::Nil => DeltaEnv::Nil,
            DeltaEnv::Bindings(_) if value.is_nil() => DeltaEnv::Nil,
            DeltaEnv::Bindings(b) => {
                let mut b = b.clone();
                b.push((name.to_string(), value.normalize()));
                DeltaEnv::Bindings(b)
            }
        }
    }

    pub fn is_nil(&self) -> bool {
        matches!(self, DeltaEnv::Nil)
    }

    pub fn get(&self, name: &str) -> Option<&PValue> {
        match self {
            DeltaEnv::Nil => None,
            DeltaEnv::Bindings(b) => b.iter().rev().find(|(n, _)| n == name).map(|(_, v)| v),
        }
    }
}

impl PValue {
    pub fn bool(b: bool) -> PValue {
        if b {
            PValue::Just(Box::new(DValue::Unit))
        } else {
            PValue::Nil
        }
    }

    pub fn nat(n: u64) -> PValue {
        if n == 0 {
            PValue::Nil
        } else {
            PValue::Nat(n)
        }
    }

    /// Direct product pair; nil exactly when both components are.
    pub fn with(p: PValue, q: PValue) -> PValue {
        if p.is_nil() && q.is_nil() {
            PValue::Nil
        } else {
            PValue::With(Box::new(p.normalize()), Box::new(q.normalize()))
        }
    }

    pub fn table(t: Table) -> PValue {
        if t.is_empty() {
            PValue::Nil
        } else {
            PValue::Table(Rc::new(t))
        }
    }

    /// Structural nil test. Lambda closures are never nil.
    pub fn is_nil(&self) -> bool {
        match self {
            PValue::Nil | PValue::Nat(0) => true,
            PValue::With(a, b) => a.is_nil() && b.is_nil(),
            PValue::Smash(a, b) => a.is_nil() || b.is_nil(),
            PValue::Table(t) => t.is_empty(),
            PValue::Closure(c) => matches!(**c, Closure::ConstNil),
            PValue::Nat(_) | PValue::Just(_) | PValue::Prim(_) => false,
        }
    }

    /// Collapse every nil, at any depth, to `Nil`.
    pub fn normalize(&self) -> PValue {
        if self.is_nil() {
            return PValue::Nil;
        }
        match self {
            PValue::With(a, b) => PValue::With(Box::new(a.normalize()), Box::new(b.normalize())),
            PValue::Smash(a, b) => PValue::Smash(Box::new(a.normalize()), Box::new(b.normalize())),
            PValue::Just(d) => PValue::Just(Box::new(d.normalize())),
            other => other.clone(),
        }
    }

    pub fn as_nat(&self) -> u64 {
        match self {
            PValue::Nat(n) => *n,
            _ => 0,
        }
    }

    pub fn as_table(&self) -> Option<&Table> {
        match self {
            PValue::Table(t) => Some(t),
            _ => None,
        }
    }

    fn encode(&self, out: &mut Vec<u8>) -> Result<(), KeyError> {
        match self.normalize() {
            PValue::Nil => out.push(0x10),
            PValue::Nat(n) => {
                out.push(0x11);
                out.extend_from_slice(&n.to_be_bytes());
            }
            PValue::Just(d) => {
                out.push(0x12);
                d.encode(out)?;
            }
            PValue::With(a, b) => {
                out.push(0x13);
                a.encode(out)?;
                b.encode(out)?;
            }
            PValue::Smash(a, b) => {
                out.push(0x14);
                a.encode(out)?;
                b.encode(out)?;
            }
            PValue::Table(t) => {
                out.push(0x15);
                out.extend_from_slice(&(t.len() as u32).to_be_bytes());
                for (enc, (_, v)) in &t.entries {
                    out.extend_from_slice(enc);
                    v.encode(out)?;
                }
            }
            v @ (PValue::Closure(_) | PValue::Prim(_)) => {
                return Err(KeyError::NotEqType(v.to_string()))
            }
        }
        Ok(())
    }
}

/// Canonical nil of a pointed type, in the per-constructor form.
pub fn nil_of(ty: &Type) -> PValue {
    match ty {
        Type::With(p, q) => PValue::With(Box::new(nil_of(p)), Box::new(nil_of(q))),
        Type::Lolli(..) => PValue::Closure(Rc::new(Closure::ConstNil)),
        Type::Fin(..) => PValue::Table(Rc::new(Table::new(1))),
        Type::Nat0 => PValue::Nat(0),
        _ => PValue::Nil,
    }
}

/// Smash pair; nil when either component is.
pub fn smash(p: PValue, q: PValue) -> PValue {
    if p.is_nil() || q.is_nil() {
        PValue::Nil
    } else {
        PValue::Smash(Box::new(p.normalize()), Box::new(q.normalize()))
    }
}

impl DValue {
    pub fn atom(name: &str) -> DValue {
        DValue::Atom(Rc::from(name))
    }

    pub fn pair(a: DValue, b: DValue) -> DValue {
        DValue::Prod(Box::new(a), Box::new(b))
    }

    pub fn normalize(&self) -> DValue {
        match self {
            DValue::Prod(a, b) => DValue::pair(a.normalize(), b.normalize()),
            DValue::Wrapped(p) => DValue::Wrapped(p.normalize()),
            other => other.clone(),
        }
    }

    /// Self-delimiting canonical encoding; concatenations of encodings are
    /// therefore unambiguous.
    pub fn encode(&self, out: &mut Vec<u8>) -> Result<(), KeyError> {
        match self {
            DValue::Atom(a) => {
                out.push(0x01);
                out.extend_from_slice(&(a.len() as u32).to_be_bytes());
                out.extend_from_slice(a.as_bytes());
            }
            DValue::Unit => out.push(0x02),
            DValue::Prod(a, b) => {
                out.push(0x03);
                a.encode(out)?;
                b.encode(out)?;
            }
            DValue::Wrapped(p) => {
                out.push(0x04);
                p.encode(out)?;
            }
            DValue::Fun(_) | DValue::Eq => return Err(KeyError::NotEqType(self.to_string())),
        }
        Ok(())
    }

    pub fn encoding(&self) -> Result<Vec<u8>, KeyError> {
        let mut out = Vec::new();
        self.encode(&mut out)?;
        Ok(out)
    }

    pub fn as_pointed(&self) -> Option<&PValue> {
        match self {
            DValue::Wrapped(p) => Some(p),
            _ => None,
        }
    }
}

pub fn encode_key(key: &[DValue]) -> Result<Vec<u8>, KeyError> {
    let mut out = Vec::new();
    for k in key {
        k.encode(&mut out)?;
    }
    Ok(out)
}

impl PartialEq for PValue {
    fn eq(&self, other: &PValue) -> bool {
        match (self.normalize(), other.normalize()) {
            (PValue::Nil, PValue::Nil) => true,
            (PValue::Nat(a), PValue::Nat(b)) => a == b,
            (PValue::Just(a), PValue::Just(b)) => a == b,
            (PValue::With(a, b), PValue::With(c, d)) => a == c && b == d,
            (PValue::Smash(a, b), PValue::Smash(c, d)) => a == c && b == d,
            (PValue::Table(a), PValue::Table(b)) => a == b,
            (PValue::Closure(a), PValue::Closure(b)) => Rc::ptr_eq(&a, &b),
            (PValue::Prim(a), PValue::Prim(b)) => a == b,
            _ => false,
        }
    }
}

impl PartialEq for DValue {
    fn eq(&self, other: &DValue) -> bool {
        match (self, other) {
            (DValue::Atom(a), DValue::Atom(b)) => a == b,
            (DValue::Unit, DValue::Unit) => true,
            (DValue::Prod(a, b), DValue::Prod(c, d)) => a == c && b == d,
            (DValue::Wrapped(a), DValue::Wrapped(b)) => a == b,
            (DValue::Fun(a), DValue::Fun(b)) => Rc::ptr_eq(a, b),
            (DValue::Eq, DValue::Eq) => true,
            _ => false,
        }
    }
}

/// A finitely supported function: keys are tuples of `arity` plain values,
/// iterated in canonical-encoding order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    arity: usize,
    entries: BTreeMap<Vec<u8>, (Vec<DValue>, PValue)>,
}

impl Table {
    pub fn new(arity: usize) -> Self {
        Table { arity, entries: BTreeMap::new() }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn check_arity(&self, key: &[DValue]) -> Result<(), KeyError> {
        if key.len() == self.arity {
            Ok(())
        } else {
            Err(KeyError::Arity { expected: self.arity, found: key.len() })
        }
    }

    /// Set `key` to `value`; a nil value removes the key.
    pub fn insert(&mut self, key: Vec<DValue>, value: PValue) -> Result<(), KeyError> {
        self.check_arity(&key)?;
        let enc = encode_key(&key)?;
        if value.is_nil() {
            self.entries.remove(&enc);
        } else {
            self.entries.insert(enc, (key, value.normalize()));
        }
        Ok(())
    }

    /// Value at `key`, nil when absent.
    pub fn lookup(&self, key: &[DValue]) -> Result<PValue, KeyError> {
        self.check_arity(key)?;
        let enc = encode_key(key)?;
        Ok(self.entries.get(&enc).map(|(_, v)| v.clone()).unwrap_or(PValue::Nil))
    }

    pub fn get(&self, key: &[DValue]) -> Option<&PValue> {
        encode_key(key).ok().and_then(|enc| self.entries.get(&enc)).map(|(_, v)| v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[DValue], &PValue)> {
        self.entries.values().map(|(k, v)| (k.as_slice(), v))
    }

    pub fn values(&self) -> impl Iterator<Item = &PValue> {
        self.entries.values().map(|(_, v)| v)
    }

    /// Split every key after position `split`, nesting the remainder in
    /// an inner table.
    pub fn curry(&self, split: usize) -> Table {
        assert!(split >= 1 && split < self.arity, "curry split {split} for arity {}", self.arity);
        let mut groups: BTreeMap<Vec<u8>, (Vec<DValue>, Table)> = BTreeMap::new();
        for (key, v) in self.iter() {
            let (outer, inner) = key.split_at(split);
            let enc = encode_key(outer).expect("stored keys encode");
            let entry = groups
                .entry(enc)
                .or_insert_with(|| (outer.to_vec(), Table::new(self.arity - split)));
            entry.1.insert(inner.to_vec(), v.clone()).expect("arity matches");
        }
        let mut out = Table::new(split);
        for (_, (outer, inner)) in groups {
            out.insert(outer, PValue::table(inner)).expect("arity matches");
        }
        out
    }

    /// Inverse of [`Table::curry`]: flatten one level of table-valued
    /// entries. `None` if some value is not a table.
    pub fn uncurry(&self) -> Option<Table> {
        let inner_arity = self.values().next().map(|v| v.as_table().map(Table::arity)).unwrap_or(Some(1))?;
        let mut out = Table::new(self.arity + inner_arity);
        for (outer, v) in self.iter() {
            let inner = v.as_table()?;
            if inner.arity != inner_arity {
                return None;
            }
            for (ik, iv) in inner.iter() {
                let mut key = outer.to_vec();
                key.extend_from_slice(ik);
                out.insert(key, iv.clone()).ok()?;
            }
        }
        Some(out)
    }

    /// Flatten nested tables until values are no longer tables.
    pub fn flatten(&self) -> Table {
        let mut cur = self.clone();
        while !cur.is_empty() && cur.values().all(|v| v.as_table().is_some()) {
            match cur.uncurry() {
                Some(t) => cur = t,
                None => break,
            }
        }
        cur
    }

    /// Turn a unary table keyed by pairs into a binary table.
    pub fn split_pair_keys(&self) -> Option<Table> {
        assert_eq!(self.arity, 1);
        let mut out = Table::new(2);
        for (k, v) in self.iter() {
            let DValue::Prod(a, b) = &k[0] else { return None };
            out.insert(vec![(**a).clone(), (**b).clone()], v.clone()).ok()?;
        }
        Some(out)
    }

    /// Inverse of [`Table::split_pair_keys`].
    pub fn join_pair_keys(&self) -> Table {
        assert_eq!(self.arity, 2);
        let mut out = Table::new(1);
        for (k, v) in self.iter() {
            out.insert(vec![DValue::pair(k[0].clone(), k[1].clone())], v.clone())
                .expect("pair keys encode");
        }
        out
    }
}

impl FromIterator<(Vec<DValue>, PValue)> for Table {
    /// Arity is taken from the first key (1 for an empty iterator).
    fn from_iter<I: IntoIterator<Item = (Vec<DValue>, PValue)>>(iter: I) -> Self {
        let mut iter = iter.into_iter().peekable();
        let arity = iter.peek().map(|(k, _)| k.len()).unwrap_or(1);
        let mut t = Table::new(arity);
        for (k, v) in iter {
            t.insert(k, v).expect("consistent key arity");
        }
        t
    }
}

impl fmt::Display for DValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DValue::Atom(a) => f.write_str(a),
            DValue::Unit => f.write_str("()"),
            DValue::Prod(a, b) => write!(f, "({a}, {b})"),
            DValue::Wrapped(p) => write!(f, "{p}"),
            DValue::Fun(c) => write!(f, "<fn {}>", c.param),
            DValue::Eq => f.write_str("(=)"),
        }
    }
}

impl fmt::Display for PValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PValue::Nil => f.write_str("nil"),
            PValue::Nat(n) => write!(f, "{n}"),
            PValue::Just(d) if matches!(**d, DValue::Unit) => f.write_str("true"),
            PValue::Just(d) => write!(f, "just {d}"),
            PValue::With(a, b) => write!(f, "<{a}, {b}>"),
            PValue::Smash(a, b) => write!(f, "({a}, {b})"),
            PValue::Closure(c) => match &**c {
                Closure::Lambda { param, .. } => write!(f, "<fn {param}>"),
                Closure::ConstNil => f.write_str("<fn _ => nil>"),
            },
            PValue::Prim(p) => write!(f, "({})", p.name()),
            PValue::Table(t) => write!(f, "{t}"),
        }
    }
}

impl fmt::Display for Table {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            let ks: Vec<String> = k.iter().map(|d| d.to_string()).collect();
            write!(f, "{} => {v}", ks.join(" "))?;
        }
        f.write_str("}")
    }
}

/// Render a pointed value, printing nil in the form its type suggests.
pub fn show_pointed(v: &PValue, ty: &Type) -> String {
    if v.is_nil() {
        return match ty {
            Type::Maybe(a) if **a == Type::Unit => "false".into(),
            Type::Nat0 => "0".into(),
            Type::Fin(..) => "{}".into(),
            _ => "nil".into(),
        };
    }
    v.to_string()
}
