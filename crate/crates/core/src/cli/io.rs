//! Fact files in, tables out.
//!
//! Fact files are CSV with a header row: one column per key component
//! (pair keys spread over several columns), then a value column. Boolean
//! relations may omit the value column, in which case every row is true.

use std::collections::HashSet;
use std::path::Path;

use serde_json::{json, Value as Json};
use thiserror::Error;

use crate::ast::Type;
use crate::runtime::{encode_key, show_pointed, DValue, PValue, Table};
use crate::typecheck::Globals;

#[derive(Debug, Error)]
pub enum FactError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {msg}")]
    Schema { path: String, msg: String },
}

impl FactError {
    pub fn is_schema(&self) -> bool {
        matches!(self, FactError::Schema { .. })
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ExportError {
    #[error("cannot export {0}")]
    Unprintable(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Jsonl,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Jsonl => "jsonl",
        }
    }
}

/// The scalar column types a key decomposes into.
fn leaves<'a>(ty: &'a Type, out: &mut Vec<&'a Type>) -> Result<(), String> {
    match ty {
        Type::Prod(a, b) => {
            leaves(a, out)?;
            leaves(b, out)
        }
        Type::Base(_) | Type::Unit => {
            out.push(ty);
            Ok(())
        }
        Type::Forget(p) if matches!(**p, Type::Nat0) || **p == Type::bool() => {
            out.push(ty);
            Ok(())
        }
        other => Err(format!("unsupported key type `{other}`")),
    }
}

fn parse_leaf(s: &str, ty: &Type, globals: &Globals) -> Result<DValue, String> {
    match ty {
        Type::Base(name) => {
            if s.is_empty() {
                return Err(format!("empty `{name}` value"));
            }
            match globals.atoms.get(s) {
                Some(t) if t != name => Err(format!("`{s}` is a `{t}`, not a `{name}`")),
                None if globals.atoms.values().any(|t| t == name) => {
                    Err(format!("`{s}` is not one of the declared atoms of `{name}`"))
                }
                _ => Ok(DValue::atom(s)),
            }
        }
        Type::Unit if s == "()" => Ok(DValue::Unit),
        Type::Forget(p) => match (&**p, s) {
            (Type::Nat0, _) => s.parse::<u64>().map(|n| DValue::Wrapped(PValue::nat(n))).map_err(|_| format!("`{s}` is not a natural number")),
            (_, "true") => Ok(DValue::Wrapped(PValue::bool(true))),
            (_, "false") => Ok(DValue::Wrapped(PValue::bool(false))),
            _ => Err(format!("`{s}` is not a boolean")),
        },
        _ => Err(format!("`{s}` is not a `{ty}`")),
    }
}

fn build(ty: &Type, cells: &mut impl Iterator<Item = DValue>) -> DValue {
    match ty {
        Type::Prod(a, b) => {
            let x = build(a, cells);
            DValue::pair(x, build(b, cells))
        }
        _ => cells.next().expect("cell count checked"),
    }
}

fn parse_value(s: &str, ty: &Type, globals: &Globals) -> Result<PValue, String> {
    match ty {
        Type::Nat0 => s.parse::<u64>().map(PValue::nat).map_err(|_| format!("`{s}` is not a natural number")),
        t if *t == Type::bool() => match s {
            "true" => Ok(PValue::bool(true)),
            "false" => Ok(PValue::Nil),
            _ => Err(format!("`{s}` is not a boolean")),
        },
        Type::Maybe(a) => {
            let mut ls = Vec::new();
            leaves(a, &mut ls)?;
            if ls.len() != 1 {
                return Err(format!("unsupported value type `{ty}`"));
            }
            Ok(PValue::Just(Box::new(parse_leaf(s, a, globals)?)))
        }
        _ => Err(format!("unsupported value type `{ty}`")),
    }
}

/// Read a fact table of type `ty` (a chain of `~>`) into flat form: one
/// key position per `~>`.
pub fn read_facts(text: &str, ty: &Type, globals: &Globals, origin: &str) -> Result<Table, FactError> {
    let schema = |msg: String| FactError::Schema { path: origin.to_string(), msg };
    let (keys, val) = ty.fin_chain();
    if keys.is_empty() {
        return Err(schema(format!("`{ty}` is not a finite-map type")));
    }
    let mut cols = Vec::new();
    for k in &keys {
        leaves(k, &mut cols).map_err(schema)?;
    }
    let optional_value = *val == Type::bool();
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let width = rdr.headers().map_err(|e| schema(e.to_string()))?.len();
    let has_value = match width {
        w if w == cols.len() + 1 => true,
        w if w == cols.len() && optional_value => false,
        w => return Err(schema(format!("header has {w} columns, `{ty}` needs {}", cols.len() + 1))),
    };
    let mut table = Table::new(keys.len());
    let mut seen = HashSet::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| schema(format!("line {line}: {e}")))?;
        if rec.len() != width {
            return Err(schema(format!("line {line}: expected {width} columns, found {}", rec.len())));
        }
        let cells: Vec<DValue> = cols
            .iter()
            .zip(rec.iter())
            .map(|(t, s)| parse_leaf(s, t, globals))
            .collect::<Result<_, _>>()
            .map_err(|m| schema(format!("line {line}: {m}")))?;
        let mut it = cells.into_iter();
        let key: Vec<DValue> = keys.iter().map(|k| build(k, &mut it)).collect();
        let value = if has_value {
            parse_value(&rec[width - 1], val, globals).map_err(|m| schema(format!("line {line}: {m}")))?
        } else {
            PValue::bool(true)
        };
        let enc = encode_key(&key).map_err(|e| schema(format!("line {line}: {e}")))?;
        if !seen.insert(enc) {
            return Err(schema(format!("line {line}: duplicate key")));
        }
        table.insert(key, value).map_err(|e| schema(format!("line {line}: {e}")))?;
    }
    Ok(table)
}

pub fn load_facts(path: &Path, ty: &Type, globals: &Globals) -> Result<Table, FactError> {
    let origin = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| FactError::Io { path: origin.clone(), source })?;
    read_facts(&text, ty, globals, &origin)
}

fn key_cells(d: &DValue, out: &mut Vec<DValue>) {
    match d {
        DValue::Prod(a, b) => {
            key_cells(a, out);
            key_cells(b, out);
        }
        other => out.push(other.clone()),
    }
}

fn cell_text(d: &DValue) -> String {
    match d {
        DValue::Wrapped(p) if p.is_nil() => "0".into(),
        other => other.to_string(),
    }
}

fn cell_json(d: &DValue) -> Json {
    match d {
        DValue::Wrapped(PValue::Nat(n)) => json!(n),
        DValue::Wrapped(PValue::Just(u)) if matches!(**u, DValue::Unit) => json!(true),
        other => json!(cell_text(other)),
    }
}

fn check_printable(v: &PValue) -> Result<(), ExportError> {
    match v {
        PValue::Closure(_) | PValue::Prim(_) => Err(ExportError::Unprintable("a function value".into())),
        PValue::Table(_) => Err(ExportError::Unprintable("a nested finite map (try --flatten)".into())),
        PValue::With(a, b) | PValue::Smash(a, b) => {
            check_printable(a)?;
            check_printable(b)
        }
        PValue::Just(d) => match &**d {
            DValue::Fun(_) | DValue::Eq => Err(ExportError::Unprintable("a function value".into())),
            DValue::Wrapped(p) => check_printable(p),
            _ => Ok(()),
        },
        _ => Ok(()),
    }
}

fn value_json(v: &PValue, ty: &Type) -> Json {
    match v {
        PValue::Nat(n) => json!(n),
        _ if v.is_nil() && *ty == Type::bool() => json!(false),
        _ if v.is_nil() && *ty == Type::Nat0 => json!(0),
        PValue::Just(d) if matches!(**d, DValue::Unit) => json!(true),
        _ => json!(show_pointed(v, ty)),
    }
}

type Rows = Vec<(Vec<DValue>, PValue)>;

/// Rows of a value of type `ty`: key cells and value.
fn rows(v: &PValue, ty: &Type, flatten: bool) -> Result<(Rows, Type, usize), ExportError> {
    let (keys, val) = ty.fin_chain();
    if keys.is_empty() {
        check_printable(v)?;
        return Ok((vec![(Vec::new(), v.clone())], ty.clone(), 0));
    }
    let empty = Table::new(1);
    let t = v.as_table().unwrap_or(&empty);
    let (t, key_tys, vty) = if flatten {
        (t.flatten(), keys, val.clone())
    } else {
        let rest = match ty {
            Type::Fin(_, p) => (**p).clone(),
            _ => unreachable!(),
        };
        (t.clone(), keys[..1].to_vec(), rest)
    };
    let mut cols = Vec::new();
    for k in &key_tys {
        leaves(k, &mut cols).map_err(ExportError::Unprintable)?;
    }
    let mut out = Vec::new();
    for (k, v) in t.iter() {
        check_printable(v)?;
        let mut cells = Vec::new();
        for d in k {
            key_cells(d, &mut cells);
        }
        out.push((cells, v.clone()));
    }
    Ok((out, vty, cols.len()))
}

/// Render a pointed value for export. Finite maps become one row per
/// support entry, in canonical key order.
pub fn export_value(v: &PValue, ty: &Type, format: Format, flatten: bool) -> Result<Vec<u8>, ExportError> {
    let (rows, vty, width) = rows(v, ty, flatten)?;
    let mut out = Vec::new();
    match format {
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut out);
            let mut header: Vec<String> = (0..width).map(|i| format!("k{i}")).collect();
            header.push("value".into());
            w.write_record(&header).expect("in-memory write");
            for (cells, v) in &rows {
                let mut rec: Vec<String> = cells.iter().map(cell_text).collect();
                rec.push(show_pointed(v, &vty));
                w.write_record(&rec).expect("in-memory write");
            }
            w.flush().expect("in-memory write");
        }
        Format::Jsonl => {
            for (cells, v) in &rows {
                let obj = json!({ "key": cells.iter().map(cell_json).collect::<Vec<_>>(), "value": value_json(v, &vty) });
                out.extend_from_slice(obj.to_string().as_bytes());
                out.push(b'\n');
            }
        }
    }
    Ok(out)
}
