use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use crate::ast::Type;
use crate::elab::{Body, TermKind, UsageReport};
use crate::eval::{eval_body, Value};
use crate::parser::{parse_program, parse_query};
use crate::runtime::{show_pointed, DValue};
use crate::typecheck::{check_query, CheckedItem};

use super::{load_facts, Session, SessionError};

const HELP: &str = "\
  def name : type = term;   add a definition (also type/facts declarations)
  term [: type]             evaluate a closed term
  :t term [: type]          show the checked type and usage report
  :load file                load a source file
  :facts name file          reload the fact table `name` from a CSV file
  :quit                     leave";

fn show_value(v: &Value, ty: &Type) -> String {
    match (v, ty) {
        (Value::Pointed(p), _) => show_pointed(p, ty),
        (Value::Plain(DValue::Wrapped(p)), Type::Forget(inner)) => show_pointed(p, inner),
        (Value::Plain(d), _) => d.to_string(),
    }
}

fn root_usage(body: &Body) -> (UsageReport, Option<UsageReport>) {
    match body {
        Body::Term(t) => {
            let inner = match &t.kind {
                TermKind::LamLolli(_, b) => Some(b.usage.clone()),
                TermKind::LamFin { body, .. } => Some(body.usage.clone()),
                _ => None,
            };
            (t.usage.clone(), inner)
        }
        Body::Expr(_) => (UsageReport::empty(), None),
    }
}

fn step(line: &str, session: &mut Session, facts_dir: &Path, out: &mut dyn Write) -> Result<bool, SessionError> {
    if line == ":quit" || line == ":q" {
        return Ok(false);
    }
    if line == ":help" || line == ":h" {
        writeln!(out, "{HELP}").ok();
    } else if let Some(rest) = line.strip_prefix(":t ") {
        let (t, ann) = parse_query(rest)?;
        let (body, ty) = check_query(&session.prog.globals, &t, ann.as_ref())?;
        let (usage, inner) = root_usage(&body);
        writeln!(out, "{}", ty).ok();
        writeln!(out, "  usage: {usage}").ok();
        if let Some(u) = inner {
            writeln!(out, "  body usage: {u}").ok();
        }
    } else if let Some(path) = line.strip_prefix(":load ") {
        let before = session.prog.defs().count();
        session.load_file(Path::new(path.trim()), None)?;
        writeln!(out, "loaded {} definitions", session.prog.defs().count() - before).ok();
    } else if let Some(rest) = line.strip_prefix(":facts ") {
        let mut parts = rest.split_whitespace();
        let (Some(name), Some(path), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(SessionError::Usage("usage: :facts name file".into()));
        };
        let ty = session
            .prog
            .items
            .iter()
            .find_map(|i| match i {
                CheckedItem::Facts { name: n, ty, .. } if n == name => Some(ty.clone()),
                _ => None,
            })
            .ok_or_else(|| SessionError::Usage(format!("no fact table named `{name}`")))?;
        let table = load_facts(Path::new(path), &ty, &session.prog.globals)?;
        session.machine.bind_facts(name, &ty, &table);
        writeln!(out, "{name}: {} rows", table.len()).ok();
    } else if ["def ", "type ", "facts "].iter().any(|k| line.starts_with(k)) {
        let src = if line.ends_with(';') { line.to_string() } else { format!("{line};") };
        let prog = parse_program(&src)?;
        session.load_program(&prog, facts_dir)?;
        for d in &prog.decls {
            if let Some((ty, _)) = session.prog.def(d.name()) {
                writeln!(out, "{} : {ty}", d.name()).ok();
            }
        }
    } else {
        let (t, ann) = parse_query(line)?;
        let (body, ty) = check_query(&session.prog.globals, &t, ann.as_ref())?;
        let v = eval_body(&body, &session.machine.env)?;
        writeln!(out, "{}", show_value(&v, &ty)).ok();
    }
    Ok(true)
}

/// Read-eval-print over any line source; diagnostics do not end the
/// session.
pub fn repl(input: impl BufRead, out: &mut dyn Write, mut session: Session, facts_dir: PathBuf) -> i32 {
    let mut lines = input.lines();
    loop {
        write!(out, "> ").ok();
        out.flush().ok();
        let Some(Ok(line)) = lines.next() else { return 0 };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        match step(line, &mut session, &facts_dir, out) {
            Ok(true) => {}
            Ok(false) => return 0,
            Err(e) => {
                writeln!(out, "error: {e}").ok();
            }
        }
    }
}
