//! The `fslang` command line: `check`, `run` and `repl`.

mod io;
mod repl;

pub use io::{export_value, load_facts, read_facts, ExportError, FactError, Format};
pub use repl::repl;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::json;
use thiserror::Error;

use crate::ast::{Decl, Program, Type};
use crate::eval::{EvalError, Machine, Value};
use crate::parser::{parse_program, ParseError};
use crate::typecheck::{check_program_full, CheckedProgram, TypeError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_TYPE: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_FACTS: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "fslang", version, about = "Check and run finitely supported functional programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Typecheck source files.
    Check {
        /// Emit diagnostics as JSON.
        #[arg(long)]
        json: bool,
        /// Show the failing rule and the usage report at the failure.
        #[arg(long)]
        explain: bool,
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Evaluate definitions against fact files and export their tables.
    Run {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Directory fact sources are resolved against (default: the
        /// directory of the first file).
        #[arg(long)]
        facts: Option<PathBuf>,
        /// Definitions to export (default: every first-order definition).
        #[arg(long)]
        eval: Vec<String>,
        /// Output file, or directory when exporting several definitions.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Uncurry nested finite maps into flat relations.
        #[arg(long)]
        flatten: bool,
    },
    /// Interactive session; files given are loaded first.
    Repl {
        files: Vec<PathBuf>,
        #[arg(long)]
        facts: Option<PathBuf>,
    },
}

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Type(#[from] TypeError),
    #[error("{0}")]
    Facts(#[from] FactError),
    #[error("{0}")]
    Eval(#[from] EvalError),
    #[error("{0}")]
    Export(#[from] ExportError),
    #[error("{0}")]
    Usage(String),
}

impl SessionError {
    pub fn exit_code(&self) -> i32 {
        match self {
            SessionError::Type(_) => EXIT_TYPE,
            SessionError::Facts(f) if f.is_schema() => EXIT_FACTS,
            SessionError::Export(_) => EXIT_FACTS,
            _ => EXIT_IO,
        }
    }
}

fn read_file(path: &Path) -> Result<String, SessionError> {
    std::fs::read_to_string(path).map_err(|source| SessionError::Io { path: path.display().to_string(), source })
}

/// A checked program together with the values of its declarations.
#[derive(Default)]
pub struct Session {
    pub prog: CheckedProgram,
    pub machine: Machine,
}

impl Session {
    /// Check, load and evaluate one declaration; on failure the session is
    /// unchanged.
    pub fn add(&mut self, decl: &Decl, facts_dir: &Path) -> Result<(), SessionError> {
        let mut prog = self.prog.clone();
        prog.add(decl)?;
        match decl {
            Decl::Type { .. } => {}
            Decl::Facts { name, ty, source, .. } => {
                let table = load_facts(&facts_dir.join(source), ty, &prog.globals)?;
                self.machine.bind_facts(name, ty, &table);
            }
            Decl::Def { name, ty, .. } => {
                let (_, body) = prog.def(name).expect("just added");
                self.machine.define(name, ty, body)?;
            }
        }
        self.prog = prog;
        Ok(())
    }

    pub fn load_program(&mut self, p: &Program, facts_dir: &Path) -> Result<(), SessionError> {
        p.decls.iter().try_for_each(|d| self.add(d, facts_dir))
    }

    pub fn load_file(&mut self, path: &Path, facts_dir: Option<&Path>) -> Result<(), SessionError> {
        let prog = parse_program(&read_file(path)?)?;
        let dir = facts_dir.map(Path::to_path_buf).unwrap_or_else(|| parent_dir(path));
        self.load_program(&prog, &dir)
    }
}

fn parent_dir(path: &Path) -> PathBuf {
    path.parent().filter(|p| !p.as_os_str().is_empty()).map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."))
}

/// Whether a definition's value can be written as a table.
fn exportable(ty: &Type) -> bool {
    match ty {
        Type::Forget(p) => exportable(p),
        t => t.is_pointed() && t.is_first_order(),
    }
}

fn pointed_view(v: &Value, ty: &Type) -> Option<(crate::runtime::PValue, Type)> {
    match (v, ty) {
        (Value::Pointed(p), _) => Some((p.clone(), ty.clone())),
        (Value::Plain(crate::runtime::DValue::Wrapped(p)), Type::Forget(inner)) => Some((p.clone(), (**inner).clone())),
        _ => None,
    }
}

fn check_cmd(files: &[PathBuf], json_out: bool, explain: bool, out: &mut dyn Write) -> i32 {
    let mut code = EXIT_OK;
    let mut reports = Vec::new();
    for f in files {
        let name = f.display().to_string();
        let result = read_file(f).and_then(|src| Ok(parse_program(&src)?)).and_then(|p| Ok(check_program_full(&p)?));
        match result {
            Ok(prog) => {
                let sigs: Vec<(String, String)> = prog.defs().map(|(n, t, _)| (n.to_string(), t.to_string())).collect();
                if json_out {
                    let sigs: Vec<_> = sigs.iter().map(|(n, t)| json!({"name": n, "type": t})).collect();
                    reports.push(json!({"file": name, "ok": true, "signatures": sigs}));
                } else {
                    let _ = writeln!(out, "{name}: ok");
                    for (n, t) in &sigs {
                        let _ = writeln!(out, "  {n} : {t}");
                    }
                }
            }
            Err(e) => {
                code = code.max(e.exit_code());
                if json_out {
                    let error = match &e {
                        SessionError::Type(te) => json!({
                            "kind": te.kind,
                            "rule": te.rule,
                            "span": te.span.to_string(),
                            "message": te.detail,
                            "usage": te.usage.as_ref().map(|u| u.to_string()),
                        }),
                        other => json!({"kind": "ParseError", "message": other.to_string()}),
                    };
                    reports.push(json!({"file": name, "ok": false, "error": error}));
                } else {
                    match &e {
                        SessionError::Type(te) => {
                            let _ = writeln!(out, "{name}:{}: {}: {}", te.span, te.kind, te.detail);
                            if explain {
                                let _ = writeln!(out, "  rule: {}", te.rule);
                                if let Some(u) = &te.usage {
                                    let _ = writeln!(out, "  usage: {u}");
                                }
                            }
                        }
                        SessionError::Io { .. } => {
                            let _ = writeln!(out, "{e}");
                        }
                        other => {
                            let _ = writeln!(out, "{name}:{other}");
                        }
                    }
                }
            }
        }
    }
    if json_out {
        let _ = writeln!(out, "{}", serde_json::to_string_pretty(&reports).expect("json"));
    }
    code
}

struct RunArgs<'a> {
    files: &'a [PathBuf],
    facts: Option<&'a Path>,
    eval: &'a [String],
    out: Option<&'a Path>,
    format: Format,
    flatten: bool,
}

fn run_cmd(a: RunArgs<'_>, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), SessionError> {
    let mut program = Program::default();
    for f in a.files {
        program.decls.extend(parse_program(&read_file(f)?)?.decls);
    }
    // Report type errors before touching any fact file.
    let checked = check_program_full(&program)?;
    let targets: Vec<String> = if a.eval.is_empty() {
        checked.defs().filter(|(_, t, _)| exportable(t)).map(|(n, _, _)| n.to_string()).collect()
    } else {
        for n in a.eval {
            let Some((ty, _)) = checked.def(n) else { return Err(SessionError::Usage(format!("no definition named `{n}`"))) };
            if !exportable(ty) {
                return Err(SessionError::Usage(format!("`{n} : {ty}` has no table to export")));
            }
        }
        a.eval.to_vec()
    };
    let dir = a.facts.map(Path::to_path_buf).unwrap_or_else(|| parent_dir(&a.files[0]));
    let mut session = Session::default();
    let mut timings = Vec::new();
    for d in &program.decls {
        let start = Instant::now();
        session.add(d, &dir)?;
        timings.push((d.name().to_string(), start.elapsed()));
    }
    let several = targets.len() > 1;
    if let (Some(o), true) = (a.out, several) {
        std::fs::create_dir_all(o).map_err(|source| SessionError::Io { path: o.display().to_string(), source })?;
    }
    for name in &targets {
        let (ty, _) = session.prog.def(name).expect("checked");
        let v = session.machine.get(name).expect("evaluated");
        let (p, pty) = pointed_view(v, ty).ok_or_else(|| SessionError::Usage(format!("`{name}` has no table to export")))?;
        let bytes = export_value(&p, &pty, a.format, a.flatten)?;
        let rows = bytes.iter().filter(|b| **b == b'\n').count() - usize::from(a.format == Format::Csv);
        let elapsed = timings.iter().find(|(n, _)| n == name).map(|(_, t)| *t).unwrap_or_default();
        let _ = writeln!(err, "{name} : {ty}  rows={rows}  time={:.3}ms", elapsed.as_secs_f64() * 1e3);
        match a.out {
            Some(o) => {
                let path = if several { o.join(format!("{name}.{}", a.format.extension())) } else { o.to_path_buf() };
                std::fs::write(&path, &bytes).map_err(|source| SessionError::Io { path: path.display().to_string(), source })?;
            }
            None => {
                if several {
                    let _ = writeln!(out, "# {name}");
                }
                let _ = out.write_all(&bytes);
            }
        }
    }
    let _ = writeln!(err, "status: ok");
    Ok(())
}

/// Run the command line with explicit arguments and output streams;
/// returns the exit code.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { EXIT_IO } else { EXIT_OK };
        }
    };
    match cli.command {
        Command::Check { json, explain, files } => check_cmd(&files, json, explain, out),
        Command::Run { files, facts, eval, out: dest, format, flatten } => {
            let args = RunArgs { files: &files, facts: facts.as_deref(), eval: &eval, out: dest.as_deref(), format, flatten };
            match run_cmd(args, out, err) {
                Ok(()) => EXIT_OK,
                Err(e) => {
                    let _ = writeln!(err, "error: {e}");
                    let _ = writeln!(err, "status: failed");
                    e.exit_code()
                }
            }
        }
        Command::Repl { files, facts } => {
            let mut session = Session::default();
            for f in &files {
                if let Err(e) = session.load_file(f, facts.as_deref()) {
                    let _ = writeln!(err, "error: {e}");
                    return e.exit_code();
                }
            }
            let stdin = std::io::stdin();
            repl(stdin.lock(), out, session, facts.unwrap_or_else(|| PathBuf::from(".")))
        }
    }
}

pub fn main() -> std::process::ExitCode {
    let code = run_cli(std::env::args_os(), &mut std::io::stdout(), &mut std::io::stderr());
    std::process::ExitCode::from(code as u8)
}
