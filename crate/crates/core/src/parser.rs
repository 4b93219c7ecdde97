//! Concrete syntax.
//!
//! ```text
//! type person = john, mary;
//! facts follows : person ~> person ~> bool from "follows.csv";
//! def mutuals : person ~> person ~> bool =
//!   fn x => fn y => follows x y and follows y x;
//! ```
//!
//! Types: `->` (functions), `-o` (point preserving maps), `~>` (finite
//! maps), `*` (set product), `&` (direct product), `@` (smash product),
//! `maybe A`, `nat`, `bool`, `1`. Arrows are right associative and bind
//! loosest. A pointed type written where a set type is expected is wrapped
//! in `Forget` automatically.
//!
//! Term operators from loosest to tightest: `or`, `and`, `when`, `=`, `+`,
//! `*`, application, `pi1`/`pi2`/`just`. `fn`, `let` and `if` bodies extend
//! as far right as possible. Comments run from `--` to end of line.

use std::fmt;

use thiserror::Error;

use crate::ast::{Decl, Prim, Program, Span, Term, TermKind, Type};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{span}: {message}")]
pub struct ParseError {
    pub span: Span,
    pub message: String,
    pub expected: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Num(u64),
    Str(String),
    Sym(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Num(n) => write!(f, "`{n}`"),
            Tok::Str(s) => write!(f, "{s:?}"),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

const SYMBOLS: &[&str] = &[
    "=>", "->", "-o", "~>", "(", ")", "<", ">", ",", ";", ":", "=", "&", "@", "*", "+", "_",
];

const KEYWORDS: &[&str] = &[
    "type", "facts", "from", "def", "fn", "let", "in", "just", "if", "then", "else", "nil",
    "true", "false", "and", "or", "when", "pi1", "pi2", "maybe", "nat", "bool", "unit",
];

fn lex(src: &str) -> Result<Vec<(Tok, Span)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'-') {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        let (sl, sc) = (line, col);
        let is_ident_char = |c: char| c.is_alphanumeric() || c == '_' || c == '\'';
        if c.is_alphabetic() || (c == '_' && chars.get(i + 1).is_some_and(|c| is_ident_char(*c))) {
            let start = i;
            while i < chars.len() && is_ident_char(chars[i]) {
                bump!();
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), Span::new(sl, sc, line, col)));
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                bump!();
            }
            let text: String = chars[start..i].iter().collect();
            let span = Span::new(sl, sc, line, col);
            let n = text.parse().map_err(|_| ParseError {
                span,
                message: format!("integer literal `{text}` out of range"),
                expected: vec![],
            })?;
            out.push((Tok::Num(n), span));
        } else if c == '"' {
            bump!();
            let mut s = String::new();
            loop {
                match chars.get(i) {
                    None => {
                        return Err(ParseError {
                            span: Span::new(sl, sc, line, col),
                            message: "unterminated string literal".into(),
                            expected: vec!["`\"`".into()],
                        })
                    }
                    Some('"') => {
                        bump!();
                        break;
                    }
                    Some(ch) => {
                        s.push(*ch);
                        bump!();
                    }
                }
            }
            out.push((Tok::Str(s), Span::new(sl, sc, line, col)));
        } else {
            let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
            let Some(sym) = SYMBOLS.iter().find(|s| rest.starts_with(**s)) else {
                return Err(ParseError {
                    span: Span::new(sl, sc, sl, sc + 1),
                    message: format!("unexpected character `{c}`"),
                    expected: vec![],
                });
            };
            for _ in 0..sym.len() {
                bump!();
            }
            out.push((Tok::Sym(sym), Span::new(sl, sc, line, col)));
        }
    }
    out.push((Tok::Eof, Span::new(line, col, line, col)));
    Ok(out)
}

/// The sugar of the surface language, expanded while parsing.
pub mod desugar {
    use crate::ast::{Prim, Span, Term, TermKind};

    /// Supply of generated binder names `_1`, `_2`, ... Identifiers of
    /// that shape are reserved.
    #[derive(Debug, Default)]
    pub struct Fresh(u32);

    impl Fresh {
        pub fn name(&mut self) -> String {
            self.0 += 1;
            format!("_{}", self.0)
        }
    }

    fn mk(kind: TermKind, span: Span) -> Term {
        Term::new(kind, span)
    }

    /// `true` ⇒ `just ()`
    pub fn true_(span: Span) -> Term {
        mk(TermKind::Just(Box::new(mk(TermKind::Unit, span))), span)
    }

    /// `false` ⇒ `nil`
    pub fn false_(span: Span) -> Term {
        mk(TermKind::Nil, span)
    }

    /// `t and u` ⇒ `let just _ = t in u`
    pub fn and(fresh: &mut Fresh, t: Term, u: Term) -> Term {
        let span = t.span.to(u.span);
        mk(TermKind::LetJust(fresh.name(), Box::new(t), Box::new(u)), span)
    }

    /// `let x = t in u` ⇒ `let (x, y) = (t, true) in (y and u)`
    pub fn let_(fresh: &mut Fresh, x: String, t: Term, u: Term, span: Span) -> Term {
        let y = fresh.name();
        let ts = t.span;
        let pair = mk(TermKind::Pair(Box::new(t), Box::new(true_(ts))), ts);
        let body = and(fresh, mk(TermKind::Var(y.clone()), u.span), u);
        mk(TermKind::LetPair(x, y, Box::new(pair), Box::new(body)), span)
    }

    /// `t when u` ⇒ `let x = t in (u and x)`
    pub fn when(fresh: &mut Fresh, t: Term, u: Term) -> Term {
        let span = t.span.to(u.span);
        let x = fresh.name();
        let us = u.span;
        let body = and(fresh, u, mk(TermKind::Var(x.clone()), us));
        let_(fresh, x, t, body, span)
    }

    fn app(f: Term, a: Term) -> Term {
        let span = f.span.to(a.span);
        mk(TermKind::App(Box::new(f), Box::new(a)), span)
    }

    /// `t or u` ⇒ `(or) <t, u>`
    pub fn or(t: Term, u: Term) -> Term {
        binary_with(Prim::Or, t, u)
    }

    /// `t + u` ⇒ `(+) <t, u>`
    pub fn plus(t: Term, u: Term) -> Term {
        binary_with(Prim::Plus, t, u)
    }

    /// `t * u` ⇒ `(*) (t, u)`
    pub fn times(t: Term, u: Term) -> Term {
        let span = t.span.to(u.span);
        let pair = mk(TermKind::Pair(Box::new(t), Box::new(u)), span);
        app(mk(TermKind::Prim(Prim::Times), span), pair)
    }

    /// `e = u` ⇒ `(=) e u`
    pub fn eq(t: Term, u: Term) -> Term {
        let span = t.span;
        app(app(mk(TermKind::Prim(Prim::Eq), span), t), u)
    }

    fn binary_with(p: Prim, t: Term, u: Term) -> Term {
        let span = t.span.to(u.span);
        let pair = mk(TermKind::WithPair(Box::new(t), Box::new(u)), span);
        app(mk(TermKind::Prim(p), span), pair)
    }
}

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
    fresh: desugar::Fresh,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn new(src: &str) -> PResult<Self> {
        Ok(Parser { toks: lex(src)?, pos: 0, fresh: desugar::Fresh::default() })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn advance(&mut self) -> (Tok, Span) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == k)
    }

    fn error<T>(&self, expected: &[&str]) -> PResult<T> {
        Err(ParseError {
            span: self.span(),
            message: format!(
                "unexpected {}, expected {}",
                self.peek(),
                expected.join(" or ")
            ),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        })
    }

    fn expect_sym(&mut self, s: &'static str) -> PResult<Span> {
        if self.is_sym(s) {
            Ok(self.advance().1)
        } else {
            self.error(&[&format!("`{s}`")])
        }
    }

    fn expect_kw(&mut self, k: &str) -> PResult<Span> {
        if self.is_kw(k) {
            Ok(self.advance().1)
        } else {
            self.error(&[&format!("`{k}`")])
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.advance();
                Ok(s)
            }
            _ => self.error(&["identifier"]),
        }
    }

    /// A binder: an identifier or the wildcard `_`.
    fn binder(&mut self) -> PResult<String> {
        if self.is_sym("_") {
            self.advance();
            Ok(self.fresh.name())
        } else {
            self.ident()
        }
    }

    fn program(&mut self) -> PResult<Program> {
        let mut decls = Vec::new();
        while *self.peek() != Tok::Eof {
            decls.push(self.decl()?);
        }
        Ok(Program { decls })
    }

    fn decl(&mut self) -> PResult<Decl> {
        let start = self.span();
        if self.is_kw("type") {
            self.advance();
            let name = self.ident()?;
            let mut atoms = Vec::new();
            if self.is_sym("=") {
                self.advance();
                atoms.push(self.ident()?);
                while self.is_sym(",") {
                    self.advance();
                    atoms.push(self.ident()?);
                }
            }
            let end = self.expect_sym(";")?;
            Ok(Decl::Type { name, atoms, span: start.to(end) })
        } else if self.is_kw("facts") {
            self.advance();
            let name = self.ident()?;
            self.expect_sym(":")?;
            let ty = self.pointed_type()?;
            self.expect_kw("from")?;
            let source = match self.peek().clone() {
                Tok::Str(s) => {
                    self.advance();
                    s
                }
                _ => return self.error(&["string literal"]),
            };
            let end = self.expect_sym(";")?;
            Ok(Decl::Facts { name, ty, source, span: start.to(end) })
        } else if self.is_kw("def") {
            self.advance();
            let name = self.ident()?;
            self.expect_sym(":")?;
            let ty = self.ty()?;
            self.expect_sym("=")?;
            let body = self.term()?;
            let end = self.expect_sym(";")?;
            Ok(Decl::Def { name, ty, body, span: start.to(end) })
        } else {
            self.error(&["`type`", "`facts`", "`def`"])
        }
    }

    fn sort_error<T>(&self, span: Span, ty: &Type, want: &str) -> PResult<T> {
        Err(ParseError {
            span,
            message: format!("sort error: `{ty}` is not a {want} type"),
            expected: vec![format!("{want} type")],
        })
    }

    fn pointed_type(&mut self) -> PResult<Type> {
        let span = self.span();
        let ty = self.ty()?;
        if ty.is_pointed() {
            Ok(ty)
        } else {
            self.sort_error(span, &ty, "pointed")
        }
    }

    pub fn ty(&mut self) -> PResult<Type> {
        let span = self.span();
        let lhs = self.prod_type()?;
        let op = match self.peek() {
            Tok::Sym(s @ ("->" | "-o" | "~>")) => *s,
            _ => return Ok(lhs),
        };
        self.advance();
        let rspan = self.span();
        let rhs = self.ty()?;
        match op {
            "->" => Ok(Type::arrow(lhs.into_set(), rhs.into_set())),
            "~>" => {
                if !rhs.is_pointed() {
                    return self.sort_error(rspan, &rhs, "pointed");
                }
                Ok(Type::fin(lhs.into_set(), rhs))
            }
            _ => {
                if !lhs.is_pointed() {
                    return self.sort_error(span, &lhs, "pointed");
                }
                if !rhs.is_pointed() {
                    return self.sort_error(rspan, &rhs, "pointed");
                }
                Ok(Type::lolli(lhs, rhs))
            }
        }
    }

    fn prod_type(&mut self) -> PResult<Type> {
        let span = self.span();
        let lhs = self.prefix_type()?;
        let op = match self.peek() {
            Tok::Sym(s @ ("*" | "&" | "@")) => *s,
            _ => return Ok(lhs),
        };
        self.advance();
        let rspan = self.span();
        let rhs = self.prod_type()?;
        if op == "*" {
            return Ok(Type::prod(lhs.into_set(), rhs.into_set()));
        }
        if !lhs.is_pointed() {
            return self.sort_error(span, &lhs, "pointed");
        }
        if !rhs.is_pointed() {
            return self.sort_error(rspan, &rhs, "pointed");
        }
        Ok(if op == "&" { Type::with(lhs, rhs) } else { Type::smash(lhs, rhs) })
    }

    fn prefix_type(&mut self) -> PResult<Type> {
        if self.is_kw("maybe") {
            self.advance();
            return Ok(Type::maybe(self.prefix_type()?.into_set()));
        }
        match self.peek().clone() {
            Tok::Ident(s) if s == "nat" => {
                self.advance();
                Ok(Type::Nat0)
            }
            Tok::Ident(s) if s == "bool" => {
                self.advance();
                Ok(Type::bool())
            }
            Tok::Ident(s) if s == "unit" => {
                self.advance();
                Ok(Type::Unit)
            }
            Tok::Num(1) => {
                self.advance();
                Ok(Type::Unit)
            }
            Tok::Sym("(") => {
                self.advance();
                let t = self.ty()?;
                self.expect_sym(")")?;
                Ok(t)
            }
            Tok::Ident(_) => Ok(Type::Base(self.ident()?)),
            _ => self.error(&["type"]),
        }
    }

    pub fn term(&mut self) -> PResult<Term> {
        let start = self.span();
        if self.is_kw("fn") {
            self.advance();
            let x = self.binder()?;
            self.expect_sym("=>")?;
            let body = self.term()?;
            let span = start.to(body.span);
            return Ok(Term::new(TermKind::Lam(x, Box::new(body)), span));
        }
        if self.is_kw("let") {
            self.advance();
            if self.is_sym("(") {
                self.advance();
                let x = self.binder()?;
                self.expect_sym(",")?;
                let y = self.binder()?;
                self.expect_sym(")")?;
                self.expect_sym("=")?;
                let t = self.term()?;
                self.expect_kw("in")?;
                let u = self.term()?;
                let span = start.to(u.span);
                return Ok(Term::new(TermKind::LetPair(x, y, Box::new(t), Box::new(u)), span));
            }
            if self.is_kw("just") {
                self.advance();
                let x = self.binder()?;
                self.expect_sym("=")?;
                let t = self.term()?;
                self.expect_kw("in")?;
                let u = self.term()?;
                let span = start.to(u.span);
                return Ok(Term::new(TermKind::LetJust(x, Box::new(t), Box::new(u)), span));
            }
            let x = self.binder()?;
            self.expect_sym("=")?;
            let t = self.term()?;
            self.expect_kw("in")?;
            let u = self.term()?;
            let span = start.to(u.span);
            return Ok(desugar::let_(&mut self.fresh, x, t, u, span));
        }
        if self.is_kw("if") {
            self.advance();
            self.expect_kw("just")?;
            let x = self.binder()?;
            self.expect_sym("=")?;
            let s = self.term()?;
            self.expect_kw("then")?;
            let a = self.term()?;
            self.expect_kw("else")?;
            let b = self.term()?;
            let span = start.to(b.span);
            return Ok(Term::new(
                TermKind::IfJust(Box::new(s), x, Box::new(a), Box::new(b)),
                span,
            ));
        }
        self.or_term()
    }

    fn or_term(&mut self) -> PResult<Term> {
        let mut lhs = self.and_term()?;
        while self.is_kw("or") {
            self.advance();
            let rhs = self.and_term()?;
            lhs = desugar::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and_term(&mut self) -> PResult<Term> {
        let lhs = self.when_term()?;
        if self.is_kw("and") {
            self.advance();
            let rhs = self.and_term()?;
            return Ok(desugar::and(&mut self.fresh, lhs, rhs));
        }
        Ok(lhs)
    }

    fn when_term(&mut self) -> PResult<Term> {
        let mut lhs = self.eq_term()?;
        while self.is_kw("when") {
            self.advance();
            let rhs = self.eq_term()?;
            lhs = desugar::when(&mut self.fresh, lhs, rhs);
        }
        Ok(lhs)
    }

    fn eq_term(&mut self) -> PResult<Term> {
        let mut lhs = self.add_term()?;
        while self.is_sym("=") {
            self.advance();
            let rhs = self.add_term()?;
            lhs = desugar::eq(lhs, rhs);
        }
        Ok(lhs)
    }

    fn add_term(&mut self) -> PResult<Term> {
        let mut lhs = self.mul_term()?;
        while self.is_sym("+") {
            self.advance();
            let rhs = self.mul_term()?;
            lhs = desugar::plus(lhs, rhs);
        }
        Ok(lhs)
    }

    fn mul_term(&mut self) -> PResult<Term> {
        let mut lhs = self.app_term()?;
        while self.is_sym("*") {
            self.advance();
            let rhs = self.app_term()?;
            lhs = desugar::times(lhs, rhs);
        }
        Ok(lhs)
    }

    fn starts_atom(&self) -> bool {
        match self.peek() {
            Tok::Ident(s) => {
                !KEYWORDS.contains(&s.as_str())
                    || matches!(
                        s.as_str(),
                        "nil" | "true" | "false" | "pi1" | "pi2" | "just" | "fn" | "let" | "if"
                    )
            }
            Tok::Num(_) => true,
            Tok::Sym(s) => matches!(*s, "(" | "<"),
            _ => false,
        }
    }

    fn app_term(&mut self) -> PResult<Term> {
        let mut head = self.prefix_term()?;
        while self.starts_atom() {
            let trailing = self.is_kw("fn") || self.is_kw("let") || self.is_kw("if");
            let arg = if trailing { self.term()? } else { self.prefix_term()? };
            let span = head.span.to(arg.span);
            head = Term::new(TermKind::App(Box::new(head), Box::new(arg)), span);
            if trailing {
                break;
            }
        }
        Ok(head)
    }

    fn prefix_term(&mut self) -> PResult<Term> {
        let start = self.span();
        let proj = if self.is_kw("pi1") {
            Some(1)
        } else if self.is_kw("pi2") {
            Some(2)
        } else {
            None
        };
        if let Some(i) = proj {
            self.advance();
            let t = self.prefix_term()?;
            let span = start.to(t.span);
            return Ok(Term::new(TermKind::Proj(i, Box::new(t)), span));
        }
        if self.is_kw("just") {
            self.advance();
            let t = self.prefix_term()?;
            let span = start.to(t.span);
            return Ok(Term::new(TermKind::Just(Box::new(t)), span));
        }
        if self.is_kw("fn") || self.is_kw("let") || self.is_kw("if") {
            return self.term();
        }
        self.atom()
    }

    fn atom(&mut self) -> PResult<Term> {
        let start = self.span();
        match self.peek().clone() {
            Tok::Num(n) => {
                self.advance();
                Ok(Term::new(TermKind::Nat(n), start))
            }
            Tok::Ident(s) if s == "nil" => {
                self.advance();
                Ok(Term::new(TermKind::Nil, start))
            }
            Tok::Ident(s) if s == "true" => {
                self.advance();
                Ok(desugar::true_(start))
            }
            Tok::Ident(s) if s == "false" => {
                self.advance();
                Ok(desugar::false_(start))
            }
            Tok::Ident(_) => {
                let x = self.ident()?;
                Ok(Term::new(TermKind::Var(x), start))
            }
            Tok::Sym("<") => {
                self.advance();
                let a = self.term()?;
                self.expect_sym(",")?;
                let b = self.term()?;
                let end = self.expect_sym(">")?;
                Ok(Term::new(TermKind::WithPair(Box::new(a), Box::new(b)), start.to(end)))
            }
            Tok::Sym("(") => {
                self.advance();
                if self.is_sym(")") {
                    let end = self.advance().1;
                    return Ok(Term::new(TermKind::Unit, start.to(end)));
                }
                let prim = match (self.peek(), self.peek_at(1)) {
                    (Tok::Ident(s), Tok::Sym(")")) if s == "or" => Some(Prim::Or),
                    (Tok::Sym("+"), Tok::Sym(")")) => Some(Prim::Plus),
                    (Tok::Sym("*"), Tok::Sym(")")) => Some(Prim::Times),
                    (Tok::Sym("="), Tok::Sym(")")) => Some(Prim::Eq),
                    _ => None,
                };
                if let Some(p) = prim {
                    self.advance();
                    let end = self.advance().1;
                    return Ok(Term::new(TermKind::Prim(p), start.to(end)));
                }
                let a = self.term()?;
                if self.is_sym(",") {
                    self.advance();
                    let b = self.term()?;
                    let end = self.expect_sym(")")?;
                    return Ok(Term::new(TermKind::Pair(Box::new(a), Box::new(b)), start.to(end)));
                }
                let end = self.expect_sym(")")?;
                Ok(Term { span: start.to(end), ..a })
            }
            _ => self.error(&["term"]),
        }
    }
}

pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    let mut p = Parser::new(src)?;
    p.program()
}

fn finish<T>(p: &mut Parser, v: T) -> Result<T, ParseError> {
    if *p.peek() == Tok::Eof {
        Ok(v)
    } else {
        p.error(&["end of input"])
    }
}

pub fn parse_term(src: &str) -> Result<Term, ParseError> {
    let mut p = Parser::new(src)?;
    let t = p.term()?;
    finish(&mut p, t)
}

pub fn parse_type(src: &str) -> Result<Type, ParseError> {
    let mut p = Parser::new(src)?;
    let t = p.ty()?;
    finish(&mut p, t)
}

/// Parse `term` or `term : type`, the form accepted by the REPL.
pub fn parse_query(src: &str) -> Result<(Term, Option<Type>), ParseError> {
    let mut p = Parser::new(src)?;
    let t = p.term()?;
    if p.is_sym(":") {
        p.advance();
        let ty = p.ty()?;
        return finish(&mut p, (t, Some(ty)));
    }
    finish(&mut p, (t, None))
}

/// Fully parenthesized printer over the core grammar. Its output parses
/// back to the same tree (up to spans).
pub fn print_term(t: &Term) -> String {
    use TermKind::*;
    match &t.kind {
        Nil => "nil".into(),
        Var(x) => x.clone(),
        Unit => "()".into(),
        Nat(n) => n.to_string(),
        Prim(p) => match p {
            crate::ast::Prim::Exists | crate::ast::Prim::Sum => p.name().into(),
            _ => format!("({})", p.name()),
        },
        Lam(x, b) => format!("(fn {x} => {})", print_term(b)),
        App(f, a) => format!("({} {})", print_term(f), print_term(a)),
        Pair(a, b) => format!("({}, {})", print_term(a), print_term(b)),
        WithPair(a, b) => format!("<{}, {}>", print_term(a), print_term(b)),
        Proj(i, a) => format!("(pi{i} {})", print_term(a)),
        LetPair(x, y, a, b) => {
            format!("(let ({x}, {y}) = {} in {})", print_term(a), print_term(b))
        }
        Just(a) => format!("(just {})", print_term(a)),
        LetJust(x, a, b) => format!("(let just {x} = {} in {})", print_term(a), print_term(b)),
        IfJust(s, x, a, b) => format!(
            "(if just {x} = {} then {} else {})",
            print_term(s),
            print_term(a),
            print_term(b)
        ),
    }
}

/// Erase spans so trees can be compared structurally.
pub fn strip_spans(t: &Term) -> Term {
    use TermKind::*;
    let b = |t: &Term| Box::new(strip_spans(t));
    let kind = match &t.kind {
        Nil => Nil,
        Var(x) => Var(x.clone()),
        Unit => Unit,
        Nat(n) => Nat(*n),
        Prim(p) => Prim(*p),
        Lam(x, t) => Lam(x.clone(), b(t)),
        App(f, a) => App(b(f), b(a)),
        Pair(x, y) => Pair(b(x), b(y)),
        WithPair(x, y) => WithPair(b(x), b(y)),
        Proj(i, t) => Proj(*i, b(t)),
        LetPair(x, y, s, u) => LetPair(x.clone(), y.clone(), b(s), b(u)),
        Just(t) => Just(b(t)),
        LetJust(x, s, u) => LetJust(x.clone(), b(s), b(u)),
        IfJust(s, x, p, q) => IfJust(b(s), x.clone(), b(p), b(q)),
    };
    Term::synth(kind)
}
