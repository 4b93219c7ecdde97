//! A type checker and interpreter for finite functional programs over
//! pointed sets.

pub mod ast;
pub mod elab;
pub mod parser;
pub mod runtime;
pub mod prelude;
pub mod typecheck;
pub mod eval;
pub mod cli;
