//! Mini-C frontend: parsing, control flow, reaching definitions, control
//! dependences and verification graph assembly.
//!
//! The accepted language is documented in `docs/grammar.md`. Pointers,
//! arrays, structs, `goto`, `switch`, `break`/`continue` and floating-point
//! types are rejected with [`FrontendError::Unsupported`].

mod ast;
mod build;
mod cfg;
mod dataflow;
mod lexer;

use core::fmt;

pub use ast::{parse, BinOp, Expr, Program, Stmt, StmtKind, UnOp, VarId};
pub use build::build_verification_graph;
pub use cfg::{build_cfg, Branch, Cfg, FlowEdge};
pub use dataflow::{control_dependencies, reaching_definitions, ReachingDefinitions};

use crate::graph::VerificationGraph;

/// 1-based source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FrontendError {
    #[error("syntax error at {pos}: {message}")]
    Syntax { pos: Pos, message: alloc::string::String },
    #[error("unsupported construct at {pos}: {construct} is outside the supported C subset")]
    Unsupported { pos: Pos, construct: &'static str },
    #[error("use of undeclared variable `{name}` at {pos}")]
    Undeclared { pos: Pos, name: alloc::string::String },
}

/// Parse `source` and build its verification graph.
pub fn extract(source: &str) -> Result<VerificationGraph, FrontendError> {
    let program = parse(source)?;
    let cfg = build_cfg(&program);
    let rd = reaching_definitions(&program, &cfg);
    let cd = control_dependencies(&program);
    Ok(build_verification_graph(&program, &cfg, &rd, &cd))
}
