//! Recursive-descent parser for the mini-C subset. See `docs/grammar.md`.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use super::lexer::{tokenize, Tok, Token};
use super::{FrontendError, Pos};

/// Index into [`Program::vars`]. Every declaration gets its own id, so
/// shadowed names never alias.
pub type VarId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Less,
    LessEq,
    Greater,
    GreaterEq,
    Eq,
    NotEq,
    And,
    Or,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Not,
    Neg,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Int(i64),
    Var(VarId),
    /// Nondeterministic value: `input()`, `__VERIFIER_nondet_*()` or a call
    /// to a function that was never declared. Arguments are kept for uses.
    Input(Vec<Expr>),
    Call { name: String, args: Vec<Expr> },
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    /// Variables read by this expression, in left-to-right order.
    pub fn collect_vars(&self, out: &mut Vec<VarId>) {
        match self {
            Expr::Int(_) => {}
            Expr::Var(v) => out.push(*v),
            Expr::Input(args) | Expr::Call { args, .. } => {
                args.iter().for_each(|a| a.collect_vars(out))
            }
            Expr::Unary(_, e) => e.collect_vars(out),
            Expr::Binary(_, l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StmtKind {
    Decl { var: VarId, init: Option<Expr> },
    /// `x = e` or a compound assignment, in which case `op` is the operator
    /// and the right-hand side is `x op e`.
    Assign { var: VarId, op: Option<BinOp>, value: Expr },
    Incr(VarId),
    Decr(VarId),
    If { cond: Expr, then_branch: Vec<Stmt>, else_branch: Vec<Stmt> },
    While { cond: Expr, body: Vec<Stmt> },
    Assert(Expr),
    /// Call used as a statement; the expression is `Expr::Call` or `Expr::Input`.
    Call(Expr),
    Return(Option<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub pos: Pos,
}

impl Stmt {
    /// Variable written by this statement, if any. Declarations without an
    /// initializer do not define a value.
    pub fn defined_var(&self) -> Option<VarId> {
        match &self.kind {
            StmtKind::Decl { var, init: Some(_) } => Some(*var),
            StmtKind::Assign { var, .. } | StmtKind::Incr(var) | StmtKind::Decr(var) => Some(*var),
            _ => None,
        }
    }

    /// Variables read by the statement itself (not by nested statements),
    /// deduplicated and ascending.
    pub fn used_vars(&self) -> Vec<VarId> {
        let mut vars = Vec::new();
        match &self.kind {
            StmtKind::Decl { init, .. } => {
                if let Some(e) = init {
                    e.collect_vars(&mut vars)
                }
            }
            StmtKind::Assign { var, op, value } => {
                if op.is_some() {
                    vars.push(*var);
                }
                value.collect_vars(&mut vars);
            }
            StmtKind::Incr(v) | StmtKind::Decr(v) => vars.push(*v),
            StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => cond.collect_vars(&mut vars),
            StmtKind::Assert(e) | StmtKind::Call(e) => e.collect_vars(&mut vars),
            StmtKind::Return(e) => {
                if let Some(e) = e {
                    e.collect_vars(&mut vars)
                }
            }
        }
        vars.sort_unstable();
        vars.dedup();
        vars
    }
}

/// Parsed translation unit: the statement tree of the top level plus the body
/// of the (at most one) function definition, in source order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub body: Vec<Stmt>,
    /// Variable names by [`VarId`]; parameters and globals included.
    pub vars: Vec<String>,
    /// Declared function prototypes and the defined function.
    pub functions: BTreeSet<String>,
}

impl Program {
    /// Statements in pre-order (a compound statement precedes its children).
    /// Statement ids everywhere in the frontend are positions in this list.
    pub fn statements(&self) -> Vec<&Stmt> {
        fn walk<'a>(stmts: &'a [Stmt], out: &mut Vec<&'a Stmt>) {
            for s in stmts {
                out.push(s);
                match &s.kind {
                    StmtKind::If { then_branch, else_branch, .. } => {
                        walk(then_branch, out);
                        walk(else_branch, out);
                    }
                    StmtKind::While { body, .. } => walk(body, out),
                    _ => {}
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.body, &mut out);
        out
    }

    pub fn statement_count(&self) -> usize {
        self.statements().len()
    }
}

pub fn parse(source: &str) -> Result<Program, FrontendError> {
    let tokens = tokenize(source)?;
    Parser::new(tokens).program()
}

const TYPE_WORDS: &[&str] = &["int", "unsigned", "signed", "long", "short", "char", "_Bool", "void"];
const QUALIFIERS: &[&str] = &["extern", "static", "const", "volatile", "register", "inline"];
const UNSUPPORTED: &[(&str, &str)] = &[
    ("struct", "struct"),
    ("union", "union"),
    ("enum", "enum"),
    ("typedef", "typedef"),
    ("goto", "goto"),
    ("switch", "switch"),
    ("case", "switch"),
    ("break", "break"),
    ("continue", "continue"),
    ("do", "do-while loop"),
    ("float", "floating-point type"),
    ("double", "floating-point type"),
    ("sizeof", "sizeof"),
];

fn is_nondet(name: &str) -> bool {
    name == "input" || name.starts_with("__VERIFIER_nondet")
}

fn is_assert(name: &str) -> bool {
    name == "assert" || name == "__VERIFIER_assert"
}

struct Parser {
    tokens: Vec<Token>,
    at: usize,
    vars: Vec<String>,
    scopes: Vec<BTreeMap<String, VarId>>,
    functions: BTreeSet<String>,
    defined_function: bool,
}

impl Parser {
    fn new(tokens: Vec<Token>) -> Self {
        Parser {
            tokens,
            at: 0,
            vars: Vec::new(),
            scopes: alloc::vec![BTreeMap::new()],
            functions: BTreeSet::new(),
            defined_function: false,
        }
    }

    fn peek(&self) -> &Tok {
        &self.tokens[self.at].tok
    }

    fn peek_at(&self, ahead: usize) -> &Tok {
        let i = (self.at + ahead).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn pos(&self) -> Pos {
        self.tokens[self.at].pos
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.at].clone();
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        t
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == w)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> Result<(), FrontendError> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.unexpected(&alloc::format!("`{p}`")))
        }
    }

    fn unexpected(&self, wanted: &str) -> FrontendError {
        let found = match self.peek() {
            Tok::Ident(s) => alloc::format!("`{s}`"),
            Tok::Int(v) => alloc::format!("`{v}`"),
            Tok::Punct(p) => alloc::format!("`{p}`"),
            Tok::Eof => "end of input".into(),
        };
        FrontendError::Syntax { pos: self.pos(), message: alloc::format!("expected {wanted}, found {found}") }
    }

    fn check_supported(&self) -> Result<(), FrontendError> {
        let pos = self.pos();
        match self.peek() {
            Tok::Ident(w) => {
                if let Some((_, c)) = UNSUPPORTED.iter().find(|(k, _)| k == w) {
                    return Err(FrontendError::Unsupported { pos, construct: c });
                }
            }
            Tok::Punct("[") | Tok::Punct("]") => {
                return Err(FrontendError::Unsupported { pos, construct: "array" })
            }
            Tok::Punct("->") | Tok::Punct(".") => {
                return Err(FrontendError::Unsupported { pos, construct: "struct member access" })
            }
            Tok::Punct("?") => {
                return Err(FrontendError::Unsupported { pos, construct: "conditional expression" })
            }
            _ => {}
        }
        Ok(())
    }

    fn ident(&mut self) -> Result<String, FrontendError> {
        self.check_supported()?;
        match self.peek().clone() {
            Tok::Ident(s) if !TYPE_WORDS.contains(&s.as_str()) => {
                self.advance();
                Ok(s)
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn at_type(&self) -> bool {
        matches!(self.peek(), Tok::Ident(s) if TYPE_WORDS.contains(&s.as_str()) || QUALIFIERS.contains(&s.as_str()))
    }

    /// Consumes qualifiers and type words; rejects pointer declarators.
    fn type_spec(&mut self) -> Result<(), FrontendError> {
        let mut saw_type = false;
        loop {
            self.check_supported()?;
            match self.peek() {
                Tok::Ident(s) if TYPE_WORDS.contains(&s.as_str()) => saw_type = true,
                Tok::Ident(s) if QUALIFIERS.contains(&s.as_str()) => {}
                _ => break,
            }
            self.advance();
        }
        if !saw_type {
            return Err(self.unexpected("type"));
        }
        if self.is_punct("*") {
            return Err(FrontendError::Unsupported { pos: self.pos(), construct: "pointer" });
        }
        Ok(())
    }

    fn declare(&mut self, name: String) -> VarId {
        let id = self.vars.len();
        self.vars.push(name.clone());
        self.scopes.last_mut().unwrap().insert(name, id);
        id
    }

    fn lookup(&self, name: &str, pos: Pos) -> Result<VarId, FrontendError> {
        self.scopes
            .iter()
            .rev()
            .find_map(|s| s.get(name).copied())
            .ok_or_else(|| FrontendError::Undeclared { pos, name: name.into() })
    }

    fn program(mut self) -> Result<Program, FrontendError> {
        let mut body = Vec::new();
        while *self.peek() != Tok::Eof {
            if self.is_function_head() {
                self.function(&mut body)?;
            } else {
                self.statement(&mut body)?;
            }
        }
        Ok(Program { body, vars: self.vars, functions: self.functions })
    }

    /// `type... name (` at the current position.
    fn is_function_head(&self) -> bool {
        if !self.at_type() {
            return false;
        }
        let mut k = 0;
        while let Tok::Ident(s) = self.peek_at(k) {
            if !(TYPE_WORDS.contains(&s.as_str()) || QUALIFIERS.contains(&s.as_str())) {
                return matches!(self.peek_at(k + 1), Tok::Punct("("));
            }
            k += 1;
        }
        false
    }

    fn function(&mut self, body: &mut Vec<Stmt>) -> Result<(), FrontendError> {
        self.type_spec()?;
        let pos = self.pos();
        let name = self.ident()?;
        self.functions.insert(name.clone());
        self.expect_punct("(")?;
        let mut params = Vec::new();
        if !self.is_punct(")") {
            loop {
                if self.is_word("void") && matches!(self.peek_at(1), Tok::Punct(")")) {
                    self.advance();
                    break;
                }
                if self.eat_punct("...") {
                    break;
                }
                self.type_spec()?;
                if let Tok::Ident(_) = self.peek() {
                    params.push(self.ident()?);
                }
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        if self.eat_punct(";") {
            return Ok(());
        }
        if self.defined_function {
            return Err(FrontendError::Unsupported { pos, construct: "more than one function definition" });
        }
        self.defined_function = true;
        self.scopes.push(BTreeMap::new());
        for p in params {
            self.declare(p);
        }
        self.expect_punct("{")?;
        while !self.eat_punct("}") {
            if *self.peek() == Tok::Eof {
                return Err(self.unexpected("`}`"));
            }
            self.statement(body)?;
        }
        self.scopes.pop();
        Ok(())
    }

    fn block_or_statement(&mut self) -> Result<Vec<Stmt>, FrontendError> {
        let mut out = Vec::new();
        self.statement(&mut out)?;
        Ok(out)
    }

    fn statement(&mut self, out: &mut Vec<Stmt>) -> Result<(), FrontendError> {
        self.check_supported()?;
        let pos = self.pos();
        if self.eat_punct(";") {
            return Ok(());
        }
        if self.eat_punct("{") {
            self.scopes.push(BTreeMap::new());
            while !self.eat_punct("}") {
                if *self.peek() == Tok::Eof {
                    return Err(self.unexpected("`}`"));
                }
                self.statement(out)?;
            }
            self.scopes.pop();
            return Ok(());
        }
        if self.at_type() {
            self.declaration(out)?;
            return self.expect_punct(";");
        }
        if self.is_word("if") {
            self.advance();
            self.expect_punct("(")?;
            let cond = self.expr()?;
            self.expect_punct(")")?;
            let then_branch = self.scoped(|p| p.block_or_statement())?;
            let else_branch = if self.is_word("else") {
                self.advance();
                self.scoped(|p| p.block_or_statement())?
            } else {
                Vec::new()
            };
            out.push(Stmt { kind: StmtKind::If { cond, then_branch, else_branch }, pos });
            return Ok(());
        }
        if self.is_word("while") {
            self.advance();
            self.expect_punct("(")?;
            let cond = self.expr()?;
            self.expect_punct(")")?;
            let body = self.scoped(|p| p.block_or_statement())?;
            out.push(Stmt { kind: StmtKind::While { cond, body }, pos });
            return Ok(());
        }
        if self.is_word("for") {
            return self.for_loop(out);
        }
        if self.is_word("return") {
            self.advance();
            let value = if self.is_punct(";") { None } else { Some(self.expr()?) };
            self.expect_punct(";")?;
            out.push(Stmt { kind: StmtKind::Return(value), pos });
            return Ok(());
        }
        let stmt = self.simple_statement()?;
        self.expect_punct(";")?;
        out.push(stmt);
        Ok(())
    }

    fn scoped<T>(
        &mut self,
        f: impl FnOnce(&mut Self) -> Result<T, FrontendError>,
    ) -> Result<T, FrontendError> {
        self.scopes.push(BTreeMap::new());
        let r = f(self);
        self.scopes.pop();
        r
    }

    /// `for (init; cond; step) body` becomes `init; while (cond) { body; step; }`.
    fn for_loop(&mut self, out: &mut Vec<Stmt>) -> Result<(), FrontendError> {
        let pos = self.pos();
        self.advance();
        self.scopes.push(BTreeMap::new());
        self.expect_punct("(")?;
        if self.at_type() {
            self.declaration(out)?;
        } else if !self.is_punct(";") {
            let s = self.simple_statement()?;
            out.push(s);
        }
        self.expect_punct(";")?;
        let cond = if self.is_punct(";") { Expr::Int(1) } else { self.expr()? };
        self.expect_punct(";")?;
        let step = if self.is_punct(")") { None } else { Some(self.simple_statement()?) };
        self.expect_punct(")")?;
        let mut body = self.scoped(|p| p.block_or_statement())?;
        body.extend(step);
        self.scopes.pop();
        out.push(Stmt { kind: StmtKind::While { cond, body }, pos });
        Ok(())
    }

    fn declaration(&mut self, out: &mut Vec<Stmt>) -> Result<(), FrontendError> {
        self.type_spec()?;
        loop {
            let pos = self.pos();
            let name = self.ident()?;
            self.check_supported()?;
            let init = if self.eat_punct("=") { Some(self.expr()?) } else { None };
            // The new name is visible only after its initializer.
            let var = self.declare(name);
            out.push(Stmt { kind: StmtKind::Decl { var, init }, pos });
            if !self.eat_punct(",") {
                return Ok(());
            }
            if self.is_punct("*") {
                return Err(FrontendError::Unsupported { pos: self.pos(), construct: "pointer" });
            }
        }
    }

    /// Assignment, increment/decrement, or call; no trailing `;`.
    fn simple_statement(&mut self) -> Result<Stmt, FrontendError> {
        let pos = self.pos();
        if self.is_punct("*") || self.is_punct("&") {
            return Err(FrontendError::Unsupported { pos, construct: "pointer" });
        }
        if self.is_punct("++") || self.is_punct("--") {
            let inc = self.is_punct("++");
            self.advance();
            let name_pos = self.pos();
            let name = self.ident()?;
            let var = self.lookup(&name, name_pos)?;
            let kind = if inc { StmtKind::Incr(var) } else { StmtKind::Decr(var) };
            return Ok(Stmt { kind, pos });
        }
        let name = self.ident()?;
        if self.is_punct("(") {
            let call = self.call(name)?;
            if let Expr::Call { name, args } = &call {
                if is_assert(name) {
                    let [cond] = <[Expr; 1]>::try_from(args.clone()).map_err(|_| {
                        FrontendError::Syntax { pos, message: "assert takes exactly one argument".into() }
                    })?;
                    return Ok(Stmt { kind: StmtKind::Assert(cond), pos });
                }
            }
            return Ok(Stmt { kind: StmtKind::Call(call), pos });
        }
        let var = self.lookup(&name, pos)?;
        self.check_supported()?;
        let op = match self.peek() {
            Tok::Punct("++") => {
                self.advance();
                return Ok(Stmt { kind: StmtKind::Incr(var), pos });
            }
            Tok::Punct("--") => {
                self.advance();
                return Ok(Stmt { kind: StmtKind::Decr(var), pos });
            }
            Tok::Punct("=") => None,
            Tok::Punct("+=") => Some(BinOp::Add),
            Tok::Punct("-=") => Some(BinOp::Sub),
            Tok::Punct("*=") => Some(BinOp::Mul),
            Tok::Punct("/=") => Some(BinOp::Div),
            Tok::Punct("%=") => Some(BinOp::Mod),
            Tok::Punct(p) if p.ends_with('=') && p.len() >= 2 && !matches!(*p, "==" | "!=" | "<=" | ">=") => {
                return Err(FrontendError::Unsupported { pos: self.pos(), construct: "bitwise operator" });
            }
            _ => return Err(self.unexpected("assignment, `++`, `--` or call")),
        };
        self.advance();
        let value = self.expr()?;
        Ok(Stmt { kind: StmtKind::Assign { var, op, value }, pos })
    }

    /// Parses the argument list after `name`; `(` is the current token.
    fn call(&mut self, name: String) -> Result<Expr, FrontendError> {
        self.expect_punct("(")?;
        let mut args = Vec::new();
        if !self.eat_punct(")") {
            loop {
                args.push(self.expr()?);
                if self.eat_punct(")") {
                    break;
                }
                self.expect_punct(",")?;
            }
        }
        if is_assert(&name) {
            return Ok(Expr::Call { name, args });
        }
        if is_nondet(&name) || !self.functions.contains(&name) {
            Ok(Expr::Input(args))
        } else {
            Ok(Expr::Call { name, args })
        }
    }

    fn expr(&mut self) -> Result<Expr, FrontendError> {
        self.binary(0)
    }

    fn binary(&mut self, level: usize) -> Result<Expr, FrontendError> {
        const LEVELS: &[&[(&str, BinOp)]] = &[
            &[("||", BinOp::Or)],
            &[("&&", BinOp::And)],
            &[("==", BinOp::Eq), ("!=", BinOp::NotEq)],
            &[("<", BinOp::Less), ("<=", BinOp::LessEq), (">", BinOp::Greater), (">=", BinOp::GreaterEq)],
            &[("+", BinOp::Add), ("-", BinOp::Sub)],
            &[("*", BinOp::Mul), ("/", BinOp::Div), ("%", BinOp::Mod)],
        ];
        if level == LEVELS.len() {
            return self.unary();
        }
        let mut lhs = self.binary(level + 1)?;
        loop {
            self.check_supported()?;
            let op = LEVELS[level].iter().find(|(p, _)| self.is_punct(p)).map(|(_, op)| *op);
            match op {
                Some(op) => {
                    self.advance();
                    let rhs = self.binary(level + 1)?;
                    lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
                }
                None => {
                    if ["&", "|", "^", "<<", ">>"].iter().any(|p| self.is_punct(p)) {
                        return Err(FrontendError::Unsupported { pos: self.pos(), construct: "bitwise operator" });
                    }
                    return Ok(lhs);
                }
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, FrontendError> {
        let pos = self.pos();
        if self.eat_punct("!") {
            return Ok(Expr::Unary(UnOp::Not, Box::new(self.unary()?)));
        }
        if self.eat_punct("-") {
            if let Tok::Int(v) = *self.peek() {
                self.advance();
                return Ok(Expr::Int(v.wrapping_neg()));
            }
            return Ok(Expr::Unary(UnOp::Neg, Box::new(self.unary()?)));
        }
        if self.eat_punct("+") {
            return self.unary();
        }
        if self.is_punct("*") || self.is_punct("&") {
            return Err(FrontendError::Unsupported { pos, construct: "pointer" });
        }
        if self.is_punct("~") {
            return Err(FrontendError::Unsupported { pos, construct: "bitwise operator" });
        }
        if self.is_punct("++") || self.is_punct("--") || self.is_punct("=") {
            return Err(FrontendError::Unsupported { pos, construct: "side effect inside expression" });
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, FrontendError> {
        self.check_supported()?;
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Int(v) => {
                self.advance();
                Ok(Expr::Int(v))
            }
            Tok::Punct("(") => {
                self.advance();
                if self.at_type() {
                    return Err(FrontendError::Unsupported { pos, construct: "cast" });
                }
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            Tok::Ident(_) => {
                let name = self.ident()?;
                if self.is_punct("(") {
                    if is_assert(&name) {
                        return Err(FrontendError::Syntax { pos, message: "assert is a statement".into() });
                    }
                    return self.call(name);
                }
                self.check_supported()?;
                Ok(Expr::Var(self.lookup(&name, pos)?))
            }
            _ => Err(self.unexpected("expression")),
        }
    }
}
