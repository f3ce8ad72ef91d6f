use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use super::ast::{BinOp, Expr, Program, StmtKind, UnOp};
use super::cfg::Cfg;
use super::dataflow::ReachingDefinitions;
use crate::graph::{Edge, EdgeKind, Node, NodeLabel, VerificationGraph};

/// Assembles the verification graph.
///
/// Node ids `0..statement_count` are the statement roots in pre-order; AST
/// nodes follow, statement by statement, each subtree in pre-order. Edges are
/// emitted as SD, then CF, then CD, then DD.
pub fn build_verification_graph(
    program: &Program,
    cfg: &Cfg,
    rd: &ReachingDefinitions,
    cd: &BTreeSet<(usize, usize, bool)>,
) -> VerificationGraph {
    let stmts = program.statements();
    let mut g = GraphSink::default();

    for s in &stmts {
        g.nodes.push(Node { label: root_label(program, &s.kind), depth: 0 });
    }
    for (id, s) in stmts.iter().enumerate() {
        for child in root_children(&s.kind) {
            g.subtree(id as u32, &child);
        }
    }

    let mut seen = BTreeSet::new();
    for e in cfg.edges() {
        if e.dst < stmts.len() && seen.insert((e.src, e.dst)) {
            g.edge(e.src as u32, e.dst as u32, EdgeKind::CF, true);
        }
    }
    for &(c, s, v) in cd {
        g.edge(c as u32, s as u32, EdgeKind::CD, v);
    }
    let mut dd = BTreeSet::new();
    for ((stmt, _), defs) in rd.use_def_chains() {
        for d in defs {
            dd.insert((d, stmt));
        }
    }
    for (d, s) in dd {
        g.edge(d as u32, s as u32, EdgeKind::DD, true);
    }

    VerificationGraph::new(g.nodes, g.edges).expect("frontend builds well-formed graphs")
}

/// Owned view of an AST child so that compound assignments can be expanded.
enum Child<'a> {
    Ref,
    Expr(&'a Expr),
    Compound(BinOp, &'a Expr),
}

fn root_label(program: &Program, kind: &StmtKind) -> NodeLabel {
    match kind {
        StmtKind::Decl { .. } => NodeLabel::Decl,
        StmtKind::Assign { .. } => NodeLabel::Assign,
        StmtKind::Incr(_) => NodeLabel::Incr,
        StmtKind::Decr(_) => NodeLabel::Decr,
        StmtKind::If { .. } => NodeLabel::If,
        StmtKind::While { .. } => NodeLabel::Loop,
        StmtKind::Assert(_) => NodeLabel::Assert,
        StmtKind::Call(Expr::Call { name, .. }) if program.functions.contains(name) => {
            NodeLabel::FunctionCall
        }
        StmtKind::Call(_) => NodeLabel::Input,
        StmtKind::Return(_) => NodeLabel::FunctionReturn,
    }
}

fn root_children(kind: &StmtKind) -> Vec<Child<'_>> {
    match kind {
        StmtKind::Decl { init, .. } => init.iter().map(Child::Expr).collect(),
        StmtKind::Assign { op: None, value, .. } => alloc::vec![Child::Ref, Child::Expr(value)],
        StmtKind::Assign { op: Some(op), value, .. } => {
            alloc::vec![Child::Ref, Child::Compound(*op, value)]
        }
        StmtKind::Incr(_) | StmtKind::Decr(_) => alloc::vec![Child::Ref],
        StmtKind::If { cond, .. } | StmtKind::While { cond, .. } | StmtKind::Assert(cond) => {
            alloc::vec![Child::Expr(cond)]
        }
        StmtKind::Call(Expr::Call { args, .. } | Expr::Input(args)) => args.iter().map(Child::Expr).collect(),
        StmtKind::Call(e) => alloc::vec![Child::Expr(e)],
        StmtKind::Return(value) => value.iter().map(Child::Expr).collect(),
    }
}

fn binop_label(op: BinOp) -> NodeLabel {
    match op {
        BinOp::Add => NodeLabel::BinOpAdd,
        BinOp::Sub => NodeLabel::BinOpSub,
        BinOp::Mul => NodeLabel::BinOpMul,
        BinOp::Div => NodeLabel::BinOpDiv,
        BinOp::Mod => NodeLabel::BinOpMod,
        BinOp::Less => NodeLabel::BinOpLess,
        BinOp::LessEq => NodeLabel::BinOpLessEq,
        BinOp::Greater => NodeLabel::BinOpGreater,
        BinOp::GreaterEq => NodeLabel::BinOpGreaterEq,
        BinOp::Eq => NodeLabel::BinOpEq,
        BinOp::NotEq => NodeLabel::BinOpNotEq,
        BinOp::And => NodeLabel::BoolOpAnd,
        BinOp::Or => NodeLabel::BoolOpOr,
    }
}

#[derive(Default)]
struct GraphSink {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
}

impl GraphSink {
    fn edge(&mut self, src: u32, dst: u32, kind: EdgeKind, cond: bool) {
        self.edges.push(Edge { src, dst, kind, cond });
    }

    fn child(&mut self, parent: u32, label: NodeLabel) -> u32 {
        let id = self.nodes.len() as u32;
        let depth = self.nodes[parent as usize].depth + 1;
        self.nodes.push(Node { label, depth });
        self.edge(parent, id, EdgeKind::SD, true);
        id
    }

    fn subtree(&mut self, parent: u32, child: &Child<'_>) {
        match child {
            Child::Ref => {
                self.child(parent, NodeLabel::Ref);
            }
            Child::Expr(e) => self.expr(parent, e),
            Child::Compound(op, rhs) => {
                let id = self.child(parent, binop_label(*op));
                self.child(id, NodeLabel::Ref);
                self.expr(id, rhs);
            }
        }
    }

    fn expr(&mut self, parent: u32, e: &Expr) {
        match e {
            Expr::Int(v) => {
                self.child(parent, NodeLabel::int_literal(*v));
            }
            Expr::Var(_) => {
                self.child(parent, NodeLabel::Ref);
            }
            Expr::Input(args) => {
                let id = self.child(parent, NodeLabel::Input);
                args.iter().for_each(|a| self.expr(id, a));
            }
            Expr::Call { args, .. } => {
                let id = self.child(parent, NodeLabel::FunctionCall);
                args.iter().for_each(|a| self.expr(id, a));
            }
            Expr::Unary(op, inner) => {
                let label = match op {
                    UnOp::Not => NodeLabel::UnOpNot,
                    UnOp::Neg => NodeLabel::UnOpNeg,
                };
                let id = self.child(parent, label);
                self.expr(id, inner);
            }
            Expr::Binary(op, l, r) => {
                let id = self.child(parent, binop_label(*op));
                self.expr(id, l);
                self.expr(id, r);
            }
        }
    }
}
