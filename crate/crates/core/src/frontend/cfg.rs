//! Statement-level control flow graph.

use alloc::vec::Vec;

use super::ast::{Program, Stmt, StmtKind};

/// Outgoing branch of a flow edge. Only `if` and loop heads produce
/// `True`/`False` edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Branch {
    Seq,
    True,
    False,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct FlowEdge {
    pub src: usize,
    pub dst: usize,
    pub branch: Branch,
}

/// One node per statement (pre-order statement ids) plus a synthetic exit node
/// with id `statement_count`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cfg {
    statement_count: usize,
    entry: usize,
    edges: Vec<FlowEdge>,
    preds: Vec<Vec<usize>>,
    succs: Vec<Vec<usize>>,
}

impl Cfg {
    pub fn statement_count(&self) -> usize {
        self.statement_count
    }

    pub fn exit(&self) -> usize {
        self.statement_count
    }

    /// First statement, or the exit for an empty program.
    pub fn entry(&self) -> usize {
        self.entry
    }

    /// Sorted by `(src, dst, branch)`.
    pub fn edges(&self) -> &[FlowEdge] {
        &self.edges
    }

    pub fn successors(&self, node: usize) -> &[usize] {
        &self.succs[node]
    }

    pub fn predecessors(&self, node: usize) -> &[usize] {
        &self.preds[node]
    }

    /// Loop back edges. Statement ids are pre-order, so flow only goes to an
    /// earlier (or the same) statement when it returns to a loop head.
    pub fn is_back_edge(&self, e: &FlowEdge) -> bool {
        e.dst <= e.src
    }
}

pub fn build_cfg(program: &Program) -> Cfg {
    let n = program.statement_count();
    let mut b = Builder { next_id: 0, exit: n, edges: Vec::new() };
    let entry = b.list(&program.body, n);
    debug_assert_eq!(b.next_id, n);

    let mut edges = b.edges;
    edges.sort();
    edges.dedup();
    let mut preds = alloc::vec![Vec::new(); n + 1];
    let mut succs = alloc::vec![Vec::new(); n + 1];
    for e in &edges {
        succs[e.src].push(e.dst);
        preds[e.dst].push(e.src);
    }
    for list in preds.iter_mut().chain(succs.iter_mut()) {
        list.sort_unstable();
        list.dedup();
    }
    Cfg { statement_count: n, entry, edges, preds, succs }
}

struct Builder {
    next_id: usize,
    exit: usize,
    edges: Vec<FlowEdge>,
}

impl Builder {
    /// Assigns pre-order ids to `stmts`, wires them so that control leaves the
    /// list towards `next`, and returns the id control enters the list at.
    fn list(&mut self, stmts: &[Stmt], next: usize) -> usize {
        // Ids must be handed out front to back, wiring needs the successor.
        let first_ids: Vec<usize> = stmts
            .iter()
            .map(|s| {
                let id = self.next_id;
                self.next_id += subtree_size(s);
                id
            })
            .collect();
        for (k, s) in stmts.iter().enumerate() {
            let follow = first_ids.get(k + 1).copied().unwrap_or(next);
            self.stmt(s, first_ids[k], follow);
        }
        first_ids.first().copied().unwrap_or(next)
    }

    fn stmt(&mut self, s: &Stmt, id: usize, next: usize) {
        let saved = self.next_id;
        self.next_id = id + 1;
        match &s.kind {
            StmtKind::If { then_branch, else_branch, .. } => {
                let t = self.list(then_branch, next);
                let f = self.list(else_branch, next);
                self.push(id, t, Branch::True);
                self.push(id, f, Branch::False);
            }
            StmtKind::While { body, .. } => {
                let t = self.list(body, id);
                self.push(id, t, Branch::True);
                self.push(id, next, Branch::False);
            }
            StmtKind::Return(_) => self.push(id, self.exit, Branch::Seq),
            _ => self.push(id, next, Branch::Seq),
        }
        self.next_id = saved;
    }

    fn push(&mut self, src: usize, dst: usize, branch: Branch) {
        self.edges.push(FlowEdge { src, dst, branch });
    }
}

fn subtree_size(s: &Stmt) -> usize {
    1 + match &s.kind {
        StmtKind::If { then_branch, else_branch, .. } => {
            then_branch.iter().chain(else_branch).map(subtree_size).sum()
        }
        StmtKind::While { body, .. } => body.iter().map(subtree_size).sum(),
        _ => 0,
    }
}
