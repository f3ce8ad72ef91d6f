//! Verification graph data model.
//!
//! A [`VerificationGraph`] is a directed, labelled multigraph. Nodes carry an
//! abstract [`NodeLabel`] and their depth inside the statement AST they belong
//! to; edges carry one of four [`EdgeKind`]s plus a boolean branch valuation
//! that can only be `false` on control-dependence edges.
//!
//! Node and edge ids are dense indices (`0..len`), and every iteration order in
//! this crate is ascending by id.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

/// Version of the [`NodeLabel`] vocabulary table. Bump whenever a label is
/// added, removed or renamed, since persisted graphs and compression tables
/// refer to labels by name.
pub const LABEL_VOCABULARY_VERSION: u32 = 1;

macro_rules! node_labels {
    ($( $(#[$doc:meta])* $variant:ident => $name:literal, )*) => {
        /// Abstract node label. Concrete identifiers and literal values never
        /// appear in a verification graph, only these labels.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum NodeLabel {
            $( $(#[$doc])* $variant, )*
        }

        impl NodeLabel {
            /// The closed label vocabulary, in table order.
            pub const ALL: &'static [NodeLabel] = &[$(NodeLabel::$variant,)*];

            /// Canonical name used in graph files.
            pub fn name(self) -> &'static str {
                match self {
                    $(NodeLabel::$variant => $name,)*
                }
            }

            pub fn from_name(name: &str) -> Option<NodeLabel> {
                match name {
                    $($name => Some(NodeLabel::$variant),)*
                    _ => None,
                }
            }
        }
    };
}

node_labels! {
    /// `while` / `for` loop statement.
    Loop => "Loop",
    /// `if` statement.
    If => "If",
    /// Variable declaration.
    Decl => "Decl",
    /// Variable assignment (including compound assignment).
    Assign => "Assign",
    /// `x++` / `++x`.
    Incr => "Incr",
    /// `x--` / `--x`.
    Decr => "Decr",
    Assert => "Assert",
    /// Variable reference.
    Ref => "Ref",
    /// Call to a declared function, as a statement or an expression.
    FunctionCall => "Function_Call",
    FunctionReturn => "Function_Return",
    /// Integer literal with `|v| <= 10`.
    IntLiteralSmall => "Int_Literal_Small",
    /// Integer literal with `10 < |v| <= 100`.
    IntLiteralMedium => "Int_Literal_Medium",
    /// Integer literal with `|v| > 100`.
    IntLiteralLarge => "Int_Literal_Large",
    /// Nondeterministic input: `input()`, `__VERIFIER_nondet_*()` and calls to
    /// undeclared external functions.
    Input => "Input",
    BinOpAdd => "BinOp_Add",
    BinOpSub => "BinOp_Sub",
    BinOpMul => "BinOp_Mul",
    BinOpDiv => "BinOp_Div",
    BinOpMod => "BinOp_Mod",
    BinOpLess => "BinOp_Less",
    BinOpLessEq => "BinOp_LessEq",
    BinOpGreater => "BinOp_Greater",
    BinOpGreaterEq => "BinOp_GreaterEq",
    BinOpEq => "BinOp_Eq",
    BinOpNotEq => "BinOp_NotEq",
    BoolOpAnd => "BoolOp_And",
    BoolOpOr => "BoolOp_Or",
    UnOpNot => "UnOp_Not",
    UnOpNeg => "UnOp_Neg",
}

impl NodeLabel {
    /// Bucket an integer literal by absolute value.
    pub fn int_literal(value: i64) -> NodeLabel {
        match value.unsigned_abs() {
            0..=10 => NodeLabel::IntLiteralSmall,
            11..=100 => NodeLabel::IntLiteralMedium,
            _ => NodeLabel::IntLiteralLarge,
        }
    }
}

impl fmt::Display for NodeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NodeLabel {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NodeLabel::from_name(s).ok_or_else(|| GraphError::UnknownLabel(s.into()))
    }
}

/// Edge type: control flow, control dependence, data dependence or syntactic
/// (AST "consists-of") dependence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeKind {
    CF,
    CD,
    DD,
    SD,
}

impl EdgeKind {
    pub const ALL: [EdgeKind; 4] = [EdgeKind::CF, EdgeKind::CD, EdgeKind::DD, EdgeKind::SD];

    pub fn name(self) -> &'static str {
        match self {
            EdgeKind::CF => "CF",
            EdgeKind::CD => "CD",
            EdgeKind::DD => "DD",
            EdgeKind::SD => "SD",
        }
    }

    fn bit(self) -> u8 {
        1 << (self as u8)
    }
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EdgeKind {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "CF" => Ok(EdgeKind::CF),
            "CD" => Ok(EdgeKind::CD),
            "DD" => Ok(EdgeKind::DD),
            "SD" => Ok(EdgeKind::SD),
            other => Err(GraphError::UnknownEdgeKind(other.into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("unknown node label `{0}`")]
    UnknownLabel(String),
    #[error("unknown edge type `{0}`")]
    UnknownEdgeKind(String),
    #[error("unknown node id {0}")]
    UnknownNode(u32),
    #[error("{what} ids must be exactly 0..{len} without gaps or duplicates")]
    NonDenseIds { what: &'static str, len: usize },
    #[error("edge {edge} references missing node {node}")]
    DanglingEdge { edge: u32, node: u32 },
    #[error("edge {edge} has type {kind} but cond=false (only CD edges may be false)")]
    FalseCondOnNonCd { edge: u32, kind: EdgeKind },
    #[error("node {node} has depth {depth}, expected {expected}")]
    InconsistentDepth { node: u32, depth: u32, expected: u32 },
    #[error("neighbor selector must contain at least one edge type")]
    EmptySelector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Node {
    pub label: NodeLabel,
    pub depth: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub src: u32,
    pub dst: u32,
    pub kind: EdgeKind,
    pub cond: bool,
}

/// Immutable verification graph with precomputed outgoing adjacency.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerificationGraph {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    outgoing: Vec<Vec<u32>>,
}

impl VerificationGraph {
    /// Build a graph from dense node and edge lists (ids are list positions),
    /// validating every invariant.
    pub fn new(nodes: Vec<Node>, edges: Vec<Edge>) -> Result<Self, GraphError> {
        let n = nodes.len() as u32;
        let mut sd_parent_depth: Vec<Option<u32>> = vec![None; nodes.len()];
        for (id, e) in edges.iter().enumerate() {
            let id = id as u32;
            for node in [e.src, e.dst] {
                if node >= n {
                    return Err(GraphError::DanglingEdge { edge: id, node });
                }
            }
            if !e.cond && e.kind != EdgeKind::CD {
                return Err(GraphError::FalseCondOnNonCd { edge: id, kind: e.kind });
            }
            if e.kind == EdgeKind::SD {
                let expected = nodes[e.src as usize].depth + 1;
                let child = &nodes[e.dst as usize];
                if child.depth != expected {
                    return Err(GraphError::InconsistentDepth {
                        node: e.dst,
                        depth: child.depth,
                        expected,
                    });
                }
                sd_parent_depth[e.dst as usize] = Some(expected);
            }
        }
        for (id, node) in nodes.iter().enumerate() {
            if sd_parent_depth[id].is_none() && node.depth != 0 {
                return Err(GraphError::InconsistentDepth {
                    node: id as u32,
                    depth: node.depth,
                    expected: 0,
                });
            }
        }

        let mut outgoing = vec![Vec::new(); nodes.len()];
        for (id, e) in edges.iter().enumerate() {
            outgoing[e.src as usize].push(id as u32);
        }
        Ok(VerificationGraph { nodes, edges, outgoing })
    }

    /// Build a graph from explicitly numbered nodes and edges in any order.
    /// The ids must form `0..len` exactly.
    pub fn from_numbered(
        mut nodes: Vec<(u32, Node)>,
        mut edges: Vec<(u32, Edge)>,
    ) -> Result<Self, GraphError> {
        nodes.sort_by_key(|(id, _)| *id);
        if nodes.iter().enumerate().any(|(i, (id, _))| *id as usize != i) {
            return Err(GraphError::NonDenseIds { what: "node", len: nodes.len() });
        }
        edges.sort_by_key(|(id, _)| *id);
        if edges.iter().enumerate().any(|(i, (id, _))| *id as usize != i) {
            return Err(GraphError::NonDenseIds { what: "edge", len: edges.len() });
        }
        Self::new(
            nodes.into_iter().map(|(_, n)| n).collect(),
            edges.into_iter().map(|(_, e)| e).collect(),
        )
    }

    pub fn empty() -> Self {
        VerificationGraph { nodes: Vec::new(), edges: Vec::new(), outgoing: Vec::new() }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn max_depth(&self) -> u32 {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    /// Outgoing edges of `node` whose type is selected, ascending by edge id.
    pub fn neighbors(&self, node: u32, sel: NeighborSelector) -> Result<Vec<u32>, GraphError> {
        let out = self.outgoing.get(node as usize).ok_or(GraphError::UnknownNode(node))?;
        Ok(self.selected_out(out, sel).collect())
    }

    pub(crate) fn neighbors_iter(
        &self,
        node: usize,
        sel: NeighborSelector,
    ) -> impl Iterator<Item = u32> + '_ {
        self.selected_out(&self.outgoing[node], sel)
    }

    fn selected_out<'a>(
        &'a self,
        out: &'a [u32],
        sel: NeighborSelector,
    ) -> impl Iterator<Item = u32> + 'a {
        out.iter().copied().filter(move |&e| sel.contains(self.edges[e as usize].kind))
    }
}

/// Non-empty set of edge kinds; picks the outgoing edges considered during
/// relabelling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NeighborSelector(u8);

impl NeighborSelector {
    pub fn new(kinds: &[EdgeKind]) -> Result<Self, GraphError> {
        let mask = kinds.iter().fold(0u8, |m, k| m | k.bit());
        if mask == 0 {
            return Err(GraphError::EmptySelector);
        }
        Ok(NeighborSelector(mask))
    }

    pub fn single(kind: EdgeKind) -> Self {
        NeighborSelector(kind.bit())
    }

    pub fn all() -> Self {
        NeighborSelector(0b1111)
    }

    pub fn contains(self, kind: EdgeKind) -> bool {
        self.0 & kind.bit() != 0
    }

    pub fn is_subset_of(self, other: NeighborSelector) -> bool {
        self.0 & !other.0 == 0
    }

    /// Selected kinds in canonical order (CF, CD, DD, SD).
    pub fn kinds(self) -> Vec<EdgeKind> {
        EdgeKind::ALL.into_iter().filter(|k| self.contains(*k)).collect()
    }
}

impl fmt::Display for NeighborSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, k) in self.kinds().into_iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str(k.name())?;
        }
        Ok(())
    }
}

impl FromStr for NeighborSelector {
    type Err = GraphError;

    /// Parses a comma separated list such as `CF,CD`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let kinds = s
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(EdgeKind::from_str)
            .collect::<Result<Vec<_>, _>>()?;
        NeighborSelector::new(&kinds)
    }
}
