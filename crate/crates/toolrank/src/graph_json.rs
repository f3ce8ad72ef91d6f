//! Graph files: `{"nodes": [{"id", "label", "depth"}], "edges": [{"id", "src", "dst", "type", "cond"}]}`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use toolrank_core::graph::{Edge, EdgeKind, GraphError, Node, NodeLabel};
use toolrank_core::VerificationGraph;

use crate::Error;

/// Bumped when the node label vocabulary changes.
pub const FORMAT_VERSION: u32 = toolrank_core::graph::LABEL_VOCABULARY_VERSION;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphFile {
    #[serde(default = "default_version")]
    vocabulary: u32,
    nodes: Vec<NodeRecord>,
    edges: Vec<EdgeRecord>,
}

fn default_version() -> u32 {
    FORMAT_VERSION
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeRecord {
    id: u32,
    label: String,
    depth: u32,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeRecord {
    id: u32,
    src: u32,
    dst: u32,
    #[serde(rename = "type")]
    kind: String,
    cond: bool,
}

pub fn to_json(g: &VerificationGraph) -> String {
    let file = GraphFile {
        vocabulary: FORMAT_VERSION,
        nodes: g
            .nodes()
            .iter()
            .enumerate()
            .map(|(id, n)| NodeRecord { id: id as u32, label: n.label.name().into(), depth: n.depth })
            .collect(),
        edges: g
            .edges()
            .iter()
            .enumerate()
            .map(|(id, e)| EdgeRecord { id: id as u32, src: e.src, dst: e.dst, kind: e.kind.name().into(), cond: e.cond })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("graph serializes")
}

pub fn from_json(text: &str) -> Result<VerificationGraph, Error> {
    let file: GraphFile = serde_json::from_str(text)?;
    if file.vocabulary != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "graph uses label vocabulary version {}, this build reads version {FORMAT_VERSION}",
            file.vocabulary
        )));
    }
    let nodes = file
        .nodes
        .into_iter()
        .map(|n| {
            let label = NodeLabel::from_name(&n.label).ok_or(GraphError::UnknownLabel(n.label))?;
            Ok((n.id, Node { label, depth: n.depth }))
        })
        .collect::<Result<Vec<_>, GraphError>>()?;
    let edges = file
        .edges
        .into_iter()
        .map(|e| {
            let kind: EdgeKind = e.kind.parse()?;
            Ok((e.id, Edge { src: e.src, dst: e.dst, kind, cond: e.cond }))
        })
        .collect::<Result<Vec<_>, GraphError>>()?;
    Ok(VerificationGraph::from_numbered(nodes, edges)?)
}

pub fn load_graph(path: &Path) -> Result<VerificationGraph, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_json(&text).map_err(|e| e.at(path))
}

pub fn save_graph(path: &Path, g: &VerificationGraph) -> Result<(), Error> {
    fs::write(path, to_json(g)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let g = toolrank_core::frontend::extract("int x = input(); while (x > 0) x--; assert(x <= 0);").unwrap();
        assert_eq!(from_json(&to_json(&g)).unwrap(), g);
    }

    #[test]
    fn rejects_bad_files() {
        let bad_label = r#"{"nodes":[{"id":0,"label":"Goto","depth":0}],"edges":[]}"#;
        assert!(matches!(from_json(bad_label), Err(Error::Graph(GraphError::UnknownLabel(_)))));
        let bad_cond = r#"{"nodes":[{"id":0,"label":"Assign","depth":0},{"id":1,"label":"Assert","depth":0}],
            "edges":[{"id":0,"src":0,"dst":1,"type":"CF","cond":false}]}"#;
        assert!(matches!(from_json(bad_cond), Err(Error::Graph(GraphError::FalseCondOnNonCd { .. }))));
        let dangling = r#"{"nodes":[{"id":0,"label":"Assign","depth":0}],
            "edges":[{"id":0,"src":0,"dst":4,"type":"DD","cond":true}]}"#;
        assert!(matches!(from_json(dangling), Err(Error::Graph(GraphError::DanglingEdge { .. }))));
        let version = r#"{"vocabulary":99,"nodes":[],"edges":[]}"#;
        assert!(matches!(from_json(version), Err(Error::Format(_))));
    }
}
