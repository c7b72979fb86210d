//! Invention-graph data model: nodes carrying feature or relationship text,
//! typed edges, validation rules and the adjacency structure consumed by the
//! encoder.
//!
//! Edges are stored directed (parent to child for `PartOf`/`ExampleOf`,
//! relationship node to participant for `Functional`); attention adjacency is
//! symmetrized and every node receives a self-loop.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Index of a node within one graph; dense in `[0, node_count)`.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeRole {
    Feature,
    Relationship,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub text: String,
    pub role: NodeRole,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    PartOf,
    ExampleOf,
    Functional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub src: NodeId,
    pub dst: NodeId,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphKind {
    FirstClaim,
    AllClaims,
    Description,
}

impl GraphKind {
    pub const ALL: [GraphKind; 3] =
        [GraphKind::FirstClaim, GraphKind::AllClaims, GraphKind::Description];

    pub fn as_str(self) -> &'static str {
        match self {
            GraphKind::FirstClaim => "first_claim",
            GraphKind::AllClaims => "all_claims",
            GraphKind::Description => "description",
        }
    }
}

impl std::str::FromStr for GraphKind {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, GraphError> {
        match s {
            "first_claim" => Ok(GraphKind::FirstClaim),
            "all_claims" => Ok(GraphKind::AllClaims),
            "description" => Ok(GraphKind::Description),
            other => Err(GraphError::Format(format!("unknown graph kind `{other}`"))),
        }
    }
}

/// One invention graph: the unit of encoding. One JSON object per line in
/// corpus files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InventionGraph {
    pub doc_id: String,
    pub kind: GraphKind,
    pub root: NodeId,
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("invalid graph for doc `{doc_id}`: {report}")]
    Invalid { doc_id: String, report: ValidationReport },
    #[error("graph format error: {0}")]
    Format(String),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// A single invariant violation. Violations are data, not failures:
/// [`validate`] reports them all instead of aborting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EmptyGraph,
    DuplicateNodeId(NodeId),
    NonDenseNodeId(NodeId),
    EmptyNodeText(NodeId),
    DanglingEdge { src: NodeId, dst: NodeId },
    SelfLoopEdge(NodeId),
    DuplicateEdge(Edge),
    NotWeaklyConnected { reachable: usize, total: usize },
    RootMissing(NodeId),
    RootHasIncomingPartOf { root: NodeId, from: NodeId },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyGraph => write!(f, "graph has no nodes"),
            Violation::DuplicateNodeId(id) => write!(f, "duplicate node id {id}"),
            Violation::NonDenseNodeId(id) => {
                write!(f, "node id {id} outside [0, node_count)")
            }
            Violation::EmptyNodeText(id) => write!(f, "node {id} has empty text"),
            Violation::DanglingEdge { src, dst } => {
                write!(f, "dangling edge endpoint on edge {src}->{dst}")
            }
            Violation::SelfLoopEdge(id) => write!(f, "self-loop edge on node {id}"),
            Violation::DuplicateEdge(e) => {
                write!(f, "duplicate edge {}->{} ({:?})", e.src, e.dst, e.kind)
            }
            Violation::NotWeaklyConnected { reachable, total } => {
                write!(f, "graph not weakly connected ({reachable}/{total} nodes reachable)")
            }
            Violation::RootMissing(id) => write!(f, "root node {id} does not exist"),
            Violation::RootHasIncomingPartOf { root, from } => {
                write!(f, "root {root} has incoming part_of edge from {from}")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        let msgs: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", msgs.join("; "))
    }
}

/// Check every structural invariant and report all violations. Total over
/// arbitrary well-typed input.
pub fn validate(graph: &InventionGraph) -> ValidationReport {
    let mut report = ValidationReport::default();
    let n = graph.nodes.len();

    if n == 0 {
        report.violations.push(Violation::EmptyGraph);
        return report;
    }

    let mut seen = HashSet::new();
    for node in &graph.nodes {
        if !seen.insert(node.id) {
            report.violations.push(Violation::DuplicateNodeId(node.id));
        }
        if node.id.index() >= n {
            report.violations.push(Violation::NonDenseNodeId(node.id));
        }
        if node.text.split_whitespace().next().is_none() {
            report.violations.push(Violation::EmptyNodeText(node.id));
        }
    }

    let exists = |id: NodeId| seen.contains(&id) && id.index() < n;

    let mut edge_set = HashSet::new();
    for edge in &graph.edges {
        if !exists(edge.src) || !exists(edge.dst) {
            report.violations.push(Violation::DanglingEdge { src: edge.src, dst: edge.dst });
            continue;
        }
        if edge.src == edge.dst {
            report.violations.push(Violation::SelfLoopEdge(edge.src));
        }
        if !edge_set.insert((edge.src, edge.dst, edge.kind)) {
            report.violations.push(Violation::DuplicateEdge(*edge));
        }
    }

    if !exists(graph.root) {
        report.violations.push(Violation::RootMissing(graph.root));
    } else {
        for edge in &graph.edges {
            if edge.kind == EdgeKind::PartOf && edge.dst == graph.root && exists(edge.src) {
                report
                    .violations
                    .push(Violation::RootHasIncomingPartOf { root: graph.root, from: edge.src });
            }
        }
    }

    // Weak connectivity over valid ids only; undirected traversal from the
    // lowest node id.
    if report.violations.iter().all(|v| {
        !matches!(v, Violation::DuplicateNodeId(_) | Violation::NonDenseNodeId(_))
    }) {
        let mut adj = vec![Vec::new(); n];
        for edge in &graph.edges {
            if exists(edge.src) && exists(edge.dst) && edge.src != edge.dst {
                adj[edge.src.index()].push(edge.dst.index());
                adj[edge.dst.index()].push(edge.src.index());
            }
        }
        let mut visited = vec![false; n];
        let mut stack = vec![0usize];
        visited[0] = true;
        let mut reachable = 0usize;
        while let Some(v) = stack.pop() {
            reachable += 1;
            for &u in &adj[v] {
                if !visited[u] {
                    visited[u] = true;
                    stack.push(u);
                }
            }
        }
        if reachable != n {
            report.violations.push(Violation::NotWeaklyConnected { reachable, total: n });
        }
    }

    report
}

/// Compressed neighbor lists: symmetrized edges plus a self-loop on every
/// node, each list sorted by node id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Adjacency {
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
}

impl Adjacency {
    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Total neighbor-list entries (= attention pairs), self-loops included.
    pub fn entry_count(&self) -> usize {
        self.neighbors.len()
    }

    pub fn neighbors(&self, node: usize) -> &[u32] {
        &self.neighbors[self.offsets[node]..self.offsets[node + 1]]
    }

    /// Flattened (query node, key node) pairs grouped by query node in
    /// ascending order — the edge list sparse attention runs over.
    pub fn pairs(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.node_count()).flat_map(move |v| {
            self.neighbors(v).iter().map(move |&u| (v as u32, u))
        })
    }

    /// Per-query segment lengths, in query-node order.
    pub fn segment_lengths(&self) -> Vec<usize> {
        (0..self.node_count())
            .map(|v| self.offsets[v + 1] - self.offsets[v])
            .collect()
    }
}

/// Build the attention adjacency of a valid graph.
pub fn to_adjacency(graph: &InventionGraph) -> Result<Adjacency, GraphError> {
    let report = validate(graph);
    if !report.is_valid() {
        return Err(GraphError::Invalid { doc_id: graph.doc_id.clone(), report });
    }
    let n = graph.nodes.len();
    let mut lists: Vec<Vec<u32>> = (0..n).map(|v| vec![v as u32]).collect();
    for edge in &graph.edges {
        lists[edge.src.index()].push(edge.dst.0);
        lists[edge.dst.index()].push(edge.src.0);
    }
    let mut offsets = Vec::with_capacity(n + 1);
    let mut neighbors = Vec::new();
    offsets.push(0);
    for mut list in lists {
        list.sort_unstable();
        list.dedup();
        neighbors.extend_from_slice(&list);
        offsets.push(neighbors.len());
    }
    Ok(Adjacency { offsets, neighbors })
}

/// Serialize one graph as a JSON line (corpus file format).
pub fn to_json_line(graph: &InventionGraph) -> Result<String, GraphError> {
    Ok(serde_json::to_string(graph)?)
}

/// Parse and validate one JSON line. Schema violations surface as JSON
/// errors; invariant violations as [`GraphError::Invalid`].
pub fn from_json_line(line: &str) -> Result<InventionGraph, GraphError> {
    let graph: InventionGraph = serde_json::from_str(line)?;
    let report = validate(&graph);
    if !report.is_valid() {
        return Err(GraphError::Invalid { doc_id: graph.doc_id.clone(), report });
    }
    Ok(graph)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn feature(id: u32, text: &str) -> Node {
        Node { id: NodeId(id), text: text.to_string(), role: NodeRole::Feature }
    }

    fn graph(nodes: Vec<Node>, edges: Vec<Edge>) -> InventionGraph {
        InventionGraph {
            doc_id: "d0".into(),
            kind: GraphKind::FirstClaim,
            root: NodeId(0),
            nodes,
            edges,
        }
    }

    fn part_of(src: u32, dst: u32) -> Edge {
        Edge { src: NodeId(src), dst: NodeId(dst), kind: EdgeKind::PartOf }
    }

    #[test]
    fn single_node_graph_is_valid() {
        let g = graph(vec![feature(0, "widget")], vec![]);
        assert!(validate(&g).is_valid());
    }

    #[test]
    fn dangling_edge_reported() {
        let g = graph(vec![feature(0, "widget")], vec![part_of(0, 7)]);
        let report = validate(&g);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::DanglingEdge { dst: NodeId(7), .. })));
    }

    #[test]
    fn disconnected_nodes_reported() {
        let g = graph(vec![feature(0, "a"), feature(1, "b")], vec![]);
        let report = validate(&g);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::NotWeaklyConnected { reachable: 1, total: 2 })));
    }

    #[test]
    fn duplicate_node_id_reported() {
        let g = graph(vec![feature(0, "a"), feature(0, "b")], vec![]);
        assert!(!validate(&g).is_valid());
    }

    #[test]
    fn root_with_incoming_part_of_reported() {
        let g = graph(vec![feature(0, "a"), feature(1, "b")], vec![part_of(1, 0)]);
        let report = validate(&g);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::RootHasIncomingPartOf { .. })));
    }

    #[test]
    fn adjacency_single_node_self_loop() {
        let g = graph(vec![feature(0, "widget")], vec![]);
        let adj = to_adjacency(&g).unwrap();
        assert_eq!(adj.neighbors(0), &[0]);
        assert_eq!(adj.entry_count(), 1);
    }

    #[test]
    fn adjacency_symmetrizes_and_adds_self_loops() {
        let g = graph(vec![feature(0, "a"), feature(1, "b")], vec![part_of(0, 1)]);
        let adj = to_adjacency(&g).unwrap();
        assert_eq!(adj.neighbors(0), &[0, 1]);
        assert_eq!(adj.neighbors(1), &[0, 1]);
    }

    #[test]
    fn adjacency_chain() {
        let g = graph(
            vec![feature(0, "a"), feature(1, "b"), feature(2, "c")],
            vec![part_of(0, 1), part_of(1, 2)],
        );
        let adj = to_adjacency(&g).unwrap();
        assert_eq!(adj.neighbors(0), &[0, 1]);
        assert_eq!(adj.neighbors(1), &[0, 1, 2]);
        assert_eq!(adj.neighbors(2), &[1, 2]);
    }

    #[test]
    fn adjacency_rejects_invalid_graph() {
        let g = graph(vec![feature(0, "a")], vec![part_of(0, 3)]);
        assert!(to_adjacency(&g).is_err());
    }

    #[test]
    fn round_trip_identity() {
        let g = graph(
            vec![
                feature(0, "snowthrower"),
                feature(1, "frame"),
                Node { id: NodeId(2), text: "frame connects".into(), role: NodeRole::Relationship },
            ],
            vec![part_of(0, 1), Edge { src: NodeId(2), dst: NodeId(1), kind: EdgeKind::Functional }],
        );
        let line = to_json_line(&g).unwrap();
        let back = from_json_line(&line).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn missing_root_field_is_schema_error() {
        let line = r#"{"doc_id":"d","kind":"first_claim","nodes":[{"id":0,"text":"w","role":"feature"}],"edges":[]}"#;
        assert!(matches!(from_json_line(line), Err(GraphError::Json(_))));
    }

    #[test]
    fn duplicate_id_is_invariant_error_on_load() {
        let line = r#"{"doc_id":"d","kind":"first_claim","root":0,"nodes":[{"id":0,"text":"w","role":"feature"},{"id":0,"text":"x","role":"feature"}],"edges":[]}"#;
        assert!(matches!(from_json_line(line), Err(GraphError::Invalid { .. })));
    }

    #[test]
    fn kind_serialization_uses_snake_case() {
        let g = graph(vec![feature(0, "w")], vec![]);
        let line = to_json_line(&g).unwrap();
        assert!(line.contains(r#""kind":"first_claim""#));
        assert!(line.contains(r#""role":"feature""#));
    }
}
