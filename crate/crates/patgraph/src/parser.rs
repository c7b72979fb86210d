//! Rule-based conversion of claim and description text into invention
//! graphs.
//!
//! The ruleset is deliberately transparent and keyword-driven so outputs are
//! reproducible:
//!
//! - R1 preamble: text before the first relationship keyword yields the root
//!   feature (head phrase after the final comma, articles stripped).
//! - R2 hierarchy: `comprising`-style keywords open a child list split on
//!   `,` / `;` / `and`; children attach part-of to the current parent, and a
//!   keyword inside a list item makes that item the parent for the items
//!   that follow (left-to-right recursion; scopes are not popped).
//! - R3 example: `such as` / `for example` / `e.g.` attach example-of
//!   children to the preceding feature.
//! - R4 function: `wherein` and `for <verb>ing` clauses become relationship
//!   nodes holding the clause text, with functional edges to every
//!   previously created feature the clause mentions (or to the nearest
//!   preceding feature when fewer than two are mentioned).
//! - R5 normalization: lowercase, collapsed whitespace, parenthesized
//!   reference numerals stripped, `of claim N` references removed; identical
//!   feature phrases unify to one node.
//! - R6 fallback: keyword-free text becomes a single feature node.

use std::collections::HashMap;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{
    validate, Edge, EdgeKind, GraphKind, InventionGraph, Node, NodeId, NodeRole,
};

/// Hard cap on graph size; overflow nodes are dropped lowest-priority-first
/// (description-origin first) and logged in the trace.
pub const MAX_GRAPH_NODES: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatentDocument {
    pub doc_id: String,
    pub family_id: String,
    pub title: String,
    pub ipc_class: String,
    pub claims: Vec<String>,
    pub description: String,
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("claim text is empty or whitespace-only")]
    EmptyText,
    #[error("document `{0}` has no claims")]
    NoClaims(String),
    #[error("document `{0}` has an empty {1}")]
    EmptyField(&'static str, &'static str),
}

/// One rule firing: which rule, where it matched, and what it produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleFiring {
    pub rule_id: String,
    /// Which text the span refers to, e.g. `claim:0` or `sentence:3`.
    pub source: String,
    /// Byte span in the normalized source text.
    pub span: (usize, usize),
    pub nodes: Vec<NodeId>,
    pub edges: Vec<Edge>,
}

/// Ordered record of rule firings for one graph.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RuleTrace {
    pub firings: Vec<RuleFiring>,
    /// Texts of nodes dropped by the size cap.
    pub dropped: Vec<String>,
}

/// All three graphs of one document plus their traces.
#[derive(Debug, Clone)]
pub struct ParsedDocument {
    pub first_claim: InventionGraph,
    pub all_claims: InventionGraph,
    pub description: InventionGraph,
    pub traces: [RuleTrace; 3],
}

impl ParsedDocument {
    pub fn graphs(&self) -> [&InventionGraph; 3] {
        [&self.first_claim, &self.all_claims, &self.description]
    }
}

struct Rules {
    hierarchy: Regex,
    example: Regex,
    wherein: Regex,
    for_ing: Regex,
    ref_numeral: Regex,
    claim_prefix: Regex,
    claim_ref: Regex,
    item_sep: Regex,
    sentence_end: Regex,
}

fn rules() -> &'static Rules {
    use std::sync::OnceLock;
    static RULES: OnceLock<Rules> = OnceLock::new();
    RULES.get_or_init(|| Rules {
        hierarchy: Regex::new(
            r"\b(?:further\s+|additionally\s+)?(consisting of|comprising|comprises|including|includes|having|contains|containing)\b",
        )
        .unwrap(),
        example: Regex::new(r"\b(such as|for example)\b").unwrap(),
        wherein: Regex::new(r"\bwherein\b").unwrap(),
        for_ing: Regex::new(r"\bfor\s+([a-z]+ing)\b").unwrap(),
        ref_numeral: Regex::new(r"\(\s*\d+[a-z']*\s*\)").unwrap(),
        claim_prefix: Regex::new(r"^\s*\d+\s*[.)]\s*").unwrap(),
        claim_ref: Regex::new(r"\s+(?:of|according to|as claimed in)\s+claim\s+\d+\b").unwrap(),
        item_sep: Regex::new(r";|,|\band\b").unwrap(),
        sentence_end: Regex::new(r"[.!?]").unwrap(),
    })
}

/// Lowercase, rewrite `e.g.` to `for example` (keeps sentence splitting
/// sane), strip parenthesized reference numerals, collapse whitespace.
fn normalize_text(text: &str) -> String {
    let lower = text.to_lowercase().replace("e.g.", "for example");
    let stripped = rules().ref_numeral.replace_all(&lower, " ");
    stripped.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Normalize one feature phrase: drop leading articles, claim references
/// and surrounding punctuation.
fn normalize_phrase(phrase: &str) -> String {
    let no_ref = rules().claim_ref.replace_all(phrase, "");
    let mut words: Vec<&str> = no_ref.split_whitespace().collect();
    while let Some(first) = words.first() {
        let w = first.trim_matches(|c: char| !c.is_alphanumeric());
        if matches!(w, "a" | "an" | "the") {
            words.remove(0);
        } else {
            break;
        }
    }
    words.join(" ").trim_matches(|c: char| c == '.' || c == ',' || c == ';' || c == ':' || c == ' ').to_string()
}

/// Head phrase of a preamble: longest suffix after the final comma,
/// articles stripped.
fn head_phrase(preamble: &str) -> String {
    let trimmed = preamble.trim_end_matches(|c: char| c == ',' || c == ' ' || c == ':');
    let tail = match trimmed.rfind(',') {
        Some(pos) => &trimmed[pos + 1..],
        None => trimmed,
    };
    normalize_phrase(tail)
}

fn clause_text(raw: &str) -> String {
    raw.trim_matches(|c: char| c == '.' || c == ',' || c == ';' || c == ':' || c == ' ')
        .to_string()
}

/// Graph under construction. Feature phrases unify by normalized text;
/// relationship nodes are always distinct.
struct Builder {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    edge_set: std::collections::HashSet<(NodeId, NodeId, EdgeKind)>,
    feature_ids: HashMap<String, NodeId>,
    /// Drop priority per node: 0 first claim, 1 later claims, 2 description.
    rank: Vec<u8>,
    root: NodeId,
    trace: RuleTrace,
}

impl Builder {
    fn new() -> Self {
        Builder {
            nodes: Vec::new(),
            edges: Vec::new(),
            edge_set: std::collections::HashSet::new(),
            feature_ids: HashMap::new(),
            rank: Vec::new(),
            root: NodeId(0),
            trace: RuleTrace::default(),
        }
    }

    fn feature(&mut self, text: &str, rank: u8) -> (NodeId, bool) {
        if let Some(&id) = self.feature_ids.get(text) {
            if rank < self.rank[id.index()] {
                self.rank[id.index()] = rank;
            }
            return (id, false);
        }
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(Node { id, text: text.to_string(), role: NodeRole::Feature });
        self.feature_ids.insert(text.to_string(), id);
        self.rank.push(rank);
        (id, true)
    }

    fn relationship(&mut self, text: &str, rank: u8) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(Node { id, text: text.to_string(), role: NodeRole::Relationship });
        self.rank.push(rank);
        id
    }

    /// Add an edge unless it would be a self-loop, a duplicate, or an
    /// incoming part-of on the root.
    fn edge(&mut self, src: NodeId, dst: NodeId, kind: EdgeKind) -> Option<Edge> {
        if src == dst {
            return None;
        }
        if kind == EdgeKind::PartOf && dst == self.root {
            return None;
        }
        if !self.edge_set.insert((src, dst, kind)) {
            return None;
        }
        let e = Edge { src, dst, kind };
        self.edges.push(e);
        Some(e)
    }

    fn fire(&mut self, rule_id: &str, source: &str, span: (usize, usize), nodes: Vec<NodeId>, edges: Vec<Edge>) {
        self.trace.firings.push(RuleFiring {
            rule_id: rule_id.to_string(),
            source: source.to_string(),
            span,
            nodes,
            edges,
        });
    }

    fn finish(mut self, doc_id: &str, kind: GraphKind) -> InventionGraph {
        self.attach_orphans();
        while self.nodes.len() > MAX_GRAPH_NODES {
            self.drop_one();
        }
        InventionGraph {
            doc_id: doc_id.to_string(),
            kind,
            root: self.root,
            nodes: self.nodes,
            edges: self.edges,
        }
    }

    /// Connectivity guarantee: attach any node unreachable from the root.
    fn attach_orphans(&mut self) {
        let n = self.nodes.len();
        if n <= 1 {
            return;
        }
        let mut adj = vec![Vec::new(); n];
        for e in &self.edges {
            adj[e.src.index()].push(e.dst.index());
            adj[e.dst.index()].push(e.src.index());
        }
        let mut visited = vec![false; n];
        let mut stack = vec![self.root.index()];
        visited[self.root.index()] = true;
        while let Some(v) = stack.pop() {
            for &u in &adj[v] {
                if !visited[u] {
                    visited[u] = true;
                    stack.push(u);
                }
            }
        }
        for i in 0..n {
            if !visited[i] {
                let id = self.nodes[i].id;
                let added = match self.nodes[i].role {
                    NodeRole::Feature => self.edge(self.root, id, EdgeKind::PartOf),
                    NodeRole::Relationship => self.edge(id, self.root, EdgeKind::Functional),
                };
                if let Some(e) = added {
                    self.fire("orphan", "builder", (0, 0), vec![], vec![e]);
                }
                // Mark the whole component reachable now.
                let mut stack = vec![i];
                visited[i] = true;
                while let Some(v) = stack.pop() {
                    for &u in &adj[v] {
                        if !visited[u] {
                            visited[u] = true;
                            stack.push(u);
                        }
                    }
                }
            }
        }
    }

    /// Drop the highest-rank, highest-id non-root node, re-attaching its
    /// children to its parent.
    fn drop_one(&mut self) {
        let victim = self
            .nodes
            .iter()
            .filter(|n| n.id != self.root)
            .max_by_key(|n| (self.rank[n.id.index()], n.id))
            .map(|n| n.id)
            .expect("cap drop requires more than one node");
        self.trace.dropped.push(self.nodes[victim.index()].text.clone());
        let rank = self.rank.remove(victim.index());
        let _ = rank;
        let text = self.nodes[victim.index()].text.clone();
        if self.nodes[victim.index()].role == NodeRole::Feature {
            self.feature_ids.remove(&text);
        }
        let (nodes, edges, root) =
            remove_node_reattach(&self.nodes, &self.edges, self.root, victim);
        self.nodes = nodes;
        self.edges = edges;
        self.root = root;
        self.edge_set = self.edges.iter().map(|e| (e.src, e.dst, e.kind)).collect();
        // Feature ids shifted; rebuild the unification map.
        self.feature_ids = self
            .nodes
            .iter()
            .filter(|n| n.role == NodeRole::Feature)
            .map(|n| (n.text.clone(), n.id))
            .collect();
    }
}

/// Remove one node: hierarchy children re-attach to the removed node's
/// parent (nearest incoming part-of/example-of source, else the root),
/// functional edges touching the node are deleted, and ids are compacted.
pub fn remove_node_reattach(
    nodes: &[Node],
    edges: &[Edge],
    root: NodeId,
    victim: NodeId,
) -> (Vec<Node>, Vec<Edge>, NodeId) {
    assert_ne!(victim, root, "the root node cannot be removed");
    let parent = edges
        .iter()
        .find(|e| {
            e.dst == victim && matches!(e.kind, EdgeKind::PartOf | EdgeKind::ExampleOf)
        })
        .map(|e| e.src)
        .unwrap_or(root);

    let mut new_edges: Vec<Edge> = Vec::with_capacity(edges.len());
    let mut seen = std::collections::HashSet::new();
    for e in edges {
        let mapped = if e.src == victim || e.dst == victim {
            match e.kind {
                EdgeKind::Functional => continue,
                EdgeKind::PartOf | EdgeKind::ExampleOf => {
                    if e.src == victim {
                        // Child re-attaches to the dropped node's parent.
                        Edge { src: parent, dst: e.dst, kind: e.kind }
                    } else {
                        continue;
                    }
                }
            }
        } else {
            *e
        };
        if mapped.src == mapped.dst || (mapped.kind == EdgeKind::PartOf && mapped.dst == root) {
            continue;
        }
        if seen.insert((mapped.src, mapped.dst, mapped.kind)) {
            new_edges.push(mapped);
        }
    }

    // Re-attach nodes left without any edge.
    let mut degree = vec![0usize; nodes.len()];
    for e in &new_edges {
        degree[e.src.index()] += 1;
        degree[e.dst.index()] += 1;
    }
    for node in nodes {
        if node.id == victim || node.id == root || degree[node.id.index()] > 0 {
            continue;
        }
        if nodes.len() > 2 {
            let e = match node.role {
                NodeRole::Feature => Edge { src: parent, dst: node.id, kind: EdgeKind::PartOf },
                NodeRole::Relationship => {
                    Edge { src: node.id, dst: parent, kind: EdgeKind::Functional }
                }
            };
            let e = if e.src == e.dst {
                match node.role {
                    NodeRole::Feature => Edge { src: root, dst: node.id, kind: EdgeKind::PartOf },
                    NodeRole::Relationship => {
                        Edge { src: node.id, dst: root, kind: EdgeKind::Functional }
                    }
                }
            } else {
                e
            };
            if e.src != e.dst && seen.insert((e.src, e.dst, e.kind)) {
                new_edges.push(e);
            }
        } else {
            let e = match node.role {
                NodeRole::Feature => Edge { src: root, dst: node.id, kind: EdgeKind::PartOf },
                NodeRole::Relationship => {
                    Edge { src: node.id, dst: root, kind: EdgeKind::Functional }
                }
            };
            if e.src != e.dst && seen.insert((e.src, e.dst, e.kind)) {
                new_edges.push(e);
            }
        }
    }

    let remap = |id: NodeId| -> NodeId {
        if id.0 > victim.0 {
            NodeId(id.0 - 1)
        } else {
            id
        }
    };
    let new_nodes: Vec<Node> = nodes
        .iter()
        .filter(|n| n.id != victim)
        .map(|n| Node { id: remap(n.id), text: n.text.clone(), role: n.role })
        .collect();
    let new_edges = new_edges
        .iter()
        .map(|e| Edge { src: remap(e.src), dst: remap(e.dst), kind: e.kind })
        .collect();
    (new_nodes, new_edges, remap(root))
}

/// Parse one claim into a first-claim graph. `doc_id` is left empty; callers
/// building corpora fill it in via [`parse_document`].
pub fn parse_claim(text: &str) -> Result<(InventionGraph, RuleTrace), ParseError> {
    let mut builder = Builder::new();
    parse_into(&mut builder, text, "claim:0", 0, None)?;
    let trace = builder.trace.clone();
    let graph = builder.finish("", GraphKind::FirstClaim);
    debug_assert!(validate(&graph).is_valid(), "parser produced invalid graph");
    Ok((graph, trace))
}

/// Parse one claim or sentence into `builder`. Returns the local root node.
/// `attach_to` carries the graph root for non-first claims and description
/// sentences: a fresh local root is attached part-of under it.
fn parse_into(
    builder: &mut Builder,
    text: &str,
    source: &str,
    rank: u8,
    attach_to: Option<NodeId>,
) -> Result<NodeId, ParseError> {
    let normalized = normalize_text(text);
    let normalized = rules().claim_prefix.replace(&normalized, "").to_string();
    if normalized.is_empty() {
        return Err(ParseError::EmptyText);
    }

    let r = rules();

    // Split off wherein clauses up front; the remainder is structural.
    let mut wherein_spans: Vec<(usize, usize)> = Vec::new(); // span of clause text
    let mut structural_end = normalized.len();
    let marks: Vec<_> = r.wherein.find_iter(&normalized).collect();
    for (i, m) in marks.iter().enumerate() {
        if i == 0 {
            structural_end = m.start();
        }
        let end = marks.get(i + 1).map(|n| n.start()).unwrap_or(normalized.len());
        wherein_spans.push((m.end(), end));
    }
    let structural = &normalized[..structural_end];

    let first_kw = r.hierarchy.find(structural);
    let has_any_keyword = first_kw.is_some()
        || !wherein_spans.is_empty()
        || r.example.is_match(structural)
        || r.for_ing.is_match(structural);

    // R6 fallback: keyword-free text is one feature node.
    if !has_any_keyword {
        let phrase = normalize_phrase(&normalized);
        if phrase.is_empty() {
            return Err(ParseError::EmptyText);
        }
        let (id, created) = builder.feature(&phrase, rank);
        if builder.nodes.len() == 1 {
            builder.root = id;
        }
        let mut edges = Vec::new();
        if let Some(parent) = attach_to {
            if let Some(e) = builder.edge(parent, id, EdgeKind::PartOf) {
                edges.push(e);
            }
        }
        let nodes = if created { vec![id] } else { vec![] };
        builder.fire("R6", source, (0, normalized.len()), nodes, edges);
        return Ok(id);
    }

    // R1: preamble -> local root feature.
    let preamble_end = first_kw.as_ref().map(|m| m.start()).unwrap_or(structural.len());
    let preamble = &structural[..preamble_end];
    let preamble_full = normalize_phrase(preamble);
    let mut head = head_phrase(preamble);
    let mut preamble_clause: Option<String> = None;
    if let Some(m) = r.for_ing.find(&head) {
        // "an apparatus for cleaning ..." — head before the clause,
        // the whole phrase kept as a relationship snippet.
        preamble_clause = Some(head.clone());
        head = head[..m.start()].trim().to_string();
        let _ = m;
    }
    if head.is_empty() {
        head = if preamble_full.is_empty() { "claim".to_string() } else { preamble_full };
    }
    let (local_root, root_created) = builder.feature(&head, rank);
    if builder.nodes.len() == 1 || builder.feature_ids.len() == 1 && builder.nodes.len() == 1 {
        builder.root = local_root;
    }
    if root_created && builder.nodes.len() == 1 {
        builder.root = local_root;
    }
    let mut r1_edges = Vec::new();
    if let Some(parent) = attach_to {
        if let Some(e) = builder.edge(parent, local_root, EdgeKind::PartOf) {
            r1_edges.push(e);
        }
    }
    builder.fire(
        "R1",
        source,
        (0, preamble_end),
        if root_created { vec![local_root] } else { vec![] },
        r1_edges,
    );
    let mut last_feature = local_root;

    if let Some(clause) = preamble_clause {
        apply_functional(builder, &clause, source, (0, preamble_end), rank, last_feature);
    }

    // R2/R3: walk list items left to right.
    if let Some(kw) = first_kw {
        let list_start = kw.end();
        let list = &structural[list_start..];
        let mut parent = local_root;
        let mut cursor = 0usize;
        let mut bounds: Vec<(usize, usize)> = Vec::new();
        for sep in r.item_sep.find_iter(list) {
            bounds.push((cursor, sep.start()));
            cursor = sep.end();
        }
        bounds.push((cursor, list.len()));

        let mut pending_example_parent: Option<NodeId> = None;
        for (start, end) in bounds {
            let raw = &list[start..end];
            let span = (list_start + start, list_start + end);
            if raw.trim().is_empty() {
                continue;
            }

            // R3: items opened by an example keyword list example-of children
            // of the preceding feature.
            if let Some(m) = r.example.find(raw) {
                let pre = &raw[..m.start()];
                let post = &raw[m.end()..];
                let mut source_feature = last_feature;
                if !normalize_phrase(pre).is_empty() {
                    let (id, created, edge) =
                        add_feature_item(builder, pre, parent, rank);
                    builder.fire(
                        "R2",
                        source,
                        span,
                        if created { vec![id] } else { vec![] },
                        edge.into_iter().collect(),
                    );
                    last_feature = id;
                    source_feature = id;
                }
                let phrase = normalize_phrase(post);
                if !phrase.is_empty() {
                    let (id, created) = builder.feature(&phrase, rank);
                    let e = builder.edge(source_feature, id, EdgeKind::ExampleOf);
                    builder.fire(
                        "R3",
                        source,
                        span,
                        if created { vec![id] } else { vec![] },
                        e.into_iter().collect(),
                    );
                    last_feature = id;
                }
                pending_example_parent = Some(source_feature);
                continue;
            }
            // Continuation of an example list keeps attaching to the same
            // source feature until a non-example item arrives.
            if let Some(src) = pending_example_parent {
                // Heuristic: a bare item right after an example keyword item
                // belongs to the comprising list again.
                let _ = src;
                pending_example_parent = None;
            }

            // Nested hierarchy keyword inside the item: the head becomes the
            // parent for everything that follows.
            if let Some(m) = r.hierarchy.find(raw) {
                let head_part = &raw[..m.start()];
                let tail = &raw[m.end()..];
                let phrase = normalize_phrase(head_part);
                if !phrase.is_empty() {
                    let (id, created, edge) =
                        add_feature_item(builder, head_part, parent, rank);
                    builder.fire(
                        "R2",
                        source,
                        span,
                        if created { vec![id] } else { vec![] },
                        edge.into_iter().collect(),
                    );
                    last_feature = id;
                    parent = id;
                }
                let tail_phrase = normalize_phrase(tail);
                if !tail_phrase.is_empty() {
                    let (id, created, edge) = add_feature_item(builder, tail, parent, rank);
                    builder.fire(
                        "R2",
                        source,
                        span,
                        if created { vec![id] } else { vec![] },
                        edge.into_iter().collect(),
                    );
                    last_feature = id;
                }
                continue;
            }

            // R4 inline: "a frame for connecting x and y".
            if let Some(m) = r.for_ing.find(raw) {
                let head_part = &raw[..m.start()];
                let phrase = normalize_phrase(head_part);
                if !phrase.is_empty() {
                    let (id, created, edge) =
                        add_feature_item(builder, head_part, parent, rank);
                    builder.fire(
                        "R2",
                        source,
                        span,
                        if created { vec![id] } else { vec![] },
                        edge.into_iter().collect(),
                    );
                    last_feature = id;
                }
                let clause = normalize_phrase(raw);
                if !clause.is_empty() {
                    apply_functional(builder, &clause, source, span, rank, last_feature);
                }
                continue;
            }

            let phrase = normalize_phrase(raw);
            if phrase.is_empty() {
                continue;
            }
            let (id, created, edge) = add_feature_item(builder, raw, parent, rank);
            builder.fire(
                "R2",
                source,
                span,
                if created { vec![id] } else { vec![] },
                edge.into_iter().collect(),
            );
            last_feature = id;
        }
    }

    // R4: wherein clauses.
    for (start, end) in wherein_spans {
        let clause = clause_text(&normalized[start..end]);
        if clause.is_empty() {
            continue;
        }
        apply_functional(builder, &clause, source, (start, end), rank, last_feature);
    }

    Ok(local_root)
}

fn add_feature_item(
    builder: &mut Builder,
    raw: &str,
    parent: NodeId,
    rank: u8,
) -> (NodeId, bool, Option<Edge>) {
    let phrase = normalize_phrase(raw);
    let (id, created) = builder.feature(&phrase, rank);
    let edge = builder.edge(parent, id, EdgeKind::PartOf);
    (id, created, edge)
}

/// R4: relationship node for a functional clause, with edges to every
/// previously created feature it mentions (>= 2), or to the nearest
/// preceding feature otherwise.
fn apply_functional(
    builder: &mut Builder,
    clause: &str,
    source: &str,
    span: (usize, usize),
    rank: u8,
    nearest_feature: NodeId,
) {
    let mentioned: Vec<NodeId> = builder
        .nodes
        .iter()
        .filter(|n| n.role == NodeRole::Feature)
        .filter(|n| mentions(clause, &n.text))
        .map(|n| n.id)
        .collect();
    let rel = builder.relationship(clause, rank);
    let mut edges = Vec::new();
    if mentioned.len() >= 2 {
        for id in mentioned {
            if let Some(e) = builder.edge(rel, id, EdgeKind::Functional) {
                edges.push(e);
            }
        }
    } else if let Some(e) = builder.edge(rel, nearest_feature, EdgeKind::Functional) {
        edges.push(e);
    }
    builder.fire("R4", source, span, vec![rel], edges);
}

/// Word-bounded substring check: `needle` appears in `haystack` with
/// non-alphanumeric characters (or text boundaries) on both sides.
fn mentions(haystack: &str, needle: &str) -> bool {
    if needle.is_empty() {
        return false;
    }
    let h = haystack.as_bytes();
    let mut from = 0;
    while let Some(pos) = haystack[from..].find(needle) {
        let start = from + pos;
        let end = start + needle.len();
        let left_ok = start == 0 || !(h[start - 1] as char).is_alphanumeric();
        let right_ok = end == h.len() || !(h[end] as char).is_alphanumeric();
        if left_ok && right_ok {
            return true;
        }
        from = start + 1;
    }
    false
}

/// Parse a document into its three graphs: first claim only, all claims,
/// and claims plus keyword-bearing description sentences.
pub fn parse_document(doc: &PatentDocument) -> Result<ParsedDocument, ParseError> {
    if doc.claims.is_empty() {
        return Err(ParseError::NoClaims(doc.doc_id.clone()));
    }
    if doc.doc_id.trim().is_empty() {
        return Err(ParseError::EmptyField("doc_id", "value"));
    }
    if doc.ipc_class.trim().is_empty() {
        return Err(ParseError::EmptyField("ipc_class", "value"));
    }

    // First claim graph.
    let mut fc = Builder::new();
    parse_into(&mut fc, &doc.claims[0], "claim:0", 0, None)?;
    let fc_trace = fc.trace.clone();
    let first_claim = fc.finish(&doc.doc_id, GraphKind::FirstClaim);

    // All claims graph: later claim roots attach part-of under the claim-1
    // root (unification usually collapses them onto it).
    let mut ac = Builder::new();
    let root = parse_into(&mut ac, &doc.claims[0], "claim:0", 0, None)?;
    for (i, claim) in doc.claims.iter().enumerate().skip(1) {
        let source = format!("claim:{i}");
        match parse_into(&mut ac, claim, &source, 1, Some(root)) {
            Ok(_) | Err(ParseError::EmptyText) => {}
            Err(e) => return Err(e),
        }
    }
    let ac_trace = ac.trace.clone();
    let all_claims_builder_nodes = ac.nodes.clone();
    let all_claims_builder_edges = ac.edges.clone();
    let all_claims_rank = ac.rank.clone();
    let all_claims_features = ac.feature_ids.clone();
    let all_claims_root = ac.root;
    let all_claims = ac.finish(&doc.doc_id, GraphKind::AllClaims);

    // Description graph extends the all-claims builder with keyword-bearing
    // sentences.
    let mut dc = Builder {
        nodes: all_claims_builder_nodes,
        edges: all_claims_builder_edges.clone(),
        edge_set: all_claims_builder_edges.iter().map(|e| (e.src, e.dst, e.kind)).collect(),
        feature_ids: all_claims_features,
        rank: all_claims_rank,
        root: all_claims_root,
        trace: ac_trace.clone(),
    };
    let r = rules();
    let normalized_desc = normalize_text(&doc.description);
    let mut sent_start = 0usize;
    let mut sentence_idx = 0usize;
    let mut spans: Vec<(usize, usize)> = Vec::new();
    for m in r.sentence_end.find_iter(&normalized_desc) {
        spans.push((sent_start, m.start()));
        sent_start = m.end();
    }
    spans.push((sent_start, normalized_desc.len()));
    for (start, end) in spans {
        let sentence = normalized_desc[start..end].trim();
        if sentence.is_empty() {
            continue;
        }
        let keyworded = r.hierarchy.is_match(sentence)
            || r.example.is_match(sentence)
            || r.wherein.is_match(sentence)
            || r.for_ing.is_match(sentence);
        if keyworded {
            let source = format!("sentence:{sentence_idx}");
            match parse_into(&mut dc, sentence, &source, 2, Some(all_claims_root)) {
                Ok(_) | Err(ParseError::EmptyText) => {}
                Err(e) => return Err(e),
            }
        }
        sentence_idx += 1;
    }
    let dc_trace = dc.trace.clone();
    let description = dc.finish(&doc.doc_id, GraphKind::Description);

    for g in [&first_claim, &all_claims, &description] {
        debug_assert!(validate(g).is_valid(), "parser produced invalid graph: {}", validate(g));
    }

    Ok(ParsedDocument {
        first_claim,
        all_claims,
        description,
        traces: [fc_trace, ac_trace, dc_trace],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{to_json_line, validate};

    fn doc(claims: &[&str], description: &str) -> PatentDocument {
        PatentDocument {
            doc_id: "d1".into(),
            family_id: "f1".into(),
            title: "t".into(),
            ipc_class: "E01H".into(),
            claims: claims.iter().map(|s| s.to_string()).collect(),
            description: description.into(),
        }
    }

    fn node_texts(g: &InventionGraph) -> Vec<&str> {
        g.nodes.iter().map(|n| n.text.as_str()).collect()
    }

    fn find(g: &InventionGraph, text: &str) -> NodeId {
        g.nodes.iter().find(|n| n.text == text).map(|n| n.id).unwrap()
    }

    fn has_edge(g: &InventionGraph, src: &str, dst: &str, kind: EdgeKind) -> bool {
        let s = find(g, src);
        let d = find(g, dst);
        g.edges.iter().any(|e| e.src == s && e.dst == d && e.kind == kind)
    }

    // Manual application of R1-R5 to the snowthrower claim.
    #[test]
    fn snowthrower_claim_structure() {
        let text = "1. A snowthrower comprising a frame, a motor and an auger housing, \
                    wherein the frame connects the motor and the auger housing.";
        let (g, trace) = parse_claim(text).unwrap();
        assert!(validate(&g).is_valid(), "{}", validate(&g));

        let rel = "the frame connects the motor and the auger housing";
        assert_eq!(
            node_texts(&g),
            vec!["snowthrower", "frame", "motor", "auger housing", rel]
        );
        assert_eq!(g.root, find(&g, "snowthrower"));
        assert_eq!(g.nodes[find(&g, rel).index()].role, NodeRole::Relationship);

        assert!(has_edge(&g, "snowthrower", "frame", EdgeKind::PartOf));
        assert!(has_edge(&g, "snowthrower", "motor", EdgeKind::PartOf));
        assert!(has_edge(&g, "snowthrower", "auger housing", EdgeKind::PartOf));
        assert!(has_edge(&g, rel, "frame", EdgeKind::Functional));
        assert!(has_edge(&g, rel, "motor", EdgeKind::Functional));
        assert!(has_edge(&g, rel, "auger housing", EdgeKind::Functional));
        assert_eq!(g.edges.len(), 6);

        // Every node traces back to exactly one firing.
        let mut traced: Vec<NodeId> = trace.firings.iter().flat_map(|f| f.nodes.clone()).collect();
        traced.sort();
        let mut all: Vec<NodeId> = g.nodes.iter().map(|n| n.id).collect();
        all.sort();
        assert_eq!(traced, all);
    }

    // R6 fallback.
    #[test]
    fn bare_noun_phrase_is_single_node() {
        let (g, trace) = parse_claim("A widget.").unwrap();
        assert_eq!(node_texts(&g), vec!["widget"]);
        assert!(g.edges.is_empty());
        assert_eq!(trace.firings.len(), 1);
        assert_eq!(trace.firings[0].rule_id, "R6");
    }

    // Manual application of R2 then R3.
    #[test]
    fn example_of_edges() {
        let (g, _) = parse_claim("A pump comprising a valve, such as a ball valve.").unwrap();
        assert_eq!(node_texts(&g), vec!["pump", "valve", "ball valve"]);
        assert!(has_edge(&g, "pump", "valve", EdgeKind::PartOf));
        assert!(has_edge(&g, "valve", "ball valve", EdgeKind::ExampleOf));
        assert_eq!(g.edges.len(), 2);
    }

    #[test]
    fn nested_hierarchy_keyword_switches_parent() {
        let (g, _) =
            parse_claim("A pump comprising a housing including a chamber, a piston.").unwrap();
        assert!(has_edge(&g, "pump", "housing", EdgeKind::PartOf));
        assert!(has_edge(&g, "housing", "chamber", EdgeKind::PartOf));
        assert!(has_edge(&g, "housing", "piston", EdgeKind::PartOf));
    }

    #[test]
    fn inline_for_ing_clause_builds_relationship() {
        let (g, _) = parse_claim(
            "A snowthrower comprising a handle device, an auger housing, and a frame for \
             connecting the handle device and the auger housing.",
        )
        .unwrap();
        let rel = "frame for connecting the handle device and the auger housing";
        assert!(has_edge(&g, "snowthrower", "frame", EdgeKind::PartOf));
        assert!(has_edge(&g, rel, "handle device", EdgeKind::Functional));
        assert!(has_edge(&g, rel, "auger housing", EdgeKind::Functional));
        assert!(has_edge(&g, rel, "frame", EdgeKind::Functional));
    }

    #[test]
    fn wherein_with_single_mention_attaches_to_nearest_feature() {
        let (g, _) = parse_claim("A fan comprising a blade, wherein the blade rotates.").unwrap();
        let rel = "the blade rotates";
        assert!(has_edge(&g, rel, "blade", EdgeKind::Functional));
    }

    #[test]
    fn reference_numerals_and_case_are_normalized() {
        let (g, _) = parse_claim("A Pump comprising a Valve (17) and a SEAL (3a).").unwrap();
        assert_eq!(node_texts(&g), vec!["pump", "valve", "seal"]);
    }

    #[test]
    fn identical_phrases_unify_within_claim() {
        let (g, _) =
            parse_claim("A pump comprising a valve, a seal and a valve.").unwrap();
        assert_eq!(node_texts(&g), vec!["pump", "valve", "seal"]);
    }

    #[test]
    fn empty_claim_is_an_error() {
        assert!(matches!(parse_claim("   "), Err(ParseError::EmptyText)));
        assert!(matches!(parse_claim(""), Err(ParseError::EmptyText)));
    }

    #[test]
    fn single_claim_empty_description_collapses_kinds() {
        let d = doc(&["A pump comprising a valve."], "");
        let parsed = parse_document(&d).unwrap();
        assert_eq!(parsed.first_claim.nodes, parsed.all_claims.nodes);
        assert_eq!(parsed.first_claim.edges, parsed.all_claims.edges);
        assert_eq!(parsed.all_claims.nodes, parsed.description.nodes);
        assert_eq!(parsed.all_claims.edges, parsed.description.edges);
        assert_eq!(parsed.first_claim.kind, GraphKind::FirstClaim);
        assert_eq!(parsed.all_claims.kind, GraphKind::AllClaims);
        assert_eq!(parsed.description.kind, GraphKind::Description);
    }

    #[test]
    fn shared_phrase_unifies_across_claims() {
        let d = doc(
            &[
                "A snowthrower comprising a frame and a motor.",
                "The snowthrower of claim 1, further comprising a light on the frame.",
            ],
            "",
        );
        let parsed = parse_document(&d).unwrap();
        let frames = parsed
            .all_claims
            .nodes
            .iter()
            .filter(|n| n.text.contains("frame"))
            .count();
        assert_eq!(frames, 1, "nodes: {:?}", node_texts(&parsed.all_claims));
        // Dependent-claim root unified with the claim-1 root.
        let roots = parsed
            .all_claims
            .nodes
            .iter()
            .filter(|n| n.text == "snowthrower")
            .count();
        assert_eq!(roots, 1);
    }

    #[test]
    fn description_extends_all_claims() {
        let d = doc(
            &["A pump comprising a valve."],
            "The valve includes a spring. Unrelated sentence without keywords. \
             The pump contains a filter, such as a mesh filter.",
        );
        let parsed = parse_document(&d).unwrap();
        let ac_texts: Vec<&str> = node_texts(&parsed.all_claims);
        let d_texts: Vec<&str> = node_texts(&parsed.description);
        for t in &ac_texts {
            assert!(d_texts.contains(t), "description graph must contain {t}");
        }
        assert!(d_texts.contains(&"spring"));
        assert!(d_texts.contains(&"mesh filter"));
        assert!(has_edge(&parsed.description, "valve", "spring", EdgeKind::PartOf));
        assert!(has_edge(&parsed.description, "filter", "mesh filter", EdgeKind::ExampleOf));
        assert!(validate(&parsed.description).is_valid());
    }

    #[test]
    fn deterministic_byte_for_byte() {
        let text = "A snowthrower comprising a frame, a motor and an auger housing, \
                    wherein the frame connects the motor and the auger housing.";
        let (g1, _) = parse_claim(text).unwrap();
        let (g2, _) = parse_claim(text).unwrap();
        assert_eq!(to_json_line(&g1).unwrap(), to_json_line(&g2).unwrap());
    }

    #[test]
    fn kind_monotonicity_on_multi_claim_doc() {
        let d = doc(
            &[
                "A snowthrower comprising a frame and a motor.",
                "The snowthrower of claim 1, further comprising a chute.",
            ],
            "The chute includes a deflector.",
        );
        let parsed = parse_document(&d).unwrap();
        let fc: Vec<&str> = node_texts(&parsed.first_claim);
        let ac: Vec<&str> = node_texts(&parsed.all_claims);
        let dg: Vec<&str> = node_texts(&parsed.description);
        for t in &fc {
            assert!(ac.contains(t));
        }
        for t in &ac {
            assert!(dg.contains(t));
        }
        assert!(fc.len() < ac.len());
        assert!(ac.len() < dg.len());
    }

    #[test]
    fn node_cap_drops_description_nodes_first() {
        let mut sentences = String::new();
        for i in 0..300 {
            sentences.push_str(&format!("The base includes a part{i}. "));
        }
        let d = doc(&["A machine comprising a base."], &sentences);
        let parsed = parse_document(&d).unwrap();
        assert!(parsed.description.nodes.len() <= MAX_GRAPH_NODES);
        assert!(validate(&parsed.description).is_valid());
        // Claim-origin nodes survive.
        let texts = node_texts(&parsed.description);
        assert!(texts.contains(&"machine"));
        assert!(texts.contains(&"base"));
        assert!(!parsed.traces[2].dropped.is_empty());
    }

    #[test]
    fn remove_node_reattaches_chain() {
        // chain r -> a -> b ; dropping a re-attaches b to r
        let (g, _) = parse_claim("A rdev comprising an adev including a bdev.").unwrap();
        let a = find(&g, "adev");
        let (nodes, edges, root) = remove_node_reattach(&g.nodes, &g.edges, g.root, a);
        let texts: Vec<&str> = nodes.iter().map(|n| n.text.as_str()).collect();
        assert_eq!(texts, vec!["rdev", "bdev"]);
        assert_eq!(edges.len(), 1);
        assert_eq!(edges[0].kind, EdgeKind::PartOf);
        assert_eq!(edges[0].src, root);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]

        // Parser is total over arbitrary UTF-8 and always yields valid graphs.
        #[test]
        fn parser_never_panics_and_validates(text in "\\PC{0,200}") {
            if let Ok((g, _)) = parse_claim(&text) {
                proptest::prop_assert!(validate(&g).is_valid(), "violations: {}", validate(&g));
            }
        }

        #[test]
        fn parser_is_deterministic(text in "[a-z ,;.()0-9]{0,120}") {
            let a = parse_claim(&text);
            let b = parse_claim(&text);
            match (a, b) {
                (Ok((ga, _)), Ok((gb, _))) => proptest::prop_assert_eq!(ga, gb),
                (Err(_), Err(_)) => {}
                _ => proptest::prop_assert!(false, "determinism violated"),
            }
        }
    }
}
