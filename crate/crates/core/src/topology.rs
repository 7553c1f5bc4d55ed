//! Device connectivity, spanning trees, tree centers and qudit dimension rules.
//!
//! Node ids are arbitrary positive integers. Internally every structure keeps
//! its nodes sorted by id and works with dense indices `0..N`; that index is
//! also the register position of the node's qudit in synthesized circuits.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Undirected edge, stored with the smaller id first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge(NodeId, NodeId);

impl Edge {
    pub fn new(a: NodeId, b: NodeId) -> Result<Self, TopologyError> {
        if a == b {
            return Err(TopologyError::SelfLoop(a));
        }
        Ok(if a < b { Edge(a, b) } else { Edge(b, a) })
    }

    /// Shorthand for tests and generators; panics on a self-loop.
    pub fn of(a: u32, b: u32) -> Self {
        Edge::new(NodeId(a), NodeId(b)).expect("self-loop edge")
    }

    pub fn low(&self) -> NodeId {
        self.0
    }

    pub fn high(&self) -> NodeId {
        self.1
    }

    pub fn other(&self, n: NodeId) -> Option<NodeId> {
        if n == self.0 {
            Some(self.1)
        } else if n == self.1 {
            Some(self.0)
        } else {
            None
        }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.0, self.1)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TopologyError {
    #[error("graph has no nodes")]
    Empty,
    #[error("node ids must be positive, got 0")]
    ZeroId,
    #[error("node {0} is declared more than once")]
    DuplicateNode(NodeId),
    #[error("self-loop on node {0}")]
    SelfLoop(NodeId),
    #[error("edge {0} is listed more than once")]
    DuplicateEdge(Edge),
    #[error("edge {edge} references unknown node {node}")]
    UnknownNode { edge: Edge, node: NodeId },
    #[error("node {node} has dimension {dim}; every qudit needs at least 2 levels")]
    BadDimension { node: NodeId, dim: usize },
    #[error("graph is disconnected: node {unreachable} is unreachable from node {from}")]
    Disconnected { from: NodeId, unreachable: NodeId },
    #[error("node {0} is not part of the graph")]
    NodeNotFound(NodeId),
    #[error("edge set is not a tree: {0}")]
    NotATree(String),
    #[error("tree edge {0} is not an edge of the coupling graph")]
    EdgeNotInGraph(Edge),
    #[error("no dimension declared for node {0}")]
    MissingDimension(NodeId),
}

/// Device coupling graph: qudits with optional dimensions and the undirected
/// pairs that support a native two-qudit gate. Always connected.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingGraph {
    nodes: Vec<NodeId>,
    edges: BTreeSet<Edge>,
    dims: BTreeMap<NodeId, usize>,
    adjacency: Vec<Vec<usize>>,
}

impl CouplingGraph {
    pub fn new(
        nodes: impl IntoIterator<Item = NodeId>,
        edges: impl IntoIterator<Item = Edge>,
        dims: BTreeMap<NodeId, usize>,
    ) -> Result<Self, TopologyError> {
        let mut sorted = Vec::new();
        let mut seen = BTreeSet::new();
        for n in nodes {
            if n.0 == 0 {
                return Err(TopologyError::ZeroId);
            }
            if !seen.insert(n) {
                return Err(TopologyError::DuplicateNode(n));
            }
            sorted.push(n);
        }
        if sorted.is_empty() {
            return Err(TopologyError::Empty);
        }
        sorted.sort();

        let mut edge_set = BTreeSet::new();
        for e in edges {
            for n in [e.0, e.1] {
                if !seen.contains(&n) {
                    return Err(TopologyError::UnknownNode { edge: e, node: n });
                }
            }
            if !edge_set.insert(e) {
                return Err(TopologyError::DuplicateEdge(e));
            }
        }
        for (&node, &dim) in &dims {
            if !seen.contains(&node) {
                return Err(TopologyError::NodeNotFound(node));
            }
            if dim < 2 {
                return Err(TopologyError::BadDimension { node, dim });
            }
        }

        let adjacency = adjacency_of(&sorted, &edge_set);
        let graph = CouplingGraph { nodes: sorted, edges: edge_set, dims, adjacency };
        graph.dfs(0)?;
        Ok(graph)
    }

    /// Graph over nodes `1..=n` without declared dimensions.
    pub fn from_edges(n: u32, edges: impl IntoIterator<Item = Edge>) -> Result<Self, TopologyError> {
        Self::new((1..=n).map(NodeId), edges, BTreeMap::new())
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn edges(&self) -> &BTreeSet<Edge> {
        &self.edges
    }

    pub fn dims(&self) -> &BTreeMap<NodeId, usize> {
        &self.dims
    }

    pub fn with_dims(mut self, dims: BTreeMap<NodeId, usize>) -> Result<Self, TopologyError> {
        for (&node, &dim) in &dims {
            if self.index_of(node).is_none() {
                return Err(TopologyError::NodeNotFound(node));
            }
            if dim < 2 {
                return Err(TopologyError::BadDimension { node, dim });
            }
        }
        self.dims = dims;
        Ok(self)
    }

    pub fn index_of(&self, node: NodeId) -> Option<usize> {
        self.nodes.binary_search(&node).ok()
    }

    pub fn degree(&self, node: NodeId) -> Option<usize> {
        self.index_of(node).map(|i| self.adjacency[i].len())
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Declared dimensions in node order, or the first node lacking one.
    pub fn declared_dims(&self) -> Result<Vec<usize>, TopologyError> {
        self.nodes.iter().map(|n| self.dims.get(n).copied().ok_or(TopologyError::MissingDimension(*n))).collect()
    }

    /// Iterative depth-first search visiting neighbours in ascending id order.
    /// Returns the discovery edges.
    fn dfs(&self, start: usize) -> Result<BTreeSet<Edge>, TopologyError> {
        let n = self.nodes.len();
        let mut visited = vec![false; n];
        let mut tree = BTreeSet::new();
        let mut stack = vec![(start, 0usize)];
        visited[start] = true;
        while let Some(top) = stack.last_mut() {
            let u = top.0;
            if let Some(&v) = self.adjacency[u].get(top.1) {
                top.1 += 1;
                if !visited[v] {
                    visited[v] = true;
                    tree.insert(Edge(self.nodes[u.min(v)], self.nodes[u.max(v)]));
                    stack.push((v, 0));
                }
            } else {
                stack.pop();
            }
        }
        if let Some(i) = visited.iter().position(|&v| !v) {
            return Err(TopologyError::Disconnected { from: self.nodes[start], unreachable: self.nodes[i] });
        }
        Ok(tree)
    }
}

fn adjacency_of(nodes: &[NodeId], edges: &BTreeSet<Edge>) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); nodes.len()];
    for e in edges {
        let a = nodes.binary_search(&e.0).expect("edge endpoint");
        let b = nodes.binary_search(&e.1).expect("edge endpoint");
        adj[a].push(b);
        adj[b].push(a);
    }
    for list in &mut adj {
        list.sort_unstable();
    }
    adj
}

/// Spanning tree made of the edges a depth-first search discovers from
/// `start`; every other edge closes a cycle and is dropped.
pub fn extract_spanning_tree(graph: &CouplingGraph, start: NodeId) -> Result<BTreeSet<Edge>, TopologyError> {
    let s = graph.index_of(start).ok_or(TopologyError::NodeNotFound(start))?;
    graph.dfs(s)
}

/// Nodes and adjacency of an edge set, after checking that it is a tree.
fn tree_structure(edges: &BTreeSet<Edge>) -> Result<(Vec<NodeId>, Vec<Vec<usize>>), TopologyError> {
    let nodes: Vec<NodeId> = edges.iter().flat_map(|e| [e.0, e.1]).collect::<BTreeSet<_>>().into_iter().collect();
    if nodes.is_empty() {
        return Err(TopologyError::NotATree("no edges".into()));
    }
    if edges.len() != nodes.len() - 1 {
        return Err(TopologyError::NotATree(format!("{} edges over {} nodes", edges.len(), nodes.len())));
    }
    let adj = adjacency_of(&nodes, edges);
    let mut seen = vec![false; nodes.len()];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    if let Some(i) = seen.iter().position(|&s| !s) {
        return Err(TopologyError::NotATree(format!("node {} is disconnected", nodes[i])));
    }
    Ok((nodes, adj))
}

/// Tree centers by repeated removal of all degree-1 nodes. Returns one node,
/// or two adjacent nodes in ascending order.
pub fn find_optimal_root(tree_edges: &BTreeSet<Edge>) -> Result<Vec<NodeId>, TopologyError> {
    let (nodes, adj) = tree_structure(tree_edges)?;
    let mut degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut removed = vec![false; nodes.len()];
    let mut layer: Vec<usize> = (0..nodes.len()).filter(|&i| degree[i] == 1).collect();
    let mut remaining = nodes.len();
    while remaining > 2 {
        let mut next = Vec::new();
        for &leaf in &layer {
            removed[leaf] = true;
            remaining -= 1;
            for &v in &adj[leaf] {
                if !removed[v] {
                    degree[v] -= 1;
                    if degree[v] == 1 {
                        next.push(v);
                    }
                }
            }
        }
        layer = next;
    }
    Ok((0..nodes.len()).filter(|&i| !removed[i]).map(|i| nodes[i]).collect())
}

/// Position of a node in the rooted tree: the root is `[1]`, the `i`-th
/// child (1-based) of `s` is `s` followed by `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Address(Vec<u32>);

impl Address {
    pub fn root() -> Self {
        Address(vec![1])
    }

    pub fn child(&self, i: u32) -> Self {
        let mut v = self.0.clone();
        v.push(i);
        Address(v)
    }

    pub fn parent(&self) -> Option<Self> {
        (self.0.len() > 1).then(|| Address(self.0[..self.0.len() - 1].to_vec()))
    }

    pub fn components(&self) -> &[u32] {
        &self.0
    }
}

impl fmt::Display for Address {
    /// Plain digit string when every index is a single digit, dotted otherwise
    /// so the label stays unambiguous.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sep = if self.0.iter().all(|&c| c < 10) { "" } else { "." };
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "{}", parts.join(sep))
    }
}

/// A spanning tree with a chosen root, ordered children and node addresses.
#[derive(Debug, Clone, PartialEq)]
pub struct RootedTree {
    labels: Vec<NodeId>,
    edges: BTreeSet<Edge>,
    root: usize,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    level: Vec<usize>,
    address: Vec<Address>,
}

/// Roots the tree and assigns addresses. Children are ordered by ascending id.
/// An empty edge set yields the single-node tree `{root}`.
pub fn build_rooted_tree(tree_edges: &BTreeSet<Edge>, root: NodeId) -> Result<RootedTree, TopologyError> {
    let (labels, adj) =
        if tree_edges.is_empty() { (vec![root], vec![Vec::new()]) } else { tree_structure(tree_edges)? };
    let r = labels.binary_search(&root).map_err(|_| TopologyError::NodeNotFound(root))?;
    let n = labels.len();
    let mut parent = vec![None; n];
    let mut children = vec![Vec::new(); n];
    let mut level = vec![0; n];
    let mut address = vec![Address::root(); n];
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([r]);
    seen[r] = true;
    while let Some(u) = queue.pop_front() {
        // adjacency lists are ascending, so child order is ascending id
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                parent[v] = Some(u);
                level[v] = level[u] + 1;
                children[u].push(v);
                address[v] = address[u].child(children[u].len() as u32);
                queue.push_back(v);
            }
        }
    }
    Ok(RootedTree { labels, edges: tree_edges.clone(), root: r, parent, children, level, address })
}

impl RootedTree {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[NodeId] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> NodeId {
        self.labels[i]
    }

    pub fn index_of(&self, node: NodeId) -> Option<usize> {
        self.labels.binary_search(&node).ok()
    }

    pub fn edges(&self) -> &BTreeSet<Edge> {
        &self.edges
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn root_id(&self) -> NodeId {
        self.labels[self.root]
    }

    pub fn parent(&self, i: usize) -> Option<usize> {
        self.parent[i]
    }

    pub fn children(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    pub fn level(&self, i: usize) -> usize {
        self.level[i]
    }

    pub fn address(&self, i: usize) -> &Address {
        &self.address[i]
    }

    /// Degree of the node within the tree.
    pub fn degree(&self, i: usize) -> usize {
        self.children[i].len() + usize::from(self.parent[i].is_some())
    }

    pub fn is_leaf(&self, i: usize) -> bool {
        self.children[i].is_empty() && i != self.root
    }

    /// Edges between the root and its farthest node.
    pub fn height(&self) -> usize {
        self.level.iter().copied().max().unwrap_or(0)
    }

    /// Nodes at the given distance from the root, ascending index.
    pub fn nodes_at_level(&self, l: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.level[i] == l).collect()
    }
}

/// Which synthesis family the dimensions must support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Purpose {
    /// C^{N-1}Z, Toffoli, C^{N-1}Z_θ and C^{N-1}U.
    ControlledPhase,
    /// C^N U with an opaque controlled block on the root.
    MultiTargetBlock,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DimensionAssignment {
    /// Indexed like the tree's nodes (ascending id).
    pub dims: Vec<usize>,
    pub purpose: Purpose,
}

impl DimensionAssignment {
    pub fn get(&self, tree: &RootedTree, node: NodeId) -> Option<usize> {
        tree.index_of(node).map(|i| self.dims[i])
    }

    pub fn max(&self) -> usize {
        self.dims.iter().copied().max().unwrap_or(0)
    }
}

/// Smallest dimension per node that the folding construction uses.
pub fn minimal_dimensions(tree: &RootedTree, purpose: Purpose) -> DimensionAssignment {
    let dims = (0..tree.len())
        .map(|i| {
            let c = tree.children(i).len();
            let d = if i != tree.root() {
                c + 2
            } else {
                match purpose {
                    Purpose::ControlledPhase => c + 1,
                    Purpose::MultiTargetBlock => c + 2,
                }
            };
            d.max(2)
        })
        .collect();
    DimensionAssignment { dims, purpose }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub node: NodeId,
    pub declared: usize,
    pub required: usize,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "node {} has dimension {} but needs at least {}", self.node, self.declared, self.required)
    }
}

/// Compares dimensions given in tree node order against the minimum.
pub fn dimension_violations(tree: &RootedTree, dims: &[usize], purpose: Purpose) -> Vec<Violation> {
    let min = minimal_dimensions(tree, purpose);
    (0..tree.len())
        .filter(|&i| dims[i] < min.dims[i])
        .map(|i| Violation { node: tree.label(i), declared: dims[i], required: min.dims[i] })
        .collect()
}

/// Checks the graph's declared dimensions against the rooted tree's needs.
pub fn check_feasibility(
    graph: &CouplingGraph,
    tree: &RootedTree,
    purpose: Purpose,
) -> Result<Vec<Violation>, TopologyError> {
    if let Some(e) = tree.edges().iter().find(|e| !graph.edges().contains(e)) {
        return Err(TopologyError::EdgeNotInGraph(*e));
    }
    let dims = tree
        .labels()
        .iter()
        .map(|n| graph.dims().get(n).copied().ok_or(TopologyError::MissingDimension(*n)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(dimension_violations(tree, &dims, purpose))
}

/// Structured topology document: `{"nodes": [{"id": 1, "dim": 3}], "edges": [[1, 2]]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyFile {
    pub nodes: Vec<NodeEntry>,
    pub edges: Vec<[u32; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeEntry {
    pub id: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
}

#[derive(Debug, Error)]
pub enum TopologyFileError {
    #[error("malformed topology document: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("{field}: {source}")]
    Invalid {
        field: String,
        #[source]
        source: TopologyError,
    },
}

impl TopologyFile {
    pub fn parse(text: &str) -> Result<CouplingGraph, TopologyFileError> {
        let doc: TopologyFile = serde_json::from_str(text)?;
        doc.into_graph()
    }

    pub fn into_graph(self) -> Result<CouplingGraph, TopologyFileError> {
        let invalid = |field: String, source| TopologyFileError::Invalid { field, source };
        let mut ids = BTreeSet::new();
        let mut dims = BTreeMap::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if n.id == 0 {
                return Err(invalid(format!("nodes[{i}].id"), TopologyError::ZeroId));
            }
            if !ids.insert(n.id) {
                return Err(invalid(format!("nodes[{i}].id"), TopologyError::DuplicateNode(NodeId(n.id))));
            }
            if let Some(d) = n.dim {
                if d < 2 {
                    return Err(invalid(
                        format!("nodes[{i}].dim"),
                        TopologyError::BadDimension { node: NodeId(n.id), dim: d },
                    ));
                }
                dims.insert(NodeId(n.id), d);
            }
        }
        let mut edges = BTreeSet::new();
        for (i, &[a, b]) in self.edges.iter().enumerate() {
            let field = format!("edges[{i}]");
            let e = Edge::new(NodeId(a), NodeId(b)).map_err(|s| invalid(field.clone(), s))?;
            for node in [a, b] {
                if !ids.contains(&node) {
                    return Err(invalid(field, TopologyError::UnknownNode { edge: e, node: NodeId(node) }));
                }
            }
            if !edges.insert(e) {
                return Err(invalid(field, TopologyError::DuplicateEdge(e)));
            }
        }
        CouplingGraph::new(ids.into_iter().map(NodeId), edges, dims).map_err(|s| invalid("graph".into(), s))
    }

    pub fn from_graph(graph: &CouplingGraph) -> Self {
        TopologyFile {
            nodes: graph.nodes().iter().map(|n| NodeEntry { id: n.0, dim: graph.dims().get(n).copied() }).collect(),
            edges: graph.edges().iter().map(|e| [e.0 .0, e.1 .0]).collect(),
        }
    }

    pub fn to_json(graph: &CouplingGraph) -> String {
        serde_json::to_string_pretty(&Self::from_graph(graph)).expect("topology serializes")
    }
}
