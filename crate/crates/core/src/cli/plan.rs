//! Coupling graph → spanning tree → rooted tree → dimensions.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::synth::SynthesisPlan;
use crate::topology::{
    build_rooted_tree, dimension_violations, extract_spanning_tree, find_optimal_root, minimal_dimensions,
    CouplingGraph, Edge, NodeId, Purpose, RootedTree, TopologyError, Violation,
};

#[derive(Debug, Clone, PartialEq)]
pub struct PlannedTopology {
    pub source: String,
    pub graph: CouplingGraph,
    pub tree: RootedTree,
    /// Coupling edges left out of the spanning tree.
    pub dropped: Vec<Edge>,
    pub centers: Vec<NodeId>,
    pub purpose: Purpose,
    pub minimal: Vec<usize>,
    /// Dimensions declared in the topology, in tree node order.
    pub declared: Option<Vec<usize>>,
}

impl PlannedTopology {
    pub fn new(
        source: impl Into<String>,
        graph: CouplingGraph,
        root: Option<NodeId>,
        purpose: Purpose,
    ) -> Result<Self, TopologyError> {
        let start = graph.nodes()[0];
        let tree_edges = extract_spanning_tree(&graph, start)?;
        let dropped = graph.edges().difference(&tree_edges).copied().collect();
        let centers = if tree_edges.is_empty() { vec![start] } else { find_optimal_root(&tree_edges)? };
        let root = match root {
            Some(r) if graph.index_of(r).is_none() => return Err(TopologyError::NodeNotFound(r)),
            Some(r) => r,
            None => centers[0],
        };
        let tree = build_rooted_tree(&tree_edges, root)?;
        let minimal = minimal_dimensions(&tree, purpose).dims;
        let declared = if graph.dims().is_empty() { None } else { Some(graph.declared_dims()?) };
        Ok(PlannedTopology { source: source.into(), graph, tree, dropped, centers, purpose, minimal, declared })
    }

    /// Declared dimensions when given, otherwise the minimal ones.
    pub fn dims(&self) -> &[usize] {
        self.declared.as_deref().unwrap_or(&self.minimal)
    }

    pub fn violations(&self) -> Vec<Violation> {
        dimension_violations(&self.tree, self.dims(), self.purpose)
    }

    pub fn synthesis_plan(&self, lower_cx: bool, lower_cz_theta: bool) -> SynthesisPlan {
        SynthesisPlan::new(self.tree.clone(), self.dims().to_vec())
            .expect("dimensions follow the tree")
            .with_lowering(lower_cx, lower_cz_theta)
    }

    pub fn report(&self) -> PlanReport {
        let t = &self.tree;
        let nodes = (0..t.len())
            .map(|i| NodeReport {
                id: t.label(i).0,
                address: t.address(i).to_string(),
                parent: t.parent(i).map(|p| t.label(p).0),
                level: t.level(i),
                degree: t.degree(i),
                min_dim: self.minimal[i],
                dim: self.dims()[i],
            })
            .collect();
        let pair = |e: &Edge| [e.low().0, e.high().0];
        PlanReport {
            source: self.source.clone(),
            purpose: self.purpose,
            coupling_edges: self.graph.edges().len(),
            tree_edges: t.edges().iter().map(pair).collect(),
            dropped_edges: self.dropped.iter().map(pair).collect(),
            centers: self.centers.iter().map(|c| c.0).collect(),
            root: t.root_id().0,
            height: t.height(),
            max_dim: self.minimal.iter().copied().max().unwrap_or(2),
            declared_dims: self.declared.is_some(),
            nodes,
            violations: self.violations().iter().map(Violation::to_string).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeReport {
    pub id: u32,
    pub address: String,
    pub parent: Option<u32>,
    pub level: usize,
    pub degree: usize,
    pub min_dim: usize,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub source: String,
    pub purpose: Purpose,
    pub coupling_edges: usize,
    pub tree_edges: Vec<[u32; 2]>,
    pub dropped_edges: Vec<[u32; 2]>,
    pub centers: Vec<u32>,
    pub root: u32,
    pub height: usize,
    pub max_dim: usize,
    pub declared_dims: bool,
    pub nodes: Vec<NodeReport>,
    pub violations: Vec<String>,
}

impl PlanReport {
    pub fn feasible(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let edges = |list: &[[u32; 2]]| {
            if list.is_empty() {
                "none".to_string()
            } else {
                list.iter().map(|[a, b]| format!("{a}-{b}")).collect::<Vec<_>>().join(" ")
            }
        };
        let purpose = match self.purpose {
            Purpose::ControlledPhase => "controlled-phase",
            Purpose::MultiTargetBlock => "multi-target-block",
        };
        let centers: Vec<String> = self.centers.iter().map(u32::to_string).collect();
        let _ = writeln!(
            s,
            "topology: {} ({} nodes, {} coupling edges)",
            self.source,
            self.nodes.len(),
            self.coupling_edges
        );
        let _ = writeln!(s, "tree edges: {}", edges(&self.tree_edges));
        let _ = writeln!(s, "dropped edges: {}", edges(&self.dropped_edges));
        let _ = writeln!(s, "centers: {}", centers.join(" "));
        let _ = writeln!(s, "root: {}  height: {}  purpose: {}", self.root, self.height, purpose);
        let _ = writeln!(
            s,
            "{:>6}  {:<10} {:>6} {:>5} {:>6} {:>7} {:>4}",
            "node", "address", "parent", "level", "degree", "min-dim", "dim"
        );
        for n in &self.nodes {
            let parent = n.parent.map_or("-".to_string(), |p| p.to_string());
            let _ = writeln!(
                s,
                "{:>6}  {:<10} {:>6} {:>5} {:>6} {:>7} {:>4}",
                n.id, n.address, parent, n.level, n.degree, n.min_dim, n.dim
            );
        }
        let _ = writeln!(s, "max required dimension: {}", self.max_dim);
        if !self.declared_dims {
            let _ = writeln!(s, "feasible: yes (no declared dimensions, minimal assignment used)");
        } else if self.feasible() {
            let _ = writeln!(s, "feasible: yes");
        } else {
            let _ = writeln!(s, "feasible: no");
            for v in &self.violations {
                let _ = writeln!(s, "  {v}");
            }
        }
        s
    }
}
