//! Social graphs of "knows" and "cites" relations, eigenvector centrality
//! and influencer filtering.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum EdgeKind {
    /// Follower/friend relation, undirected.
    Knows,
    /// Retweet/citation, directed from citer to cited.
    Cites,
}

impl EdgeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeKind::Knows => "knows",
            EdgeKind::Cites => "cites",
        }
    }

    pub fn is_directed(self) -> bool {
        self == EdgeKind::Cites
    }
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EdgeKind {
    type Err = String;

    fn from_str(s: &str) -> core::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "knows" => Ok(EdgeKind::Knows),
            "cites" => Ok(EdgeKind::Cites),
            other => Err(alloc::format!("unknown edge kind {other:?}")),
        }
    }
}

/// Which relations centrality runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum EdgeSelection {
    Knows,
    Cites,
    Combined,
}

impl EdgeSelection {
    pub fn includes(self, kind: EdgeKind) -> bool {
        matches!(
            (self, kind),
            (EdgeSelection::Combined, _)
                | (EdgeSelection::Knows, EdgeKind::Knows)
                | (EdgeSelection::Cites, EdgeKind::Cites)
        )
    }
}

impl FromStr for EdgeSelection {
    type Err = String;

    fn from_str(s: &str) -> core::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "knows" => Ok(EdgeSelection::Knows),
            "cites" => Ok(EdgeSelection::Cites),
            "combined" => Ok(EdgeSelection::Combined),
            other => Err(alloc::format!("unknown edge selection {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawEdge {
    pub src: String,
    pub dst: String,
    pub kind: EdgeKind,
}

impl RawEdge {
    pub fn new(src: impl Into<String>, dst: impl Into<String>, kind: EdgeKind) -> Self {
        RawEdge { src: src.into(), dst: dst.into(), kind }
    }
}

/// An aggregated edge between node indices. For `knows` edges
/// `src < dst` by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub src: u32,
    pub dst: u32,
    pub kind: EdgeKind,
    pub weight: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BuildReport {
    pub self_loops: usize,
    /// `(input position, reason)` for rejected edges.
    pub errors: Vec<(usize, String)>,
}

/// Immutable graph. Nodes are sorted by name, so the result does not depend
/// on edge insertion order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Graph {
    nodes: Vec<String>,
    edges: Vec<Edge>,
}

impl Graph {
    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_index(&self, name: &str) -> Option<u32> {
        self.nodes.binary_search_by(|n| n.as_str().cmp(name)).ok().map(|i| i as u32)
    }

    pub fn name(&self, index: u32) -> &str {
        &self.nodes[index as usize]
    }
}

fn clean_name(name: &str) -> &str {
    let name = name.trim();
    name.strip_prefix('@').unwrap_or(name)
}

/// Aggregates raw relations into a graph. Repeated edges add weight,
/// self-loops are dropped and counted, empty usernames are rejected.
pub fn build_graph<I>(edges: I) -> (Graph, BuildReport)
where
    I: IntoIterator<Item = RawEdge>,
{
    let mut report = BuildReport::default();
    let mut folded: BTreeMap<(EdgeKind, String, String), u64> = BTreeMap::new();
    for (pos, edge) in edges.into_iter().enumerate() {
        let (src, dst) = (clean_name(&edge.src), clean_name(&edge.dst));
        if src.is_empty() || dst.is_empty() {
            report.errors.push((pos, String::from("empty username")));
            continue;
        }
        if src == dst {
            report.self_loops += 1;
            continue;
        }
        let (a, b) = if edge.kind.is_directed() || src < dst { (src, dst) } else { (dst, src) };
        *folded.entry((edge.kind, String::from(a), String::from(b))).or_insert(0) += 1;
    }

    let mut names: Vec<String> = folded
        .keys()
        .flat_map(|(_, a, b)| [a.clone(), b.clone()])
        .collect();
    names.sort_unstable();
    names.dedup();
    let graph_nodes = Graph { nodes: names, edges: Vec::new() };
    let edges = folded
        .into_iter()
        .map(|((kind, a, b), weight)| Edge {
            src: graph_nodes.node_index(&a).unwrap_or_default(),
            dst: graph_nodes.node_index(&b).unwrap_or_default(),
            kind,
            weight,
        })
        .collect();
    (Graph { nodes: graph_nodes.nodes, edges }, report)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CentralityParams {
    /// Teleport share in `[0, 1)`.
    pub damping: f64,
    /// Convergence bound on the max-normalized L∞ change.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Scores strictly above this are highlighted.
    pub highlight: f64,
}

impl Default for CentralityParams {
    fn default() -> Self {
        CentralityParams {
            damping: 0.15,
            tolerance: 1e-9,
            max_iterations: 10_000,
            highlight: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NodeScore {
    pub name: String,
    /// Max-normalized to `[0, 1]`.
    pub centrality: f64,
    pub highlighted: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Centrality {
    pub selection: EdgeSelection,
    /// One score per node, in node order.
    pub scores: Vec<NodeScore>,
    pub converged: bool,
    pub iterations: usize,
}

/// Eigenvector centrality by power iteration.
///
/// Each step spreads score along the selected edges (both ways for `knows`,
/// from citer to cited for `cites`) on top of a copy of the current vector,
/// i.e. it iterates `A + I`. The shift leaves eigenvectors unchanged and
/// keeps bipartite graphs such as stars from oscillating. The result is
/// L1-normalized, mixed with a uniform vector by `damping`, and finally
/// divided by its maximum.
pub fn eigenvector_centrality(
    graph: &Graph,
    selection: EdgeSelection,
    params: &CentralityParams,
) -> Result<Centrality> {
    if !(params.damping >= 0.0 && params.damping < 1.0) {
        return Err(Error::InvalidParameter { name: "damping", value: params.damping });
    }
    if !(params.tolerance > 0.0) {
        return Err(Error::InvalidParameter { name: "tolerance", value: params.tolerance });
    }
    let n = graph.node_count();
    if n == 0 {
        return Ok(Centrality { selection, scores: Vec::new(), converged: true, iterations: 0 });
    }
    let edges: Vec<&Edge> = graph.edges.iter().filter(|e| selection.includes(e.kind)).collect();
    let uniform = 1.0 / n as f64;
    let mut x = vec![uniform; n];
    let mut next = vec![0.0; n];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < params.max_iterations {
        iterations += 1;
        next.copy_from_slice(&x);
        for e in &edges {
            let (s, d, w) = (e.src as usize, e.dst as usize, e.weight as f64);
            next[d] += w * x[s];
            if !e.kind.is_directed() {
                next[s] += w * x[d];
            }
        }
        let sum: f64 = next.iter().sum();
        for v in &mut next {
            *v = (1.0 - params.damping) * *v / sum + params.damping * uniform;
        }
        let change = max_normalized_change(&x, &next);
        core::mem::swap(&mut x, &mut next);
        if change < params.tolerance {
            converged = true;
            break;
        }
    }

    let max = x.iter().copied().fold(0.0, f64::max);
    let scores = graph
        .nodes
        .iter()
        .zip(&x)
        .map(|(name, &v)| {
            let centrality = if max > 0.0 { v / max } else { 0.0 };
            NodeScore {
                name: name.clone(),
                centrality,
                highlighted: centrality > params.highlight,
            }
        })
        .collect();
    Ok(Centrality { selection, scores, converged, iterations })
}

fn max_normalized_change(a: &[f64], b: &[f64]) -> f64 {
    let ma = a.iter().copied().fold(0.0, f64::max);
    let mb = b.iter().copied().fold(0.0, f64::max);
    a.iter()
        .zip(b)
        .map(|(x, y)| (x / ma - y / mb).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InfluencerNode {
    pub name: String,
    pub centrality: f64,
    pub highlighted: bool,
    /// Display size, proportional to centrality.
    pub size: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InfluencerEdge {
    pub src: String,
    pub dst: String,
    pub kind: EdgeKind,
    pub weight: u64,
    /// Display width, proportional to weight (heaviest kept edge = 1).
    pub width: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InfluencerGraph {
    pub nodes: Vec<InfluencerNode>,
    pub edges: Vec<InfluencerEdge>,
}

/// Keeps nodes with centrality strictly above `threshold` and the selected
/// edges among them; marks nodes strictly above `highlight`.
pub fn influencers(
    graph: &Graph,
    centrality: &Centrality,
    threshold: f64,
    highlight: f64,
) -> Result<InfluencerGraph> {
    for (name, value) in [("threshold", threshold), ("highlight", highlight)] {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::InvalidParameter { name, value });
        }
    }
    if centrality.scores.len() != graph.node_count() {
        return Err(Error::InvalidConfig(alloc::format!(
            "{} scores for {} nodes",
            centrality.scores.len(),
            graph.node_count()
        )));
    }
    let keep: Vec<bool> = centrality.scores.iter().map(|s| s.centrality > threshold).collect();
    let nodes = centrality
        .scores
        .iter()
        .filter(|s| s.centrality > threshold)
        .map(|s| InfluencerNode {
            name: s.name.clone(),
            centrality: s.centrality,
            highlighted: s.centrality > highlight,
            size: s.centrality,
        })
        .collect();
    let kept: Vec<&Edge> = graph
        .edges
        .iter()
        .filter(|e| centrality.selection.includes(e.kind))
        .filter(|e| keep[e.src as usize] && keep[e.dst as usize])
        .collect();
    let heaviest = kept.iter().map(|e| e.weight).max().unwrap_or(1) as f64;
    let edges = kept
        .into_iter()
        .map(|e| InfluencerEdge {
            src: String::from(graph.name(e.src)),
            dst: String::from(graph.name(e.dst)),
            kind: e.kind,
            weight: e.weight,
            width: e.weight as f64 / heaviest,
        })
        .collect();
    Ok(InfluencerGraph { nodes, edges })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact() -> CentralityParams {
        CentralityParams { damping: 0.0, tolerance: 1e-13, ..CentralityParams::default() }
    }

    fn score(c: &Centrality, name: &str) -> f64 {
        c.scores.iter().find(|s| s.name == name).unwrap().centrality
    }

    fn star() -> Graph {
        build_graph(["b", "c", "d"].map(|leaf| RawEdge::new("a", leaf, EdgeKind::Knows))).0
    }

    #[test]
    fn aggregation_and_self_loops() {
        let (g, r) = build_graph([RawEdge::new("a", "b", EdgeKind::Cites), RawEdge::new("a", "b", EdgeKind::Cites)]);
        assert_eq!(g.edges(), [Edge { src: 0, dst: 1, kind: EdgeKind::Cites, weight: 2 }]);
        assert_eq!(r.self_loops, 0);

        let (g, r) = build_graph([RawEdge::new("a", "a", EdgeKind::Knows)]);
        assert!(g.edges().is_empty());
        assert_eq!(r.self_loops, 1);

        let (g, _) = build_graph([RawEdge::new("a", "b", EdgeKind::Knows), RawEdge::new("b", "a", EdgeKind::Knows)]);
        assert_eq!(g.edges(), [Edge { src: 0, dst: 1, kind: EdgeKind::Knows, weight: 2 }]);

        let (g, _) = build_graph([RawEdge::new("b", "a", EdgeKind::Cites), RawEdge::new("a", "b", EdgeKind::Cites)]);
        assert_eq!(g.edges().len(), 2);
    }

    #[test]
    fn empty_usernames_are_row_errors() {
        let (g, r) = build_graph([RawEdge::new("", "b", EdgeKind::Cites), RawEdge::new("@x", "y", EdgeKind::Cites)]);
        assert_eq!(r.errors.len(), 1);
        assert_eq!(r.errors[0].0, 0);
        assert_eq!(g.nodes(), ["x", "y"]);
    }

    #[test]
    fn star_centrality() {
        let c = eigenvector_centrality(&star(), EdgeSelection::Knows, &exact()).unwrap();
        assert!(c.converged);
        assert_eq!(score(&c, "a"), 1.0);
        for leaf in ["b", "c", "d"] {
            assert!((score(&c, leaf) - 1.0 / libm::sqrt(3.0)).abs() < 1e-6);
        }
    }

    #[test]
    fn cycle_is_uniform() {
        for len in 3..9 {
            let names: Vec<String> = (0..len).map(|i| alloc::format!("n{i}")).collect();
            let edges = (0..len).map(|i| RawEdge::new(names[i].clone(), names[(i + 1) % len].clone(), EdgeKind::Knows));
            let c = eigenvector_centrality(&build_graph(edges).0, EdgeSelection::Knows, &exact()).unwrap();
            assert!(c.scores.iter().all(|s| (s.centrality - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn chain_accumulates_downstream() {
        let (g, _) = build_graph([RawEdge::new("a", "b", EdgeKind::Cites), RawEdge::new("b", "c", EdgeKind::Cites)]);
        let c = eigenvector_centrality(&g, EdgeSelection::Cites, &CentralityParams::default()).unwrap();
        assert!(c.converged);
        assert!(score(&c, "c") > score(&c, "b") && score(&c, "b") > score(&c, "a"));
        assert_eq!(score(&c, "c"), 1.0);
    }

    #[test]
    fn empty_graph_and_bad_params() {
        let c = eigenvector_centrality(&Graph::default(), EdgeSelection::Cites, &exact()).unwrap();
        assert!(c.scores.is_empty());
        let bad = CentralityParams { damping: 1.0, ..exact() };
        assert!(eigenvector_centrality(&star(), EdgeSelection::Knows, &bad).is_err());
    }

    #[test]
    fn non_convergence_is_flagged() {
        let params = CentralityParams { max_iterations: 1, ..exact() };
        let c = eigenvector_centrality(&star(), EdgeSelection::Knows, &params).unwrap();
        assert!(!c.converged);
        assert_eq!(c.iterations, 1);
    }

    #[test]
    fn influencer_thresholds_on_star() {
        let g = star();
        let c = eigenvector_centrality(&g, EdgeSelection::Knows, &exact()).unwrap();
        let all = influencers(&g, &c, 0.25, 0.5).unwrap();
        assert_eq!(all.nodes.len(), 4);
        assert_eq!(all.edges.len(), 3);
        assert_eq!(all.nodes.iter().filter(|n| n.highlighted).count(), 4);

        let hub = influencers(&g, &c, 0.6, 0.5).unwrap();
        assert_eq!(hub.nodes.len(), 1);
        assert_eq!(hub.nodes[0].name, "a");
        assert!(hub.nodes[0].highlighted);
        assert!(hub.edges.is_empty());

        assert!(influencers(&g, &c, 1.0, 0.5).unwrap().nodes.is_empty());
        assert!(influencers(&g, &c, 1.5, 0.5).is_err());
        assert!(influencers(&g, &c, -0.1, 0.5).is_err());
    }
}
