//! Knowledge graph assembly and transitive inference.

mod export;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::extraction::{Provenance, Triplet};
use crate::par;
use crate::text::normalize_text;

pub use export::{export_graph, to_dot, to_json, Format};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeKey {
    pub s: String,
    pub r: String,
    pub o: String,
}

impl EdgeKey {
    pub fn new(s: impl Into<String>, r: impl Into<String>, o: impl Into<String>) -> Self {
        EdgeKey {
            s: s.into(),
            r: r.into(),
            o: o.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    #[serde(flatten)]
    pub key: EdgeKey,
    pub derived: bool,
    #[serde(default)]
    pub provenance: Vec<Provenance>,
    /// Asserted edges forming the path that justifies a derived edge.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trail: Vec<EdgeKey>,
}

/// Entities as nodes, relations as labelled edges. At most one edge per
/// `(s, r, o)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(into = "GraphDoc", from = "GraphDoc")]
pub struct KnowledgeGraph {
    nodes: BTreeSet<String>,
    edges: BTreeMap<EdgeKey, Edge>,
}

/// Serialized form: sorted node and edge arrays.
#[derive(Serialize, Deserialize)]
struct GraphDoc {
    nodes: Vec<String>,
    edges: Vec<Edge>,
}

impl From<KnowledgeGraph> for GraphDoc {
    fn from(g: KnowledgeGraph) -> Self {
        GraphDoc {
            nodes: g.nodes.into_iter().collect(),
            edges: g.edges.into_values().collect(),
        }
    }
}

impl From<GraphDoc> for KnowledgeGraph {
    fn from(doc: GraphDoc) -> Self {
        let mut nodes: BTreeSet<String> = doc.nodes.into_iter().collect();
        let mut edges = BTreeMap::new();
        for e in doc.edges {
            nodes.insert(e.key.s.clone());
            nodes.insert(e.key.o.clone());
            edges.insert(e.key.clone(), e);
        }
        KnowledgeGraph { nodes, edges }
    }
}

impl KnowledgeGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn nodes(&self) -> impl Iterator<Item = &str> {
        self.nodes.iter().map(String::as_str)
    }

    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.values()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn derived_count(&self) -> usize {
        self.edges.values().filter(|e| e.derived).count()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn edge(&self, s: &str, r: &str, o: &str) -> Option<&Edge> {
        self.edges.get(&EdgeKey::new(s, r, o))
    }

    pub fn contains_node(&self, n: &str) -> bool {
        self.nodes.contains(n)
    }

    /// Adds an asserted edge, merging provenance into an existing one.
    /// An asserted edge replaces a derived edge with the same key.
    pub fn assert_edge(&mut self, s: &str, r: &str, o: &str, provenance: &[Provenance]) {
        let key = EdgeKey::new(normalize_text(s), normalize_text(r), normalize_text(o));
        self.nodes.insert(key.s.clone());
        self.nodes.insert(key.o.clone());
        let edge = self.edges.entry(key.clone()).or_insert_with(|| Edge {
            key,
            derived: false,
            provenance: Vec::new(),
            trail: Vec::new(),
        });
        if edge.derived {
            edge.derived = false;
            edge.trail.clear();
        }
        for p in provenance {
            if !edge.provenance.contains(p) {
                edge.provenance.push(p.clone());
            }
        }
        edge.provenance.sort();
    }

    /// Relation labels present on any edge.
    pub fn relations(&self) -> BTreeSet<&str> {
        self.edges.keys().map(|k| k.r.as_str()).collect()
    }
}

pub fn build_graph(triplets: &[Triplet]) -> KnowledgeGraph {
    let mut g = KnowledgeGraph::new();
    for t in triplets {
        g.assert_edge(&t.subject, &t.relation, &t.object, &t.provenance);
    }
    g
}

/// Adds the transitive closure of every relation in `transitive` as derived
/// edges. Asserted edges are untouched and self-loops are never derived.
///
/// Each derived edge records a shortest path of asserted edges as its trail.
pub fn infer_transitive(graph: &KnowledgeGraph, transitive: &BTreeSet<String>) -> KnowledgeGraph {
    let mut out = graph.clone();
    for relation in transitive {
        let r = normalize_text(relation);
        let mut adjacency: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for k in graph.edges.values().filter(|e| !e.derived).map(|e| &e.key) {
            if k.r == r {
                adjacency.entry(k.s.as_str()).or_default().push(k.o.as_str());
            }
        }
        let sources: Vec<&str> = adjacency.keys().copied().collect();
        let derived = par::map(&sources, |&src| reach_from(src, &r, &adjacency));
        for edge in derived.into_iter().flatten() {
            out.edges.entry(edge.key.clone()).or_insert(edge);
        }
    }
    out
}

/// Breadth-first search over asserted `r`-edges from `src`.
fn reach_from(src: &str, r: &str, adjacency: &BTreeMap<&str, Vec<&str>>) -> Vec<Edge> {
    let mut parent: BTreeMap<&str, &str> = BTreeMap::new();
    let mut queue = VecDeque::from([src]);
    let mut order = Vec::new();
    while let Some(n) = queue.pop_front() {
        for &next in adjacency.get(n).map(Vec::as_slice).unwrap_or_default() {
            if next != src && !parent.contains_key(next) {
                parent.insert(next, n);
                order.push(next);
                queue.push_back(next);
            }
        }
    }
    let direct: BTreeSet<&str> = adjacency[src].iter().copied().collect();
    order
        .into_iter()
        .filter(|t| !direct.contains(t))
        .map(|target| {
            let mut trail = Vec::new();
            let mut cur = target;
            while cur != src {
                let prev = parent[cur];
                trail.push(EdgeKey::new(prev, r, cur));
                cur = prev;
            }
            trail.reverse();
            Edge {
                key: EdgeKey::new(src, r, target),
                derived: true,
                provenance: Vec::new(),
                trail,
            }
        })
        .collect()
}
