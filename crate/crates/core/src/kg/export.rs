use std::fmt::Write;
use std::str::FromStr;

use super::KnowledgeGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Dot,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dot" => Ok(Format::Dot),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown graph format `{other}`")),
        }
    }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Graphviz rendering. Nodes then edges, both in sorted order; derived edges
/// are dashed.
pub fn to_dot(graph: &KnowledgeGraph) -> String {
    if graph.is_empty() {
        return "digraph G { }\n".to_owned();
    }
    let mut out = String::from("digraph G {\n");
    for n in graph.nodes() {
        let _ = writeln!(out, "  {};", quote(n));
    }
    for e in graph.edges() {
        let style = if e.derived { ", style=dashed" } else { "" };
        let _ = writeln!(
            out,
            "  {} -> {} [label={}{style}];",
            quote(&e.key.s),
            quote(&e.key.o),
            quote(&e.key.r)
        );
    }
    out.push_str("}\n");
    out
}

/// `{"nodes": [...], "edges": [{"s", "r", "o", "derived", "provenance", "trail"?}]}`.
pub fn to_json(graph: &KnowledgeGraph) -> String {
    let mut s = serde_json::to_string_pretty(graph).expect("graph serializes");
    s.push('\n');
    s
}

pub fn export_graph(graph: &KnowledgeGraph, format: Format) -> String {
    match format {
        Format::Dot => to_dot(graph),
        Format::Json => to_json(graph),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extraction::{Provenance, Triplet};
    use crate::kg::{build_graph, infer_transitive};

    #[test]
    fn empty_skeleton() {
        assert_eq!(to_dot(&KnowledgeGraph::new()), "digraph G { }\n");
    }

    #[test]
    fn one_edge_is_stable() {
        let g = build_graph(&[Triplet::new("A", "rel", "B").unwrap()]);
        let dot = to_dot(&g);
        assert_eq!(
            dot,
            "digraph G {\n  \"A\";\n  \"B\";\n  \"A\" -> \"B\" [label=\"rel\"];\n}\n"
        );
        assert_eq!(to_dot(&g.clone()), dot);
    }

    #[test]
    fn derived_edges_are_dashed() {
        let ts: Vec<Triplet> = [("a", "b"), ("b", "c")]
            .iter()
            .map(|(s, o)| Triplet::new(s, "in", o).unwrap())
            .collect();
        let g = infer_transitive(&build_graph(&ts), &["in".to_owned()].into());
        let dot = to_dot(&g);
        assert!(dot.contains("  \"a\" -> \"c\" [label=\"in\", style=dashed];\n"));
        assert!(dot.contains("  \"a\" -> \"b\" [label=\"in\"];\n"));
    }

    #[test]
    fn escaping() {
        let g = build_graph(&[Triplet::new("say \"hi\"", "r\\s", "x").unwrap()]);
        assert!(to_dot(&g).contains(r#""say \"hi\"" -> "x" [label="r\\s"]"#));
    }

    #[test]
    fn json_roundtrip() {
        let ts = vec![
            Triplet::new("a", "in", "b").unwrap().with_provenance(Provenance::prop("s", "a is in b")),
            Triplet::new("b", "in", "c").unwrap(),
        ];
        let g = infer_transitive(&build_graph(&ts), &["in".to_owned()].into());
        let json = to_json(&g);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["nodes"].as_array().unwrap().len(), 3);
        assert_eq!(v["edges"].as_array().unwrap().len(), 3);
        assert_eq!(v["edges"][1]["derived"], true);
        let back: KnowledgeGraph = serde_json::from_str(&json).unwrap();
        assert_eq!(back, g);
        assert_eq!(export_graph(&g, Format::Json), json);
    }
}
