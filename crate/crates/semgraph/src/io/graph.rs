//! Graph serialization: a JSON document for tooling and round-tripping,
//! and DOT for rendering. Output is byte-identical for identical inputs.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::matrix::{AdjacencyMatrix, ForbiddenMask};
use crate::sem::edge_set;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GraphFormat {
    Json,
    Dot,
}

#[derive(Serialize, Deserialize)]
struct GraphNode {
    id: usize,
    name: String,
}

#[derive(Serialize, Deserialize)]
struct GraphEdge {
    source: usize,
    target: usize,
    weight: f64,
}

#[derive(Serialize, Deserialize)]
struct GraphDoc {
    nodes: Vec<GraphNode>,
    edges: Vec<GraphEdge>,
    meta: serde_json::Value,
}

/// Renders a graph with node names and designated outputs.
///
/// JSON: `{"nodes": [{"id", "name"}], "edges": [{"source", "target",
/// "weight"}], "meta": {...}}` with `source < target` and edges sorted by
/// `(source, target)`. The meta block carries the caller's provenance data
/// plus the forbidden pairs and output set, so a JSON export re-imports to
/// an identical graph.
///
/// DOT: an undirected graph, edge pen width proportional to |weight|,
/// output nodes drawn as filled double circles.
pub fn export_graph(
    a: &AdjacencyMatrix,
    names: &[String],
    outputs: &BTreeSet<usize>,
    eps: f64,
    meta: &serde_json::Value,
    fmt: GraphFormat,
) -> Result<String> {
    if names.len() != a.n() {
        return Err(Error::InvalidInput(format!(
            "{} names for a {}-node graph",
            names.len(),
            a.n()
        )));
    }
    let edges = edge_set(a, eps);
    match fmt {
        GraphFormat::Json => {
            let mut full_meta = match meta {
                serde_json::Value::Object(m) => m.clone(),
                serde_json::Value::Null => serde_json::Map::new(),
                other => {
                    let mut m = serde_json::Map::new();
                    m.insert("context".into(), other.clone());
                    m
                }
            };
            full_meta.insert(
                "forbidden_pairs".into(),
                serde_json::to_value(a.forbidden().pairs().collect::<Vec<_>>())?,
            );
            full_meta.insert(
                "output_nodes".into(),
                serde_json::to_value(outputs.iter().collect::<Vec<_>>())?,
            );
            let doc = GraphDoc {
                nodes: (0..a.n())
                    .map(|id| GraphNode {
                        id,
                        name: names[id].clone(),
                    })
                    .collect(),
                edges: edges
                    .iter()
                    .map(|&(source, target, weight)| GraphEdge {
                        source,
                        target,
                        weight,
                    })
                    .collect(),
                meta: serde_json::Value::Object(full_meta),
            };
            let mut s = serde_json::to_string_pretty(&doc)?;
            s.push('\n');
            Ok(s)
        }
        GraphFormat::Dot => {
            let mut s = String::new();
            s.push_str("graph feature_graph {\n");
            s.push_str(&format!("  // meta: {}\n", serde_json::to_string(meta)?));
            s.push_str("  layout=neato;\n  node [shape=circle, fontsize=10];\n");
            for id in 0..a.n() {
                let label = dot_escape(&names[id]);
                if outputs.contains(&id) {
                    s.push_str(&format!(
                        "  \"{label}\" [shape=doublecircle, style=filled, fillcolor=lightgoldenrod];\n"
                    ));
                } else {
                    s.push_str(&format!("  \"{label}\";\n"));
                }
            }
            let wmax = edges
                .iter()
                .map(|e| e.2.abs())
                .fold(0.0f64, f64::max)
                .max(f64::MIN_POSITIVE);
            for (i, j, w) in &edges {
                let pen = 0.5 + 3.5 * w.abs() / wmax;
                s.push_str(&format!(
                    "  \"{}\" -- \"{}\" [penwidth={:.3}];\n",
                    dot_escape(&names[*i]),
                    dot_escape(&names[*j]),
                    pen
                ));
            }
            s.push_str("}\n");
            Ok(s)
        }
    }
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Rebuilds a graph from its JSON export.
pub fn import_graph_json(text: &str) -> Result<(AdjacencyMatrix, Vec<String>, BTreeSet<usize>)> {
    let doc: GraphDoc = serde_json::from_str(text)?;
    let n = doc.nodes.len();
    let mut w = ndarray::Array2::<f64>::zeros((n, n));
    for e in &doc.edges {
        if e.source >= n || e.target >= n || e.source == e.target {
            return Err(Error::InvalidInput(format!(
                "bad edge ({}, {}) in a {n}-node graph",
                e.source, e.target
            )));
        }
        w[[e.source, e.target]] = e.weight;
        w[[e.target, e.source]] = e.weight;
    }
    let mask = match doc.meta.get("forbidden_pairs") {
        Some(v) => {
            let pairs: Vec<(usize, usize)> = serde_json::from_value(v.clone())?;
            ForbiddenMask::from_pairs(pairs)
        }
        None => ForbiddenMask::empty(),
    };
    let outputs: BTreeSet<usize> = match doc.meta.get("output_nodes") {
        Some(v) => serde_json::from_value(v.clone())?,
        None => BTreeSet::new(),
    };
    let names = doc.nodes.into_iter().map(|nd| nd.name).collect();
    Ok((AdjacencyMatrix::from_weights(w, mask)?, names, outputs))
}
