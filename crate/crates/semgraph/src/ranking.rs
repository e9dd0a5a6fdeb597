//! Output-connection rankings extracted from a learned graph.
//!
//! For every designated output node, lists its neighbors in decreasing
//! order of |weight| (ranking uses magnitudes only; signs are exported but
//! never ordered on). Edges among those neighbors that do not touch an
//! output are reported separately as "other connections".

use std::collections::BTreeSet;

use serde::Serialize;

use crate::matrix::{AdjacencyMatrix, GraphSignalMatrix};
use crate::{Error, Result};

#[derive(Clone, Debug, Serialize)]
pub struct NeighborEntry {
    /// 0-based node index.
    pub node: usize,
    pub name: String,
    pub weight: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct OutputRanking {
    pub output: usize,
    pub output_name: String,
    /// Sorted by |weight| descending, ties by smaller node index.
    pub neighbors: Vec<NeighborEntry>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RankedConnections {
    pub outputs: Vec<OutputRanking>,
    /// Edges among the union of output neighbors that touch no output,
    /// sorted by (i, j).
    pub other_connections: Vec<(usize, usize, f64)>,
    pub lambda: Option<f64>,
    pub interlink_allowed: bool,
}

impl RankedConnections {
    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = Some(lambda);
        self
    }
}

/// Ranks every output node's connections above `eps`.
pub fn rank(a: &AdjacencyMatrix, x: &GraphSignalMatrix, eps: f64) -> Result<RankedConnections> {
    if x.output_nodes().is_empty() {
        return Err(Error::InvalidInput(
            "ranking requires at least one designated output node".into(),
        ));
    }
    if a.n() != x.n() {
        return Err(Error::InvalidInput(format!(
            "graph has {} nodes, data has {}",
            a.n(),
            x.n()
        )));
    }
    let w = a.weights();
    let names = x.node_names();
    let outputs = x.output_nodes();

    let mut rankings = Vec::with_capacity(outputs.len());
    let mut neighbor_union: BTreeSet<usize> = BTreeSet::new();
    for &out in outputs {
        let mut neighbors: Vec<NeighborEntry> = (0..x.n())
            .filter(|&j| j != out && w[[out, j]].abs() > eps)
            .map(|j| NeighborEntry {
                node: j,
                name: names[j].clone(),
                weight: w[[out, j]],
            })
            .collect();
        neighbors.sort_by(|p, q| {
            q.weight
                .abs()
                .partial_cmp(&p.weight.abs())
                .expect("finite weights")
                .then(p.node.cmp(&q.node))
        });
        neighbor_union.extend(neighbors.iter().map(|e| e.node));
        rankings.push(OutputRanking {
            output: out,
            output_name: names[out].clone(),
            neighbors,
        });
    }

    let mut other = Vec::new();
    for &i in &neighbor_union {
        if outputs.contains(&i) {
            continue;
        }
        for &j in neighbor_union.range((i + 1)..) {
            if outputs.contains(&j) {
                continue;
            }
            if w[[i, j]].abs() > eps {
                other.push((i, j, w[[i, j]]));
            }
        }
    }

    let interlink_allowed = {
        let outs: Vec<usize> = outputs.iter().copied().collect();
        !outs.iter().enumerate().any(|(k, &i)| {
            outs[k + 1..]
                .iter()
                .any(|&j| a.forbidden().contains(i, j))
        })
    };

    Ok(RankedConnections {
        outputs: rankings,
        other_connections: other,
        lambda: None,
        interlink_allowed,
    })
}

/// Every edge incident to an output plus the edges among output neighbors;
/// the subgraph behind the ranking report, as a plain edge list sorted by
/// (i, j).
pub fn neighbor_subgraph(
    a: &AdjacencyMatrix,
    outputs: &BTreeSet<usize>,
    eps: f64,
) -> Vec<(usize, usize, f64)> {
    let w = a.weights();
    let n = a.n();
    let mut neighbor_union: BTreeSet<usize> = BTreeSet::new();
    for &out in outputs {
        for j in 0..n {
            if j != out && w[[out, j]].abs() > eps {
                neighbor_union.insert(j);
            }
        }
    }
    // Scope rule: both endpoints must be outputs or output neighbors;
    // edges between two unrelated nodes stay out. Any edge incident to an
    // output automatically puts its other endpoint in the neighbor union.
    let in_scope = |i: usize| outputs.contains(&i) || neighbor_union.contains(&i);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if w[[i, j]].abs() > eps && in_scope(i) && in_scope(j) {
                edges.push((i, j, w[[i, j]]));
            }
        }
    }
    edges
}
