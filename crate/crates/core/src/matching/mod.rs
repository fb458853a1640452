// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.

//! Exact maximum-weight matching on general graphs.
//!
//! [`max_weight_matching`] is a primal-dual blossom solver; it handles the
//! bipartite swap graphs and the non-bipartite purification graphs alike.
//! [`brute_force_matching`] enumerates every matching of a small graph and
//! serves as the test oracle.
//!
//! Perfect matchings are never required. Edges of weight `<= 0` can only
//! lower a matching's weight, so they are dropped before solving and never
//! appear in a result.
//!
//! # Numeric tolerance
//!
//! Real weights are normalised by the heaviest edge and mapped to integers
//! in `[0, 2^50]`, and the blossom algorithm runs in
//! exact integer arithmetic. The returned matching is optimal for the scaled
//! weights, so its true weight is within `n * w_max * 2^-51` of the true
//! optimum (`n` nodes, `w_max` heaviest weight). For weights of order one
//! and a few dozen nodes that is below `1e-13`, far inside the `1e-9` the
//! tests demand. Reported totals are always summed from the original `f64`
//! weights.

mod blossom;
mod brute;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use brute::{brute_force_matching, BRUTE_FORCE_NODE_LIMIT};

/// Absolute tolerance used when checking a reported matching weight.
pub const WEIGHT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

/// Undirected simple graph with real edge weights.
///
/// On disk this is `{"nodes": n, "edges": [[u, v, w], ...]}`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(try_from = "GraphDocument", into = "GraphDocument")]
pub struct WeightedGraph {
    node_count: usize,
    edges: Vec<Edge>,
    index: HashMap<(usize, usize), usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphDocument {
    nodes: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl TryFrom<GraphDocument> for WeightedGraph {
    type Error = Error;

    fn try_from(doc: GraphDocument) -> Result<Self> {
        WeightedGraph::from_edges(doc.nodes, doc.edges)
    }
}

impl From<WeightedGraph> for GraphDocument {
    fn from(g: WeightedGraph) -> Self {
        GraphDocument {
            nodes: g.node_count,
            edges: g.edges.iter().map(|e| (e.u, e.v, e.weight)).collect(),
        }
    }
}

fn key(u: usize, v: usize) -> (usize, usize) {
    (u.min(v), u.max(v))
}

impl WeightedGraph {
    pub fn new(node_count: usize) -> Self {
        WeightedGraph {
            node_count,
            ..Default::default()
        }
    }

    pub fn from_edges<I>(node_count: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut g = WeightedGraph::new(node_count);
        for (u, v, w) in edges {
            g.add_edge(u, v, w)?;
        }
        Ok(g)
    }

    pub fn add_edge(&mut self, u: usize, v: usize, weight: f64) -> Result<()> {
        if u >= self.node_count || v >= self.node_count {
            return Err(Error::InvalidGraph(format!(
                "edge ({u}, {v}) references a node outside 0..{}",
                self.node_count
            )));
        }
        if u == v {
            return Err(Error::InvalidGraph(format!("self-loop on node {u}")));
        }
        if !weight.is_finite() {
            return Err(Error::InvalidGraph(format!(
                "edge ({u}, {v}) has non-finite weight {weight}"
            )));
        }
        let k = key(u, v);
        if self.index.contains_key(&k) {
            return Err(Error::InvalidGraph(format!("duplicate edge ({u}, {v})")));
        }
        self.index.insert(k, self.edges.len());
        self.edges.push(Edge { u, v, weight });
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn weight(&self, u: usize, v: usize) -> Option<f64> {
        self.index.get(&key(u, v)).map(|&i| self.edges[i].weight)
    }

    /// Total weight of the given edge set, or `None` if an edge is missing.
    pub fn weight_of(&self, edges: &[(usize, usize)]) -> Option<f64> {
        edges.iter().map(|&(u, v)| self.weight(u, v)).sum()
    }
}

/// A set of node-disjoint edges together with its total weight.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Matching {
    /// Matched edges as `(low, high)` node pairs, sorted.
    pub matched_edges: Vec<(usize, usize)>,
    pub total_weight: f64,
}

impl Matching {
    pub fn empty() -> Self {
        Matching::default()
    }

    /// Builds a matching from edges of `g`, normalising edge order and
    /// summing weights from the graph.
    pub(crate) fn from_edges(g: &WeightedGraph, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut matched_edges: Vec<(usize, usize)> = edges.into_iter().map(|(u, v)| key(u, v)).collect();
        matched_edges.sort_unstable();
        let total_weight = g
            .weight_of(&matched_edges)
            .expect("matched edge missing from graph");
        Matching {
            matched_edges,
            total_weight,
        }
    }

    pub fn len(&self) -> usize {
        self.matched_edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matched_edges.is_empty()
    }

    /// Partner of `node`, if matched.
    pub fn mate(&self, node: usize) -> Option<usize> {
        self.matched_edges.iter().find_map(|&(u, v)| {
            if u == node {
                Some(v)
            } else if v == node {
                Some(u)
            } else {
                None
            }
        })
    }
}

/// Returns a maximum-weight matching of `g`. Ties are broken arbitrarily.
pub fn max_weight_matching(g: &WeightedGraph) -> Matching {
    let max_weight = g
        .edges()
        .iter()
        .map(|e| e.weight)
        .filter(|&w| w > 0.0)
        .fold(0.0_f64, f64::max);
    if max_weight <= 0.0 {
        return Matching::empty();
    }

    let scale = 2f64.powi(50);
    let scaled: Vec<(usize, usize, i64)> = g
        .edges()
        .iter()
        .filter(|e| e.weight > 0.0)
        .filter_map(|e| {
            let w = (e.weight / max_weight * scale).round() as i64;
            (w > 0).then_some((e.u, e.v, w))
        })
        .collect();

    let mate = blossom::solve(g.node_count(), &scaled);
    let pairs = mate
        .iter()
        .enumerate()
        .filter_map(|(u, m)| m.filter(|&v| u < v).map(|v| (u, v)));
    Matching::from_edges(g, pairs)
}

/// Checks that `m` is a matching of `g`: node-disjoint, every edge present in
/// `g` with positive weight, and `total_weight` consistent with the edges.
pub fn validate_matching(g: &WeightedGraph, m: &Matching) -> bool {
    let mut used = vec![false; g.node_count()];
    let mut sum = 0.0;
    for &(u, v) in &m.matched_edges {
        let Some(w) = g.weight(u, v) else {
            return false;
        };
        if w <= 0.0 || used[u] || used[v] {
            return false;
        }
        used[u] = true;
        used[v] = true;
        sum += w;
    }
    (sum - m.total_weight).abs() <= WEIGHT_TOLERANCE * sum.abs().max(1.0)
}
