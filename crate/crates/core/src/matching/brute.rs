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

use super::{Matching, WeightedGraph};
use crate::error::{Error, Result};

pub const BRUTE_FORCE_NODE_LIMIT: usize = 16;

/// Exhaustive maximum-weight matching, for graphs of at most
/// [`BRUTE_FORCE_NODE_LIMIT`] nodes.
///
/// Enumerates every matching over positive-weight edges by deciding, for the
/// lowest undecided node, whether it stays single or pairs with a later
/// neighbour.
pub fn brute_force_matching(g: &WeightedGraph) -> Result<Matching> {
    let n = g.node_count();
    if n > BRUTE_FORCE_NODE_LIMIT {
        return Err(Error::TooManyNodes {
            nodes: n,
            limit: BRUTE_FORCE_NODE_LIMIT,
        });
    }
    let mut adj = vec![vec![0.0; n]; n];
    for e in g.edges() {
        adj[e.u][e.v] = e.weight;
        adj[e.v][e.u] = e.weight;
    }

    struct Search<'a> {
        adj: &'a [Vec<f64>],
        current: Vec<(usize, usize)>,
        current_weight: f64,
        best: Vec<(usize, usize)>,
        best_weight: f64,
    }

    impl Search<'_> {
        fn visit(&mut self, used: u32, from: usize) {
            let n = self.adj.len();
            let Some(u) = (from..n).find(|&u| used & (1 << u) == 0) else {
                if self.current_weight > self.best_weight {
                    self.best_weight = self.current_weight;
                    self.best = self.current.clone();
                }
                return;
            };
            let used = used | (1 << u);
            self.visit(used, u + 1);
            for v in u + 1..n {
                let w = self.adj[u][v];
                if used & (1 << v) == 0 && w > 0.0 {
                    self.current.push((u, v));
                    self.current_weight += w;
                    self.visit(used | (1 << v), u + 1);
                    self.current_weight -= w;
                    self.current.pop();
                }
            }
        }
    }

    let mut search = Search {
        adj: &adj,
        current: Vec::new(),
        current_weight: 0.0,
        best: Vec::new(),
        best_weight: 0.0,
    };
    search.visit(0, 0);
    Ok(Matching::from_edges(g, search.best))
}
