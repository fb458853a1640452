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

//! Shared inputs for the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use repeater_core::WeightedGraph;

/// Random graph with each edge present with probability `density` and
/// weights uniform in `[-1, 2)`.
pub fn random_graph(nodes: usize, density: f64, seed: u64) -> WeightedGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = WeightedGraph::new(nodes);
    for u in 0..nodes {
        for v in u + 1..nodes {
            if rng.gen_bool(density) {
                g.add_edge(u, v, rng.gen_range(-1.0..2.0))
                    .expect("generated edge is valid");
            }
        }
    }
    g
}
