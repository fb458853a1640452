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

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use repeater_core::matching::WEIGHT_TOLERANCE;
use repeater_core::{brute_force_matching, max_weight_matching, validate_matching, WeightedGraph};

fn random_graph(
    rng: &mut ChaCha8Rng,
    nodes: usize,
    density: f64,
    weight: impl Fn(f64) -> f64,
) -> WeightedGraph {
    let mut g = WeightedGraph::new(nodes);
    for u in 0..nodes {
        for v in u + 1..nodes {
            if rng.gen_bool(density) {
                g.add_edge(u, v, weight(rng.gen())).unwrap();
            }
        }
    }
    g
}

fn check_against_oracle(g: &WeightedGraph) {
    let fast = max_weight_matching(g);
    let slow = brute_force_matching(g).unwrap();
    assert!(validate_matching(g, &fast), "invalid matching {fast:?} for {g:?}");
    assert!(
        (fast.total_weight - slow.total_weight).abs() <= WEIGHT_TOLERANCE,
        "solver {} vs oracle {} on {g:?}",
        fast.total_weight,
        slow.total_weight
    );
    for &(u, v) in &fast.matched_edges {
        assert!(g.weight(u, v).unwrap() > 0.0);
    }
}

#[test]
fn real_weights_up_to_eight_nodes() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for i in 0..3000 {
        let nodes = rng.gen_range(0..=8);
        let density = [0.3, 0.6, 1.0][i % 3];
        let g = random_graph(&mut rng, nodes, density, |x| -1.0 + 3.0 * x);
        check_against_oracle(&g);
    }
}

#[test]
fn integer_weights_with_many_ties() {
    // Small integer weights produce ties and force nested blossoms.
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..2000 {
        let nodes = rng.gen_range(2..=11);
        let density = rng.gen_range(0.2..=1.0);
        let g = random_graph(&mut rng, nodes, density, |x| (x * 5.0).floor());
        check_against_oracle(&g);
    }
}

#[test]
fn larger_dense_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..40 {
        let nodes = rng.gen_range(12..=14);
        let g = random_graph(&mut rng, nodes, 0.8, |x| (x * 20.0).floor() / 4.0);
        check_against_oracle(&g);
    }
}

#[test]
fn bipartite_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..500 {
        let left = rng.gen_range(0..=5);
        let right = rng.gen_range(0..=5);
        let mut g = WeightedGraph::new(left + right);
        for u in 0..left {
            for v in 0..right {
                g.add_edge(u, left + v, rng.gen_range(0.0..1.0)).unwrap();
            }
        }
        check_against_oracle(&g);
    }
}

fn arb_graph() -> impl Strategy<Value = WeightedGraph> {
    (1usize..=8).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        let len = pairs.len();
        proptest::collection::vec(proptest::option::weighted(0.6, -1.0f64..2.0), len).prop_map(move |ws| {
            let edges = pairs
                .iter()
                .zip(ws)
                .filter_map(|(&(u, v), w)| w.map(|w| (u, v, w)));
            WeightedGraph::from_edges(n, edges).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn scaling_covariance(g in arb_graph(), c in 0.01f64..100.0) {
        let m = max_weight_matching(&g);
        let scaled = WeightedGraph::from_edges(
            g.node_count(),
            g.edges().iter().map(|e| (e.u, e.v, e.weight * c)),
        ).unwrap();
        let ms = max_weight_matching(&scaled);
        prop_assert!((ms.total_weight - c * m.total_weight).abs() <= 1e-9 * c.max(1.0));
        // The unscaled optimum is still optimal on the scaled instance.
        let reused = scaled.weight_of(&m.matched_edges).unwrap();
        prop_assert!((reused - ms.total_weight).abs() <= 1e-9 * c.max(1.0));
    }

    #[test]
    fn adding_an_edge_never_hurts(g in arb_graph(), w in -1.0f64..2.0, a in 0usize..8, b in 0usize..8) {
        let n = g.node_count();
        let (u, v) = (a % n, b % n);
        prop_assume!(u != v && g.weight(u, v).is_none());
        let mut bigger = g.clone();
        bigger.add_edge(u, v, w).unwrap();
        let before = max_weight_matching(&g).total_weight;
        let after = max_weight_matching(&bigger).total_weight;
        prop_assert!(after >= before - 1e-9);
    }

    #[test]
    fn solver_output_is_valid(g in arb_graph()) {
        prop_assert!(validate_matching(&g, &max_weight_matching(&g)));
    }
}
