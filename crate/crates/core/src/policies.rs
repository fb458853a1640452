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

//! Purification and swapping schedules for the `s - r - d` network.
//!
//! Two reductions turn scheduling into matching:
//!
//! * **Swapping.** A complete bipartite graph between the `s-r` pairs and
//!   the `r-d` pairs, weighted by `g(F_s(F_i, F_j))`. A max-weight matching
//!   says which pairs to join at the repeater.
//! * **Purification.** One node per pair plus one private replica node per
//!   pair. Pair-pair edges carry `g(F_p(F_i, F_j))`, the pair-replica edge
//!   carries `g(F_i)`. Matching a pair to its replica means "keep it as is".
//!
//! Matching weights ignore success probabilities; outcomes are sampled
//! afterwards from the caller's random stream.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fidelity::{g_value, purify_fidelity, purify_success_prob, swap_fidelity, Fidelity, UtilityKind};
use crate::matching::{max_weight_matching, Matching, WeightedGraph};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PairId(pub u64);

impl fmt::Display for PairId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Which two nodes an entangled pair connects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Span {
    SR,
    RD,
    E2E,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Node {
    Source,
    Repeater,
    Destination,
}

/// One quantum memory. Repeater memories `0..M` face the source and
/// `M..2M` face the destination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MemorySlot {
    pub node: Node,
    pub index: usize,
}

impl MemorySlot {
    pub fn new(node: Node, index: usize) -> Self {
        MemorySlot { node, index }
    }
}

/// An entangled pair held in two memories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntPair {
    pub id: PairId,
    pub span: Span,
    /// Memory index at the left node (`s` for SR and E2E, `r` for RD).
    pub left_slot: usize,
    /// Memory index at the right node (`r` for SR, `d` for RD and E2E).
    pub right_slot: usize,
    pub fidelity: Fidelity,
    /// Slot in which the oldest link-level ancestor was generated.
    pub birth_slot: u64,
    /// Set on purification outputs, which are never purified again.
    pub purified: bool,
}

impl EntPair {
    pub fn new(id: u64, span: Span, left_slot: usize, right_slot: usize, fidelity: Fidelity) -> Self {
        EntPair {
            id: PairId(id),
            span,
            left_slot,
            right_slot,
            fidelity,
            birth_slot: 0,
            purified: false,
        }
    }

    pub fn memories(&self) -> [MemorySlot; 2] {
        let (left, right) = match self.span {
            Span::SR => (Node::Source, Node::Repeater),
            Span::RD => (Node::Repeater, Node::Destination),
            Span::E2E => (Node::Source, Node::Destination),
        };
        [
            MemorySlot::new(left, self.left_slot),
            MemorySlot::new(right, self.right_slot),
        ]
    }

    fn slot_key(&self) -> (usize, usize) {
        (self.left_slot, self.right_slot)
    }
}

/// What the controller observes at the start of a slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSnapshot {
    pub sr_pairs: Vec<EntPair>,
    pub rd_pairs: Vec<EntPair>,
    pub current_slot: u64,
    /// First identifier free for pairs created by the schedule.
    pub next_id: PairId,
}

impl NetworkSnapshot {
    /// Validates spans and memory exclusivity. New pairs will be numbered
    /// after the largest id present.
    pub fn new(sr_pairs: Vec<EntPair>, rd_pairs: Vec<EntPair>, current_slot: u64) -> Result<Self> {
        let next_id = sr_pairs
            .iter()
            .chain(&rd_pairs)
            .map(|p| p.id.0 + 1)
            .max()
            .unwrap_or(0);
        Self::with_next_id(sr_pairs, rd_pairs, current_slot, PairId(next_id))
    }

    pub fn with_next_id(
        sr_pairs: Vec<EntPair>,
        rd_pairs: Vec<EntPair>,
        current_slot: u64,
        next_id: PairId,
    ) -> Result<Self> {
        let snapshot = NetworkSnapshot {
            sr_pairs,
            rd_pairs,
            current_slot,
            next_id,
        };
        snapshot.validate()?;
        Ok(snapshot)
    }

    pub fn empty(current_slot: u64) -> Self {
        NetworkSnapshot {
            sr_pairs: Vec::new(),
            rd_pairs: Vec::new(),
            current_slot,
            next_id: PairId(0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let spans_ok = self.sr_pairs.iter().all(|p| p.span == Span::SR)
            && self.rd_pairs.iter().all(|p| p.span == Span::RD);
        if !spans_ok {
            return Err(Error::param("snapshot", "pair listed under the wrong link"));
        }
        let mut ids = std::collections::HashSet::new();
        let mut slots = std::collections::HashSet::new();
        for p in self.sr_pairs.iter().chain(&self.rd_pairs) {
            if !ids.insert(p.id) {
                return Err(Error::param("snapshot", format!("duplicate pair id {}", p.id)));
            }
            if p.id >= self.next_id {
                return Err(Error::param(
                    "snapshot",
                    format!("pair id {} not below next_id", p.id),
                ));
            }
            for m in p.memories() {
                if !slots.insert(m) {
                    return Err(Error::param("snapshot", format!("memory {m:?} holds two pairs")));
                }
            }
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.sr_pairs.is_empty() && self.rd_pairs.is_empty()
    }
}

/// Success probabilities of the two quantum operations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuccessModel {
    /// Probability `p_s` that a swap succeeds.
    pub swap_success_p: f64,
    /// When set, a purification of `F1`, `F2` succeeds with probability
    /// `F1 F2 + (1 - F1)(1 - F2)`; otherwise it always succeeds.
    pub purification_stochastic: bool,
}

impl SuccessModel {
    pub fn deterministic() -> Self {
        SuccessModel {
            swap_success_p: 1.0,
            purification_stochastic: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.swap_success_p) {
            return Err(Error::param(
                "swap_success_p",
                format!("probability must lie in [0, 1], got {}", self.swap_success_p),
            ));
        }
        Ok(())
    }
}

impl Default for SuccessModel {
    fn default() -> Self {
        SuccessModel {
            swap_success_p: 1.0,
            purification_stochastic: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Policy {
    /// Purify each link, then swap.
    PtS,
    /// Swap, then purify the end-to-end pairs.
    StP,
    /// Swap without any purification.
    SwapOnly,
}

impl Policy {
    pub const ALL: [Policy; 3] = [Policy::PtS, Policy::StP, Policy::SwapOnly];

    pub fn name(self) -> &'static str {
        match self {
            Policy::PtS => "PtS",
            Policy::StP => "StP",
            Policy::SwapOnly => "SwapOnly",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "pts" | "purifythenswap" => Ok(Policy::PtS),
            "stp" | "swapthenpurify" => Ok(Policy::StP),
            "swaponly" | "swap" => Ok(Policy::SwapOnly),
            _ => Err(Error::param("policy", format!("unknown policy `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PurificationRecord {
    pub inputs: (PairId, PairId),
    pub success: bool,
    pub output: Option<PairId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwapRecord {
    pub sr: PairId,
    pub rd: PairId,
    pub success: bool,
    pub output: Option<PairId>,
}

/// Result of applying a policy to a snapshot.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScheduleOutcome {
    pub e2e_pairs: Vec<EntPair>,
    /// Link-level pairs still held afterwards: untouched, or purified but
    /// left unswapped.
    pub remaining_sr: Vec<EntPair>,
    pub remaining_rd: Vec<EntPair>,
    pub purifications: Vec<PurificationRecord>,
    pub swaps: Vec<SwapRecord>,
    pub freed_slots: Vec<MemorySlot>,
    /// Weight of the swap-stage matching.
    pub swap_matching_weight: f64,
    pub next_id: PairId,
}

impl ScheduleOutcome {
    pub fn e2e_fidelities(&self) -> Vec<Fidelity> {
        self.e2e_pairs.iter().map(|p| p.fidelity).collect()
    }
}

/// Purification graph over `n` pairs: node `i` is pair `i`, node `n + i`
/// is its replica.
#[derive(Debug, Clone)]
pub struct PurifyGraph {
    pub graph: WeightedGraph,
    pub pair_count: usize,
}

/// Decision for one pair or pair of pairs in a purification matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PurifyChoice {
    Keep(usize),
    Merge(usize, usize),
}

impl PurifyGraph {
    pub fn replica(&self, pair: usize) -> usize {
        self.pair_count + pair
    }

    /// Reads a matching of this graph as purification decisions. Merges come
    /// first in edge order; pairs left unmatched are kept.
    pub fn decode(&self, m: &Matching) -> Vec<PurifyChoice> {
        let n = self.pair_count;
        let mut merged = vec![false; n];
        let mut choices = Vec::new();
        for &(u, v) in &m.matched_edges {
            if v < n {
                merged[u] = true;
                merged[v] = true;
                choices.push(PurifyChoice::Merge(u, v));
            }
        }
        choices.extend((0..n).filter(|&i| !merged[i]).map(PurifyChoice::Keep));
        choices
    }
}

/// Builds the purification graph for pairs on one span.
///
/// Pairs already purified get only their replica edge. A merge edge is
/// omitted when the two fidelities make purification undefined.
pub fn build_purify_graph(pairs: &[EntPair], kind: UtilityKind) -> PurifyGraph {
    let n = pairs.len();
    debug_assert!(pairs.windows(2).all(|w| w[0].span == w[1].span));
    let mut graph = WeightedGraph::new(2 * n);
    for (i, a) in pairs.iter().enumerate() {
        graph
            .add_edge(i, n + i, g_value(kind, a.fidelity))
            .expect("replica edge is valid");
        if a.purified {
            continue;
        }
        for (j, b) in pairs.iter().enumerate().skip(i + 1) {
            if b.purified {
                continue;
            }
            if let Ok(fp) = purify_fidelity(a.fidelity, b.fidelity) {
                graph
                    .add_edge(i, j, g_value(kind, fp))
                    .expect("merge edge is valid");
            }
        }
    }
    PurifyGraph { graph, pair_count: n }
}

/// Bipartite swap graph: node `i` is `sr[i]`, node `sr.len() + j` is `rd[j]`.
#[derive(Debug, Clone)]
pub struct SwapGraph {
    pub graph: WeightedGraph,
    pub sr_count: usize,
}

impl SwapGraph {
    /// Matched `(sr index, rd index)` pairs, in edge order.
    pub fn decode(&self, m: &Matching) -> Vec<(usize, usize)> {
        m.matched_edges
            .iter()
            .map(|&(u, v)| (u, v - self.sr_count))
            .collect()
    }
}

pub fn build_swap_graph(sr: &[EntPair], rd: &[EntPair], kind: UtilityKind) -> SwapGraph {
    let n = sr.len();
    let mut graph = WeightedGraph::new(n + rd.len());
    for (i, a) in sr.iter().enumerate() {
        for (j, b) in rd.iter().enumerate() {
            graph
                .add_edge(i, n + j, g_value(kind, swap_fidelity(a.fidelity, b.fidelity)))
                .expect("swap edge is valid");
        }
    }
    SwapGraph { graph, sr_count: n }
}

/// Applies `policy` to `snapshot`, sampling operation outcomes from `rng`.
pub fn run_policy<R: Rng + ?Sized>(
    policy: Policy,
    snapshot: &NetworkSnapshot,
    kind: UtilityKind,
    success: &SuccessModel,
    rng: &mut R,
) -> ScheduleOutcome {
    run_policy_capped(policy, snapshot, kind, success, None, rng)
}

/// Like [`run_policy`], but each purification stage applies at most
/// `max_purifications` merges. Surplus merges with the smallest gain over
/// keeping both inputs are turned back into keeps.
pub fn run_policy_capped<R: Rng + ?Sized>(
    policy: Policy,
    snapshot: &NetworkSnapshot,
    kind: UtilityKind,
    success: &SuccessModel,
    max_purifications: Option<usize>,
    rng: &mut R,
) -> ScheduleOutcome {
    let mut exec = Executor {
        kind,
        success,
        cap: max_purifications,
        outcome: ScheduleOutcome {
            next_id: snapshot.next_id,
            ..Default::default()
        },
    };
    let sr = snapshot.sr_pairs.clone();
    let rd = snapshot.rd_pairs.clone();
    match policy {
        Policy::PtS => {
            let sr = exec.purify(sr, rng);
            let rd = exec.purify(rd, rng);
            let e2e = exec.swap(sr, rd, rng);
            exec.outcome.e2e_pairs = e2e;
        }
        Policy::StP => {
            let e2e = exec.swap(sr, rd, rng);
            exec.outcome.e2e_pairs = exec.purify(e2e, rng);
        }
        Policy::SwapOnly => {
            let e2e = exec.swap(sr, rd, rng);
            exec.outcome.e2e_pairs = e2e;
        }
    }
    exec.outcome
}

struct Executor<'a> {
    kind: UtilityKind,
    success: &'a SuccessModel,
    cap: Option<usize>,
    outcome: ScheduleOutcome,
}

impl Executor<'_> {
    fn fresh_id(&mut self) -> PairId {
        let id = self.outcome.next_id;
        self.outcome.next_id = PairId(id.0 + 1);
        id
    }

    fn free(&mut self, pair: &EntPair) {
        self.outcome.freed_slots.extend(pair.memories());
    }

    // Runs one purification stage and returns the pairs that survive it,
    // ordered by memory slot.
    fn purify<R: Rng + ?Sized>(&mut self, pairs: Vec<EntPair>, rng: &mut R) -> Vec<EntPair> {
        if pairs.len() < 2 {
            return pairs;
        }
        let pg = build_purify_graph(&pairs, self.kind);
        let m = max_weight_matching(&pg.graph);
        let mut choices = pg.decode(&m);
        if let Some(cap) = self.cap {
            apply_cap(&pg, &mut choices, cap);
        }

        let mut survivors = Vec::with_capacity(pairs.len());
        for choice in choices {
            match choice {
                PurifyChoice::Keep(i) => survivors.push(pairs[i].clone()),
                PurifyChoice::Merge(i, j) => {
                    if let Some(p) = self.merge(&pairs[i], &pairs[j], rng) {
                        survivors.push(p);
                    }
                }
            }
        }
        survivors.sort_by_key(EntPair::slot_key);
        survivors
    }

    fn merge<R: Rng + ?Sized>(&mut self, a: &EntPair, b: &EntPair, rng: &mut R) -> Option<EntPair> {
        let fidelity = purify_fidelity(a.fidelity, b.fidelity).expect("merge edges are non-degenerate");
        let succeeded = !self.success.purification_stochastic
            || rng.gen::<f64>() < purify_success_prob(a.fidelity, b.fidelity);
        let (kept, dropped) = if a.slot_key() <= b.slot_key() {
            (a, b)
        } else {
            (b, a)
        };
        if !succeeded {
            self.free(a);
            self.free(b);
            self.outcome.purifications.push(PurificationRecord {
                inputs: (a.id, b.id),
                success: false,
                output: None,
            });
            return None;
        }
        self.free(dropped);
        let out = EntPair {
            id: self.fresh_id(),
            span: a.span,
            left_slot: kept.left_slot,
            right_slot: kept.right_slot,
            fidelity,
            birth_slot: a.birth_slot.min(b.birth_slot),
            purified: true,
        };
        self.outcome.purifications.push(PurificationRecord {
            inputs: (a.id, b.id),
            success: true,
            output: Some(out.id),
        });
        Some(out)
    }

    // Runs the swap stage and returns the end-to-end pairs created.
    // Unmatched link-level pairs are recorded as remaining.
    fn swap<R: Rng + ?Sized>(&mut self, sr: Vec<EntPair>, rd: Vec<EntPair>, rng: &mut R) -> Vec<EntPair> {
        let sg = build_swap_graph(&sr, &rd, self.kind);
        let m = max_weight_matching(&sg.graph);
        self.outcome.swap_matching_weight = m.total_weight;

        let mut used_sr = vec![false; sr.len()];
        let mut used_rd = vec![false; rd.len()];
        let mut e2e = Vec::new();
        for (i, j) in sg.decode(&m) {
            used_sr[i] = true;
            used_rd[j] = true;
            let (a, b) = (&sr[i], &rd[j]);
            let succeeded = rng.gen::<f64>() < self.success.swap_success_p;
            // The Bell measurement consumes both repeater qubits either way.
            self.outcome
                .freed_slots
                .push(MemorySlot::new(Node::Repeater, a.right_slot));
            self.outcome
                .freed_slots
                .push(MemorySlot::new(Node::Repeater, b.left_slot));
            let output = if succeeded {
                let pair = EntPair {
                    id: self.fresh_id(),
                    span: Span::E2E,
                    left_slot: a.left_slot,
                    right_slot: b.right_slot,
                    fidelity: swap_fidelity(a.fidelity, b.fidelity),
                    birth_slot: a.birth_slot.min(b.birth_slot),
                    purified: false,
                };
                let id = pair.id;
                e2e.push(pair);
                Some(id)
            } else {
                self.outcome
                    .freed_slots
                    .push(MemorySlot::new(Node::Source, a.left_slot));
                self.outcome
                    .freed_slots
                    .push(MemorySlot::new(Node::Destination, b.right_slot));
                None
            };
            self.outcome.swaps.push(SwapRecord {
                sr: a.id,
                rd: b.id,
                success: succeeded,
                output,
            });
        }
        self.outcome
            .remaining_sr
            .extend(sr.into_iter().zip(used_sr).filter(|(_, u)| !u).map(|(p, _)| p));
        self.outcome
            .remaining_rd
            .extend(rd.into_iter().zip(used_rd).filter(|(_, u)| !u).map(|(p, _)| p));
        e2e
    }
}

// Keeps the `cap` merges with the largest gain over their two replica
// edges; the rest become keeps. Ties keep matching order.
fn apply_cap(pg: &PurifyGraph, choices: &mut Vec<PurifyChoice>, cap: usize) {
    let weight = |u: usize, v: usize| pg.graph.weight(u, v).unwrap_or(0.0).max(0.0);
    let mut merges: Vec<(usize, usize, f64)> = choices
        .iter()
        .filter_map(|c| match *c {
            PurifyChoice::Merge(i, j) => {
                let gain = weight(i, j) - weight(i, pg.replica(i)) - weight(j, pg.replica(j));
                Some((i, j, gain))
            }
            PurifyChoice::Keep(_) => None,
        })
        .collect();
    if merges.len() <= cap {
        return;
    }
    merges.sort_by(|a, b| b.2.total_cmp(&a.2));
    let dropped = merges.split_off(cap);
    choices.retain(|c| match *c {
        PurifyChoice::Merge(i, j) => !dropped.iter().any(|&(a, b, _)| (a, b) == (i, j)),
        PurifyChoice::Keep(_) => true,
    });
    for (i, j, _) in dropped {
        choices.push(PurifyChoice::Keep(i));
        choices.push(PurifyChoice::Keep(j));
    }
}
