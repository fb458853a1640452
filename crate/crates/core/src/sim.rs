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

//! Slotted simulator of the two-link network.
//!
//! Each call to [`Simulator::step`] runs one slot:
//!
//! 1. decay every stored pair to the current slot, drop any below the
//!    threshold, and snapshot the rest;
//! 2. run the policy, with at most `max_purifications` merges per stage;
//! 3. deliver every end-to-end pair at once (pairs below the threshold are
//!    discarded instead) and score the slot;
//! 4. advance the clock and discard pairs that decayed below the threshold;
//! 5. attempt generation on every free aligned memory pair.
//!
//! Decay restarts at every operation: a purified pair decays from its
//! purified fidelity, counted from the slot it was produced in. The
//! `birth_slot` of a pair still records its oldest link-level ancestor.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fidelity::{
    aggregate_utility, decay_fidelity, DecayParams, Fidelity, Utility, UtilityKind, WERNER_FLOOR,
};
use crate::policies::{
    run_policy_capped, EntPair, MemorySlot, NetworkSnapshot, Node, PairId, Policy, ScheduleOutcome, Span,
    SuccessModel,
};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimParams {
    /// Memories per end node; the repeater holds twice as many.
    #[serde(rename = "memories_m")]
    pub memories: usize,
    pub gen_success_sr: f64,
    pub gen_success_rd: f64,
    pub success: SuccessModel,
    #[serde(rename = "initial_fidelity_f0")]
    pub initial_fidelity: Fidelity,
    pub decay: DecayParams,
    #[serde(rename = "discard_threshold_fmin")]
    pub discard_threshold: Fidelity,
    /// Merges allowed per purification stage and slot.
    #[serde(rename = "max_purifications_l")]
    pub max_purifications: usize,
    pub horizon_slots: u64,
    pub utility_kind: UtilityKind,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            memories: 3,
            gen_success_sr: 0.5,
            gen_success_rd: 0.5,
            success: SuccessModel::default(),
            initial_fidelity: Fidelity::new(0.95).unwrap(),
            decay: DecayParams::default(),
            discard_threshold: Fidelity::new(0.5).unwrap(),
            max_purifications: 3,
            horizon_slots: 1000,
            utility_kind: UtilityKind::A,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        if self.memories == 0 {
            return Err(Error::param(
                "memories_m",
                "need at least one memory per end node",
            ));
        }
        for (name, p) in [
            ("gen_success_sr", self.gen_success_sr),
            ("gen_success_rd", self.gen_success_rd),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::param(
                    name,
                    format!("probability must lie in [0, 1], got {p}"),
                ));
            }
        }
        self.success.validate()?;
        self.decay.validate()?;
        // An initial fidelity below the threshold is legal: such pairs are
        // discarded before they can be used.
        for (name, f) in [
            ("initial_fidelity_f0", self.initial_fidelity),
            ("discard_threshold_fmin", self.discard_threshold),
        ] {
            if f.get() <= WERNER_FLOOR {
                return Err(Error::param(name, format!("must exceed 1/4, got {f}")));
            }
        }
        Ok(())
    }
}

/// A stored pair together with the point its decay is measured from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredPair {
    /// `pair.fidelity` is the fidelity at `anchor_slot`.
    pub pair: EntPair,
    pub anchor_slot: u64,
}

impl StoredPair {
    pub fn fidelity_at(&self, slot: u64, decay: &DecayParams) -> Fidelity {
        decay_fidelity(self.pair.fidelity, slot.saturating_sub(self.anchor_slot), decay)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    pub slot: u64,
    pub live_pairs: Vec<StoredPair>,
    pub next_id: PairId,
    memories: usize,
    source: Vec<Option<PairId>>,
    repeater: Vec<Option<PairId>>,
    destination: Vec<Option<PairId>>,
}

impl SimState {
    pub fn new(memories: usize) -> Self {
        SimState {
            slot: 0,
            live_pairs: Vec::new(),
            next_id: PairId(0),
            memories,
            source: vec![None; memories],
            repeater: vec![None; 2 * memories],
            destination: vec![None; memories],
        }
    }

    pub fn memories(&self) -> usize {
        self.memories
    }

    /// Pair held in `slot`, if any.
    pub fn occupant(&self, slot: MemorySlot) -> Option<PairId> {
        let table = match slot.node {
            Node::Source => &self.source,
            Node::Repeater => &self.repeater,
            Node::Destination => &self.destination,
        };
        table.get(slot.index).copied().flatten()
    }

    pub fn occupied(&self, node: Node) -> usize {
        let table = match node {
            Node::Source => &self.source,
            Node::Repeater => &self.repeater,
            Node::Destination => &self.destination,
        };
        table.iter().filter(|s| s.is_some()).count()
    }

    fn table_mut(&mut self, node: Node) -> &mut Vec<Option<PairId>> {
        match node {
            Node::Source => &mut self.source,
            Node::Repeater => &mut self.repeater,
            Node::Destination => &mut self.destination,
        }
    }

    // Occupancy is derived from the live pairs.
    fn rebuild_occupancy(&mut self) {
        for node in [Node::Source, Node::Repeater, Node::Destination] {
            self.table_mut(node).iter_mut().for_each(|s| *s = None);
        }
        let claims: Vec<(MemorySlot, PairId)> = self
            .live_pairs
            .iter()
            .flat_map(|s| s.pair.memories().map(|m| (m, s.pair.id)))
            .collect();
        for (m, id) in claims {
            let cell = &mut self.table_mut(m.node)[m.index];
            debug_assert!(cell.is_none(), "memory {m:?} claimed twice");
            *cell = Some(id);
        }
    }

    fn fresh_id(&mut self) -> PairId {
        let id = self.next_id;
        self.next_id = PairId(id.0 + 1);
        id
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationCounts {
    pub sr: usize,
    pub rd: usize,
}

/// One generation attempt on every free aligned memory pair of each link.
pub fn attempt_generation<R: Rng + ?Sized>(
    state: &mut SimState,
    params: &SimParams,
    rng: &mut R,
) -> GenerationCounts {
    let m = state.memories;
    let mut counts = GenerationCounts::default();
    for (span, p) in [
        (Span::SR, params.gen_success_sr),
        (Span::RD, params.gen_success_rd),
    ] {
        for i in 0..m {
            let (left, right) = match span {
                Span::SR => (i, i),
                _ => (m + i, i),
            };
            let probe = EntPair::new(0, span, left, right, params.initial_fidelity);
            if probe
                .memories()
                .iter()
                .any(|&slot| state.occupant(slot).is_some())
            {
                continue;
            }
            if rng.gen::<f64>() >= p {
                continue;
            }
            let pair = EntPair {
                id: state.fresh_id(),
                birth_slot: state.slot,
                ..probe
            };
            for slot in pair.memories() {
                state.table_mut(slot.node)[slot.index] = Some(pair.id);
            }
            state.live_pairs.push(StoredPair {
                pair,
                anchor_slot: state.slot,
            });
            match span {
                Span::SR => counts.sr += 1,
                _ => counts.rd += 1,
            }
        }
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotReport {
    pub slot: u64,
    pub generated_sr: usize,
    pub generated_rd: usize,
    pub discarded: usize,
    pub delivered_e2e: Vec<Fidelity>,
    /// `null` when nothing useful was delivered.
    pub slot_utility: Utility,
}

/// Everything that happened in one slot, for inspection in tests and tools.
#[derive(Debug, Clone)]
pub struct SlotTrace {
    pub report: SlotReport,
    pub snapshot: NetworkSnapshot,
    pub outcome: ScheduleOutcome,
    pub delivered: Vec<EntPair>,
}

/// Advances `state` by one slot.
pub fn advance_slot<R: Rng + ?Sized>(
    state: &mut SimState,
    params: &SimParams,
    policy: Policy,
    rng: &mut R,
) -> SlotReport {
    advance_slot_traced(state, params, policy, rng).report
}

pub fn advance_slot_traced<R: Rng + ?Sized>(
    state: &mut SimState,
    params: &SimParams,
    policy: Policy,
    rng: &mut R,
) -> SlotTrace {
    let now = state.slot;
    let threshold = params.discard_threshold;
    let mut discarded = 0;

    // (1) Observe.
    let stored = std::mem::take(&mut state.live_pairs);
    let mut sr = Vec::new();
    let mut rd = Vec::new();
    let mut kept = Vec::with_capacity(stored.len());
    for s in stored {
        let f = s.fidelity_at(now, &params.decay);
        if f < threshold {
            discarded += 1;
            continue;
        }
        let observed = EntPair {
            fidelity: f,
            ..s.pair.clone()
        };
        match observed.span {
            Span::SR => sr.push(observed),
            Span::RD => rd.push(observed),
            Span::E2E => unreachable!("end-to-end pairs are never stored"),
        }
        kept.push(s);
    }
    let snapshot = NetworkSnapshot {
        sr_pairs: sr,
        rd_pairs: rd,
        current_slot: now,
        next_id: state.next_id,
    };
    debug_assert!(snapshot.validate().is_ok());

    // (2) Schedule.
    let outcome = run_policy_capped(
        policy,
        &snapshot,
        params.utility_kind,
        &params.success,
        Some(params.max_purifications),
        rng,
    );
    state.next_id = outcome.next_id;

    // Untouched pairs keep their decay anchor; purified ones restart now.
    let mut live = Vec::new();
    for p in outcome.remaining_sr.iter().chain(&outcome.remaining_rd) {
        match kept.iter().position(|s| s.pair.id == p.id) {
            Some(i) => live.push(kept.swap_remove(i)),
            None => live.push(StoredPair {
                pair: p.clone(),
                anchor_slot: now,
            }),
        }
    }
    state.live_pairs = live;

    // (3) Deliver.
    let (delivered, too_weak): (Vec<EntPair>, Vec<EntPair>) = outcome
        .e2e_pairs
        .iter()
        .cloned()
        .partition(|p| p.fidelity >= threshold);
    discarded += too_weak.len();
    let delivered_e2e: Vec<Fidelity> = delivered.iter().map(|p| p.fidelity).collect();
    let slot_utility = aggregate_utility(params.utility_kind, &delivered_e2e);

    // (4) Decay into the next slot.
    state.slot += 1;
    let next = state.slot;
    let before = state.live_pairs.len();
    state
        .live_pairs
        .retain(|s| s.fidelity_at(next, &params.decay) >= threshold);
    discarded += before - state.live_pairs.len();
    state.rebuild_occupancy();

    // (5) Generate.
    let generated = attempt_generation(state, params, rng);

    SlotTrace {
        report: SlotReport {
            slot: now,
            generated_sr: generated.sr,
            generated_rd: generated.rd,
            discarded,
            delivered_e2e,
            slot_utility,
        },
        snapshot,
        outcome,
        delivered,
    }
}

/// A running simulation with its own random stream.
#[derive(Debug, Clone)]
pub struct Simulator {
    pub params: SimParams,
    pub policy: Policy,
    pub state: SimState,
    rng: ChaCha8Rng,
}

impl Simulator {
    /// Starts from empty memories and performs one generation round, so the
    /// first slot already has pairs to schedule.
    pub fn new(params: SimParams, policy: Policy, seed: u64) -> Result<Self> {
        params.validate()?;
        let mut rng = seed::stream(seed);
        let mut state = SimState::new(params.memories);
        attempt_generation(&mut state, &params, &mut rng);
        Ok(Simulator {
            params,
            policy,
            state,
            rng,
        })
    }

    pub fn rng(&self) -> &ChaCha8Rng {
        &self.rng
    }

    pub fn step(&mut self) -> SlotTrace {
        advance_slot_traced(&mut self.state, &self.params, self.policy, &mut self.rng)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub slots: u64,
    pub delivered: usize,
    /// End-to-end pairs delivered per slot.
    pub delivery_rate: f64,
    /// Mean slot utility over slots with a non-degenerate utility.
    pub mean_slot_utility: Option<f64>,
    pub degenerate_slots: u64,
    pub generated: usize,
    pub discarded: usize,
}

impl SimSummary {
    pub fn from_reports(reports: &[SlotReport]) -> Self {
        let slots = reports.len() as u64;
        let delivered: usize = reports.iter().map(|r| r.delivered_e2e.len()).sum();
        let utilities: Vec<f64> = reports.iter().filter_map(|r| r.slot_utility.value()).collect();
        SimSummary {
            slots,
            delivered,
            delivery_rate: if slots == 0 {
                0.0
            } else {
                delivered as f64 / slots as f64
            },
            mean_slot_utility: (!utilities.is_empty())
                .then(|| utilities.iter().sum::<f64>() / utilities.len() as f64),
            degenerate_slots: slots - utilities.len() as u64,
            generated: reports.iter().map(|r| r.generated_sr + r.generated_rd).sum(),
            discarded: reports.iter().map(|r| r.discarded).sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationRun {
    pub policy: Policy,
    pub seed: u64,
    pub params: SimParams,
    pub summary: SimSummary,
    pub reports: Vec<SlotReport>,
}

/// Runs `params.horizon_slots` slots from empty memories.
pub fn run_simulation(params: &SimParams, policy: Policy, seed: u64) -> Result<SimulationRun> {
    params.validate()?;
    let mut reports = Vec::with_capacity(params.horizon_slots as usize);
    if params.horizon_slots > 0 {
        let mut sim = Simulator::new(params.clone(), policy, seed)?;
        for _ in 0..params.horizon_slots {
            reports.push(sim.step().report);
        }
    }
    Ok(SimulationRun {
        policy,
        seed,
        params: params.clone(),
        summary: SimSummary::from_reports(&reports),
        reports,
    })
}
