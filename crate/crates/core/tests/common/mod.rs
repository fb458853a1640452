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

#![allow(dead_code)]

use std::collections::{HashMap, HashSet};

use rand::Rng;
use repeater_core::policies::{run_policy_capped, MemorySlot, Node};
use repeater_core::sim::Simulator;
use repeater_core::{
    DecayParams, EntPair, Fidelity, NetworkSnapshot, PairId, Policy, ScheduleOutcome, SimParams, Span,
    SuccessModel, UtilityKind,
};

pub fn fid(v: f64) -> Fidelity {
    Fidelity::new(v).unwrap()
}

/// Aligned link-level pairs: SR pair `i` in memories (s_i, r_i), RD pair
/// `i` in (r_{m+i}, d_i).
pub fn link_pairs(span: Span, fids: &[f64], memories: usize, first_id: u64) -> Vec<EntPair> {
    fids.iter()
        .enumerate()
        .map(|(i, &v)| {
            let left = if span == Span::RD { memories + i } else { i };
            EntPair::new(first_id + i as u64, span, left, i, fid(v))
        })
        .collect()
}

pub fn snapshot(sr: &[f64], rd: &[f64]) -> NetworkSnapshot {
    let m = sr.len().max(rd.len());
    NetworkSnapshot::new(
        link_pairs(Span::SR, sr, m, 0),
        link_pairs(Span::RD, rd, m, sr.len() as u64),
        0,
    )
    .unwrap()
}

/// Random snapshot with up to `max_per_link` pairs per link, random birth
/// slots, random purified flags and fidelities in `[low, 1]`.
pub fn random_snapshot(rng: &mut impl Rng, max_per_link: usize, low: f64) -> NetworkSnapshot {
    let m = max_per_link;
    let mut sr = Vec::new();
    let mut rd = Vec::new();
    let mut id = 0;
    for i in 0..m {
        for span in [Span::SR, Span::RD] {
            if rng.gen_bool(0.7) {
                let left = if span == Span::RD { m + i } else { i };
                let mut p = EntPair::new(id, span, left, i, fid(rng.gen_range(low..=1.0)));
                p.birth_slot = rng.gen_range(0..20);
                p.purified = rng.gen_bool(0.2);
                id += 1;
                if span == Span::SR {
                    sr.push(p)
                } else {
                    rd.push(p)
                }
            }
        }
    }
    let mut snap = NetworkSnapshot::new(sr, rd, 20).unwrap();
    snap.next_id = PairId(id + 100);
    snap
}

/// Checks the structural invariants of a schedule outcome.
pub fn check_outcome(snap: &NetworkSnapshot, out: &ScheduleOutcome) -> Result<(), String> {
    let inputs: Vec<&EntPair> = snap.sr_pairs.iter().chain(&snap.rd_pairs).collect();
    let before: HashSet<MemorySlot> = inputs.iter().flat_map(|p| p.memories()).collect();

    // Memory conservation.
    let mut held = HashSet::new();
    for p in out
        .remaining_sr
        .iter()
        .chain(&out.remaining_rd)
        .chain(&out.e2e_pairs)
    {
        for m in p.memories() {
            if !held.insert(m) {
                return Err(format!("memory {m:?} held twice"));
            }
        }
    }
    let mut freed = HashSet::new();
    for &m in &out.freed_slots {
        if !freed.insert(m) {
            return Err(format!("memory {m:?} freed twice"));
        }
        if held.contains(&m) {
            return Err(format!("memory {m:?} both freed and held"));
        }
    }
    let after: HashSet<MemorySlot> = held.union(&freed).copied().collect();
    if after != before {
        return Err(format!(
            "memory accounting mismatch: before {before:?}, after {after:?}"
        ));
    }

    // Each pair consumed at most once.
    let mut consumed = HashSet::new();
    for r in &out.purifications {
        for id in [r.inputs.0, r.inputs.1] {
            if !consumed.insert(id) {
                return Err(format!("pair {id} consumed twice"));
            }
        }
    }
    for s in &out.swaps {
        for id in [s.sr, s.rd] {
            if !consumed.insert(id) {
                return Err(format!("pair {id} consumed twice"));
            }
        }
    }

    // Ancestry: every output's birth slot is the min over its inputs.
    let mut birth: HashMap<PairId, u64> = inputs.iter().map(|p| (p.id, p.birth_slot)).collect();
    let mut produced: HashMap<PairId, &EntPair> = HashMap::new();
    for p in out
        .remaining_sr
        .iter()
        .chain(&out.remaining_rd)
        .chain(&out.e2e_pairs)
    {
        produced.insert(p.id, p);
    }
    // Resolve operations whose inputs are known until none are left.
    let mut pending: Vec<(Vec<PairId>, Option<PairId>, bool)> = out
        .purifications
        .iter()
        .map(|r| (vec![r.inputs.0, r.inputs.1], r.output, true))
        .chain(out.swaps.iter().map(|s| (vec![s.sr, s.rd], s.output, false)))
        .collect();
    while !pending.is_empty() {
        let before = pending.len();
        let mut violation = None;
        pending.retain(|(ins, output, is_purify)| {
            if !ins.iter().all(|i| birth.contains_key(i)) {
                return true;
            }
            let Some(o) = output else { return false };
            let b = ins.iter().map(|i| birth[i]).min().unwrap();
            birth.insert(*o, b);
            if let Some(p) = produced.get(o) {
                if p.birth_slot != b {
                    violation = Some(format!(
                        "pair {o} has birth slot {} but oldest ancestor {b}",
                        p.birth_slot
                    ));
                } else if *is_purify && !p.purified {
                    violation = Some(format!("purification output {o} not flagged purified"));
                }
            }
            false
        });
        if let Some(v) = violation {
            return Err(v);
        }
        if pending.len() == before {
            return Err("operation consumes a pair of unknown origin".into());
        }
    }
    for p in &out.e2e_pairs {
        if p.span != Span::E2E {
            return Err(format!(
                "pair {} listed as end-to-end with span {:?}",
                p.id, p.span
            ));
        }
        if !birth.contains_key(&p.id) {
            return Err(format!("end-to-end pair {} has no recorded origin", p.id));
        }
        if p.id < snap.next_id {
            return Err(format!("end-to-end pair {} reuses an input id", p.id));
        }
    }
    Ok(())
}

/// Random but valid simulation parameters.
pub fn random_params(rng: &mut impl Rng) -> SimParams {
    let fmin = rng.gen_range(0.3..0.8);
    SimParams {
        memories: rng.gen_range(1..=5),
        gen_success_sr: rng.gen_range(0.05..=1.0),
        gen_success_rd: rng.gen_range(0.05..=1.0),
        success: SuccessModel {
            swap_success_p: rng.gen_range(0.2..=1.0),
            purification_stochastic: rng.gen_bool(0.7),
        },
        initial_fidelity: fid(rng.gen_range(fmin..=1.0)),
        decay: DecayParams::new(rng.gen_range(0.001..0.05), rng.gen_range(0.2..5.0)).unwrap(),
        discard_threshold: fid(fmin),
        max_purifications: rng.gen_range(0..=4),
        horizon_slots: 0,
        utility_kind: if rng.gen_bool(0.5) {
            UtilityKind::A
        } else {
            UtilityKind::B
        },
    }
}

/// Runs `slots` steps and checks the per-slot invariants: memory limits,
/// structural validity of every schedule, the discard threshold, and that
/// every delivered pair carries the birth slot of its oldest ancestor.
pub fn check_simulation(params: &SimParams, policy: Policy, seed: u64, slots: u64) -> Result<(), String> {
    let mut sim = Simulator::new(params.clone(), policy, seed).map_err(|e| e.to_string())?;
    let m = params.memories;
    let mut origin: HashMap<PairId, u64> = HashMap::new();
    let register_fresh = |sim: &Simulator, origin: &mut HashMap<PairId, u64>| -> Result<(), String> {
        for s in &sim.state.live_pairs {
            if origin.contains_key(&s.pair.id) {
                continue;
            }
            if s.pair.birth_slot != sim.state.slot || s.anchor_slot != sim.state.slot {
                return Err(format!(
                    "fresh pair {} born at {} in slot {}",
                    s.pair.id, s.pair.birth_slot, sim.state.slot
                ));
            }
            if s.pair.fidelity != params.initial_fidelity || s.pair.purified {
                return Err(format!("fresh pair {} not at the initial fidelity", s.pair.id));
            }
            origin.insert(s.pair.id, s.pair.birth_slot);
        }
        Ok(())
    };
    register_fresh(&sim, &mut origin)?;
    for _ in 0..slots {
        let trace = sim.step();
        let now = trace.report.slot;
        for p in trace.snapshot.sr_pairs.iter().chain(&trace.snapshot.rd_pairs) {
            match origin.get(&p.id) {
                Some(&b) if b == p.birth_slot => {}
                other => {
                    return Err(format!(
                        "slot {now}: pair {} has birth {} but record {other:?}",
                        p.id, p.birth_slot
                    ))
                }
            }
            if p.fidelity < params.discard_threshold {
                return Err(format!("slot {now}: pair {} observed below threshold", p.id));
            }
        }
        check_outcome(&trace.snapshot, &trace.outcome).map_err(|e| format!("slot {now}: {e}"))?;
        let merges = trace.outcome.purifications.len();
        let stages = if policy == Policy::SwapOnly {
            0
        } else if policy == Policy::PtS {
            2
        } else {
            1
        };
        if merges > stages * params.max_purifications {
            return Err(format!("slot {now}: {merges} purifications"));
        }
        for p in trace
            .outcome
            .remaining_sr
            .iter()
            .chain(&trace.outcome.remaining_rd)
        {
            origin.insert(p.id, p.birth_slot);
        }
        for p in &trace.delivered {
            if p.fidelity < params.discard_threshold || p.span != Span::E2E {
                return Err(format!("slot {now}: delivered pair {} invalid", p.id));
            }
        }
        if trace.delivered.len() != trace.report.delivered_e2e.len() {
            return Err(format!("slot {now}: report disagrees with delivered pairs"));
        }
        register_fresh(&sim, &mut origin)?;

        let state = &sim.state;
        for (node, cap) in [(Node::Source, m), (Node::Repeater, 2 * m), (Node::Destination, m)] {
            if state.occupied(node) > cap {
                return Err(format!(
                    "slot {now}: {node:?} holds {} pairs",
                    state.occupied(node)
                ));
            }
        }
        let mut seen = HashSet::new();
        for s in &state.live_pairs {
            for slot in s.pair.memories() {
                let limit = if slot.node == Node::Repeater { 2 * m } else { m };
                if slot.index >= limit || !seen.insert(slot) {
                    return Err(format!("slot {now}: memory {slot:?} invalid or shared"));
                }
                if state.occupant(slot) != Some(s.pair.id) {
                    return Err(format!("slot {now}: occupancy table disagrees at {slot:?}"));
                }
            }
            if s.fidelity_at(state.slot, &params.decay) < params.discard_threshold {
                return Err(format!("slot {now}: pair {} kept below threshold", s.pair.id));
            }
        }
        if seen.len()
            != state.occupied(Node::Source)
                + state.occupied(Node::Repeater)
                + state.occupied(Node::Destination)
        {
            return Err(format!("slot {now}: stale occupancy"));
        }
    }
    Ok(())
}

/// Without decoherence, each slot's schedule must equal the static policy
/// applied to that slot's snapshot with the same random stream.
pub fn check_static_agreement(
    params: &SimParams,
    policy: Policy,
    seed: u64,
    slots: u64,
) -> Result<(), String> {
    let mut sim = Simulator::new(params.clone(), policy, seed).map_err(|e| e.to_string())?;
    for _ in 0..slots {
        let mut rng = sim.rng().clone();
        let trace = sim.step();
        let expected = run_policy_capped(
            policy,
            &trace.snapshot,
            params.utility_kind,
            &params.success,
            Some(params.max_purifications),
            &mut rng,
        );
        if expected != trace.outcome {
            return Err(format!(
                "slot {}: simulator and static policy disagree",
                trace.report.slot
            ));
        }
        for p in trace.snapshot.sr_pairs.iter().chain(&trace.snapshot.rd_pairs) {
            if !p.purified && (p.fidelity.get() - params.initial_fidelity.get()).abs() > 1e-12 {
                return Err(format!(
                    "slot {}: unpurified pair {} drifted",
                    trace.report.slot, p.id
                ));
            }
        }
    }
    Ok(())
}

/// Composite Simpson rule with `n` (even) intervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Mean swap fidelity of two independent uniform pairs, by 2-D quadrature.
pub fn mean_swap_fidelity(low: f64, high: f64) -> f64 {
    let area = (high - low) * (high - low);
    let inner = |a: f64| simpson(|b| a * b + (1.0 - a) * (1.0 - b), low, high, 64);
    simpson(inner, low, high, 64) / area
}

/// Mean of the `k`-th smallest (1-based) of `n` uniform draws on `[low, high]`,
/// integrating the order-statistic density.
pub fn order_statistic_mean(k: usize, n: usize, low: f64, high: f64) -> f64 {
    let fact = |m: usize| (1..=m).map(|x| x as f64).product::<f64>();
    let c = fact(n) / (fact(k - 1) * fact(n - k));
    let density = |u: f64| c * u.powi(k as i32 - 1) * (1.0 - u).powi((n - k) as i32);
    let unit = simpson(|u| u * density(u), 0.0, 1.0, 256);
    low + (high - low) * unit
}

/// Expected `Σ F` when `n` uniform pairs per link are swapped rank by rank,
/// which is what a max-weight matching on `F_s` does.
pub fn sorted_swap_sum(n: usize, low: f64, high: f64) -> f64 {
    (1..=n)
        .map(|k| {
            let x = order_statistic_mean(k, n, low, high);
            // The two links are independent, so E[XY] = E[X] E[Y].
            2.0 * x * x - 2.0 * x + 1.0
        })
        .sum()
}
