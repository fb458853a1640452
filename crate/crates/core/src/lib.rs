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

//! Scheduling of entanglement purification and swapping in a two-link
//! quantum repeater network (source `s`, repeater `r`, destination `d`).
//!
//! Both scheduling decisions reduce to maximum-weight matching problems:
//! swapping is a matching on the complete bipartite graph between the
//! `s-r` and `r-d` link-level pairs, and purification is a matching on a
//! general graph where every pair has a private "replica" node that
//! stands for "leave this pair alone".
//!
//! The crate is layered bottom-up:
//!
//! * [`fidelity`]: Werner-state bookkeeping formulas and utilities.
//! * [`matching`]: exact max-weight matching plus a brute-force oracle.
//! * [`policies`]: the two graph reductions and the Purify-then-Swap,
//!   Swap-then-Purify and Swap-only policies.
//! * [`sim`]: a slotted simulator with generation, decay and discard.
//! * [`experiment`]: the single-shot Monte Carlo policy comparison.

pub mod error;
pub mod experiment;
pub mod fidelity;
pub mod matching;
pub mod policies;
pub mod seed;
pub mod sim;

pub use error::{Error, Result};
pub use experiment::{
    relative_gap, run_experiment, run_trial, ExperimentConfig, ExperimentReport, TrialResult,
};
pub use fidelity::{
    aggregate_utility, decay_fidelity, distillation_rate, g_value, purify_fidelity, purify_success_prob,
    swap_fidelity, DecayParams, Fidelity, Utility, UtilityKind,
};
pub use matching::{brute_force_matching, max_weight_matching, validate_matching, Matching, WeightedGraph};
pub use policies::{
    build_purify_graph, build_swap_graph, run_policy, EntPair, NetworkSnapshot, PairId, Policy,
    ScheduleOutcome, Span, SuccessModel,
};
pub use sim::{run_simulation, SimParams, SimState, SimulationRun, SlotReport};
