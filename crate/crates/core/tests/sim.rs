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

mod common;

use common::{check_simulation, check_static_agreement, random_params};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use repeater_core::{run_simulation, DecayParams, Policy, SimParams, SuccessModel, UtilityKind};

#[test]
fn randomized_runs_keep_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for case in 0..60 {
        let params = random_params(&mut rng);
        for policy in Policy::ALL {
            let seed = rng.gen();
            if let Err(e) = check_simulation(&params, policy, seed, 200) {
                panic!("case {case}, {policy}, seed {seed}: {e}\n{params:?}");
            }
        }
    }
}

#[test]
fn without_decoherence_slots_match_static_policy() {
    let mut rng = ChaCha8Rng::seed_from_u64(78);
    for _ in 0..20 {
        let mut params = random_params(&mut rng);
        params.decay = DecayParams::no_decay();
        params.gen_success_sr = 1.0;
        params.gen_success_rd = 1.0;
        params.max_purifications = 64;
        for policy in Policy::ALL {
            check_static_agreement(&params, policy, rng.gen(), 100).unwrap();
        }
    }
}

#[test]
fn runs_are_reproducible() {
    let params = SimParams {
        horizon_slots: 300,
        utility_kind: UtilityKind::B,
        ..SimParams::default()
    };
    for policy in Policy::ALL {
        let a = serde_json::to_vec(&run_simulation(&params, policy, 42).unwrap()).unwrap();
        let b = serde_json::to_vec(&run_simulation(&params, policy, 42).unwrap()).unwrap();
        assert_eq!(a, b);
        let c = serde_json::to_vec(&run_simulation(&params, policy, 43).unwrap()).unwrap();
        assert_ne!(a, c);
    }
}

#[test]
fn perfect_links_deliver_every_slot() {
    let params = SimParams {
        memories: 2,
        gen_success_sr: 1.0,
        gen_success_rd: 1.0,
        success: SuccessModel::deterministic(),
        decay: DecayParams::no_decay(),
        horizon_slots: 50,
        ..SimParams::default()
    };
    let run = run_simulation(&params, Policy::SwapOnly, 1).unwrap();
    assert_eq!(run.summary.delivered, 100);
    assert!((run.summary.delivery_rate - 2.0).abs() < 1e-12);
    for r in &run.reports {
        for f in &r.delivered_e2e {
            assert!((f.get() - (0.95 * 0.95 + 0.05 * 0.05)).abs() < 1e-12);
        }
    }
}

#[test]
fn fast_decoherence_starves_delivery() {
    let params = SimParams {
        decay: DecayParams::new(1.0, 0.1).unwrap(),
        horizon_slots: 100,
        success: SuccessModel {
            swap_success_p: 1.0,
            purification_stochastic: true,
        },
        gen_success_sr: 0.3,
        gen_success_rd: 0.3,
        ..SimParams::default()
    };
    // Pairs fall below the threshold one slot after generation, so a pair
    // can only be used if both links succeed in the same round.
    let run = run_simulation(&params, Policy::PtS, 3).unwrap();
    assert!(run.summary.discarded > 0);
    assert!(run.summary.delivered < 100);
}
