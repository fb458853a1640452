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

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use repeater_core::{run_experiment, run_simulation, ExperimentConfig, Policy, SimParams};
use std::hint::black_box;

fn experiment(c: &mut Criterion) {
    let cfg = ExperimentConfig {
        trials: 500,
        include_trials: false,
        ..ExperimentConfig::default()
    };
    let mut group = c.benchmark_group("experiment");
    group.sample_size(20);
    group.bench_function("default_500", |b| {
        b.iter(|| run_experiment(black_box(&cfg)).unwrap())
    });
    group.finish();
}

fn simulation(c: &mut Criterion) {
    let params = SimParams {
        horizon_slots: 1000,
        ..SimParams::default()
    };
    let mut group = c.benchmark_group("simulate_1000_slots");
    group.sample_size(20);
    for policy in Policy::ALL {
        group.bench_with_input(BenchmarkId::from_parameter(policy), &params, |b, p| {
            b.iter(|| run_simulation(black_box(p), policy, 1).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, experiment, simulation);
criterion_main!(benches);
