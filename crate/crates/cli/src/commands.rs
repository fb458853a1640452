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

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use repeater_core::{
    decay_fidelity, distillation_rate, max_weight_matching, purify_fidelity, purify_success_prob,
    run_experiment, run_simulation, swap_fidelity, DecayParams, ExperimentConfig, Fidelity, SimParams,
    SuccessModel, WeightedGraph,
};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::args::{Common, EvalArgs, ExperimentArgs, Formula, MatchArgs, SimulateArgs, SuccessArgs};
use crate::error::CliError;

/// Default seed for `simulate` when none is given.
pub const DEFAULT_SIM_SEED: u64 = 1;

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

fn load_or_default<T: DeserializeOwned + Default>(common: &Common) -> Result<T, CliError> {
    match &common.config {
        Some(path) => read_json(path),
        None => Ok(T::default()),
    }
}

fn emit<T: Serialize>(value: &T, output: Option<&Path>) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("documents serialize");
    text.push('\n');
    match output {
        Some(path) => fs::write(path, text).map_err(|e| CliError::io(path, e)),
        None => io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(CliError::Output),
    }
}

fn apply_success(model: &mut SuccessModel, args: &SuccessArgs) {
    if let Some(p) = args.p_swap {
        model.swap_success_p = p;
    }
    if args.deterministic_purification {
        model.purification_stochastic = false;
    }
    if args.stochastic_purification {
        model.purification_stochastic = true;
    }
}

fn fidelity(name: &str, value: f64) -> Result<Fidelity, CliError> {
    Fidelity::new(value).map_err(|e| CliError::Invalid(format!("{name}: {e}")))
}

pub fn experiment_config(args: &ExperimentArgs) -> Result<ExperimentConfig, CliError> {
    let mut cfg: ExperimentConfig = load_or_default(&args.common)?;
    if let Some(seed) = args.common.seed {
        cfg.master_seed = seed;
    }
    if let Some(n) = args.trials {
        cfg.trials = n;
    }
    if let Some(n) = args.lles_per_link {
        cfg.lles_per_link = n;
    }
    if let Some(f) = args.fidelity_low {
        cfg.fidelity_low = f;
    }
    if let Some(f) = args.fidelity_high {
        cfg.fidelity_high = f;
    }
    apply_success(&mut cfg.success, &args.success);
    if let Some(p) = &args.policies {
        cfg.policies = p.clone();
    }
    if let Some(k) = &args.kinds {
        cfg.utility_kinds = k.clone();
    }
    if args.no_trials {
        cfg.include_trials = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn cmd_experiment(args: &ExperimentArgs) -> Result<(), CliError> {
    let cfg = experiment_config(args)?;
    let output = args.common.output.as_deref();
    if args.common.dump_config {
        return emit(&cfg, output);
    }
    let report = run_experiment(&cfg)?;
    emit(&report, output)?;
    if let Some(path) = &args.csv {
        let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
        report
            .write_csv(io::BufWriter::new(file))
            .map_err(|e| CliError::io(path, io::Error::other(e.to_string())))?;
    }
    Ok(())
}

pub fn sim_params(args: &SimulateArgs) -> Result<SimParams, CliError> {
    let mut params: SimParams = load_or_default(&args.common)?;
    if let Some(n) = args.slots {
        params.horizon_slots = n;
    }
    if let Some(m) = args.memories {
        params.memories = m;
    }
    if let Some(p) = args.p_sr {
        params.gen_success_sr = p;
    }
    if let Some(p) = args.p_rd {
        params.gen_success_rd = p;
    }
    apply_success(&mut params.success, &args.success);
    if let Some(f) = args.f0 {
        params.initial_fidelity = fidelity("f0", f)?;
    }
    if let Some(f) = args.f_min {
        params.discard_threshold = fidelity("f-min", f)?;
    }
    if let Some(t) = args.tau {
        params.decay.decoherence_tau = t;
    }
    if let Some(d) = args.delta {
        params.decay.slot_duration_delta = d;
    }
    if let Some(l) = args.max_purifications {
        params.max_purifications = l;
    }
    if let Some(k) = args.kind {
        params.utility_kind = k;
    }
    params.validate()?;
    Ok(params)
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let params = sim_params(args)?;
    let output = args.common.output.as_deref();
    if args.common.dump_config {
        return emit(&params, output);
    }
    let seed = args.common.seed.unwrap_or(DEFAULT_SIM_SEED);
    let run = run_simulation(&params, args.policy, seed)?;
    emit(&run, output)
}

pub fn cmd_match(args: &MatchArgs) -> Result<(), CliError> {
    let graph: WeightedGraph = read_json(&args.graph)?;
    let matching = max_weight_matching(&graph);
    emit(&matching, args.output.as_deref())
}

/// Formats `v` with 15 significant digits, dropping trailing zeros.
pub fn format_value(v: f64) -> String {
    let rounded: f64 = format!("{v:.14e}").parse().expect("formatted float parses");
    rounded.to_string()
}

pub fn cmd_eval(args: &EvalArgs) -> Result<(), CliError> {
    let value = match args.formula {
        Formula::Decay {
            f0,
            slots,
            delta,
            tau,
        } => {
            let params = DecayParams::new(delta, tau)?;
            decay_fidelity(fidelity("f0", f0)?, slots, &params).get()
        }
        Formula::Swap { a, b } => swap_fidelity(fidelity("a", a)?, fidelity("b", b)?).get(),
        Formula::Purify { a, b } => purify_fidelity(fidelity("a", a)?, fidelity("b", b)?)?.get(),
        Formula::PurifyProb { a, b } => purify_success_prob(fidelity("a", a)?, fidelity("b", b)?),
        Formula::Distill { f } => distillation_rate(fidelity("f", f)?),
    };
    writeln!(io::stdout().lock(), "{}", format_value(value)).map_err(CliError::Output)
}
