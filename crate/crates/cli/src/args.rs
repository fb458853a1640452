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

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use repeater_core::{Policy, UtilityKind};

#[derive(Debug, Parser)]
#[command(
    name = "repeater",
    version,
    about = "Scheduling experiments for a two-link quantum repeater"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compare policies on random snapshots and report mean utilities.
    Experiment(ExperimentArgs),
    /// Run the slotted simulator for one policy.
    Simulate(SimulateArgs),
    /// Solve max-weight matching on a graph file.
    Match(MatchArgs),
    /// Evaluate a single formula.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON configuration file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Write the JSON result here instead of standard output.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Print the effective configuration and exit.
    #[arg(long)]
    pub dump_config: bool,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[command(flatten)]
    pub common: Common,
    /// Also write per-trial utilities as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub lles_per_link: Option<usize>,
    #[arg(long)]
    pub fidelity_low: Option<f64>,
    #[arg(long)]
    pub fidelity_high: Option<f64>,
    #[command(flatten)]
    pub success: SuccessArgs,
    /// Comma-separated list, e.g. `pts,stp,swap-only`.
    #[arg(long, value_delimiter = ',')]
    pub policies: Option<Vec<Policy>>,
    /// Comma-separated list of utility kinds, e.g. `a,b`.
    #[arg(long, value_delimiter = ',', value_parser = parse_kind)]
    pub kinds: Option<Vec<UtilityKind>>,
    /// Leave per-trial utilities out of the report.
    #[arg(long)]
    pub no_trials: bool,
}

#[derive(Debug, Args)]
pub struct SuccessArgs {
    /// Swap success probability.
    #[arg(long)]
    pub p_swap: Option<f64>,
    /// Purifications always succeed.
    #[arg(long, conflicts_with = "stochastic_purification")]
    pub deterministic_purification: bool,
    /// Purifications succeed with their physical probability.
    #[arg(long)]
    pub stochastic_purification: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value = "pts")]
    pub policy: Policy,
    #[arg(long)]
    pub slots: Option<u64>,
    /// Memories per link at each end node.
    #[arg(long)]
    pub memories: Option<usize>,
    #[arg(long)]
    pub p_sr: Option<f64>,
    #[arg(long)]
    pub p_rd: Option<f64>,
    #[command(flatten)]
    pub success: SuccessArgs,
    #[arg(long)]
    pub f0: Option<f64>,
    #[arg(long)]
    pub f_min: Option<f64>,
    /// Decoherence time constant in seconds; `inf` disables decay.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Slot duration in seconds.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub max_purifications: Option<usize>,
    #[arg(long, value_parser = parse_kind)]
    pub kind: Option<UtilityKind>,
}

#[derive(Debug, Args)]
pub struct MatchArgs {
    /// Graph document: `{"nodes": n, "edges": [[u, v, w], ...]}`.
    pub graph: PathBuf,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(subcommand)]
    pub formula: Formula,
}

#[derive(Debug, Subcommand)]
pub enum Formula {
    /// Fidelity after `slots` slots of storage.
    Decay {
        f0: f64,
        slots: u64,
        #[arg(long, default_value_t = 0.01)]
        delta: f64,
        #[arg(long, default_value_t = 1.0)]
        tau: f64,
    },
    /// Fidelity of a swapped pair.
    Swap { a: f64, b: f64 },
    /// Fidelity after a successful purification.
    Purify { a: f64, b: f64 },
    /// Purification success probability.
    PurifyProb { a: f64, b: f64 },
    /// Distillation rate.
    Distill { f: f64 },
}

fn parse_kind(s: &str) -> Result<UtilityKind, String> {
    match s.trim().to_ascii_uppercase().as_str() {
        "A" => Ok(UtilityKind::A),
        "B" => Ok(UtilityKind::B),
        _ => Err(format!("unknown utility kind `{s}` (expected a or b)")),
    }
}
