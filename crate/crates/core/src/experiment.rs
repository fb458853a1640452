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

//! Single-shot Monte Carlo comparison of the scheduling policies.
//!
//! Each trial draws `lles_per_link` fidelities per link uniformly from
//! `[fidelity_low, fidelity_high]` once, then evaluates every requested
//! policy and utility on that same snapshot (common random numbers).
//!
//! Seeds: trial `i` uses `derive_seed(master_seed, i)`. Inside a trial the
//! snapshot stream is child `0` of the trial seed and the operation stream
//! of a (policy, kind) combination is the path `[1, policy, kind]`, with
//! policies numbered PtS = 0, StP = 1, SwapOnly = 2 and kinds A = 0, B = 1.
//! Trials run in parallel; results are gathered by index, so the report
//! does not depend on scheduling.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fidelity::{aggregate_utility, utility_sum, Fidelity, Utility, UtilityKind};
use crate::policies::{run_policy, EntPair, NetworkSnapshot, Policy, Span, SuccessModel};
use crate::seed::{derive_path, derive_seed, stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub trials: usize,
    pub lles_per_link: usize,
    pub fidelity_low: f64,
    pub fidelity_high: f64,
    pub policies: Vec<Policy>,
    pub utility_kinds: Vec<UtilityKind>,
    pub success: SuccessModel,
    pub master_seed: u64,
    /// Keep every per-trial utility in the report.
    pub include_trials: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            trials: 500,
            lles_per_link: 3,
            fidelity_low: 0.8,
            fidelity_high: 1.0,
            policies: Policy::ALL.to_vec(),
            utility_kinds: UtilityKind::ALL.to_vec(),
            success: SuccessModel::default(),
            master_seed: 1,
            include_trials: true,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::param("trials", "at least one trial is required"));
        }
        let (lo, hi) = (self.fidelity_low, self.fidelity_high);
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return Err(Error::param(
                "fidelity_low",
                format!("need 0 <= fidelity_low <= fidelity_high <= 1, got [{lo}, {hi}]"),
            ));
        }
        if self.policies.is_empty() {
            return Err(Error::param("policies", "no policy selected"));
        }
        if self.utility_kinds.is_empty() {
            return Err(Error::param("utility_kinds", "no utility selected"));
        }
        if has_duplicates(&self.policies) || has_duplicates(&self.utility_kinds) {
            return Err(Error::param(
                "policies",
                "policies and utility kinds must be distinct",
            ));
        }
        self.success.validate()
    }
}

fn has_duplicates<T: PartialEq>(items: &[T]) -> bool {
    items.iter().enumerate().any(|(i, a)| items[..i].contains(a))
}

fn policy_code(p: Policy) -> u64 {
    match p {
        Policy::PtS => 0,
        Policy::StP => 1,
        Policy::SwapOnly => 2,
    }
}

fn kind_code(k: UtilityKind) -> u64 {
    match k {
        UtilityKind::A => 0,
        UtilityKind::B => 1,
    }
}

pub fn trial_seed(master_seed: u64, trial: usize) -> u64 {
    derive_seed(master_seed, trial as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialValue {
    pub policy: Policy,
    pub kind: UtilityKind,
    pub utility: Utility,
    /// `Σ g(F)` over the delivered end-to-end pairs.
    pub inner_sum: f64,
    pub e2e_count: usize,
    pub swap_matching_weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial_seed: u64,
    pub snapshot: NetworkSnapshot,
    pub values: Vec<TrialValue>,
}

impl TrialResult {
    pub fn get(&self, policy: Policy, kind: UtilityKind) -> Option<&TrialValue> {
        self.values.iter().find(|v| v.policy == policy && v.kind == kind)
    }
}

/// Snapshot of `n` fresh pairs per link with uniformly drawn fidelities.
pub fn draw_snapshot<R: Rng + ?Sized>(n: usize, low: f64, high: f64, rng: &mut R) -> NetworkSnapshot {
    let mut draw = |span: Span, first_id: u64| -> Vec<EntPair> {
        (0..n)
            .map(|i| {
                let f = Fidelity::new(rng.gen_range(low..=high)).expect("bounds validated");
                let left = if span == Span::SR { i } else { n + i };
                EntPair::new(first_id + i as u64, span, left, i, f)
            })
            .collect()
    };
    let sr = draw(Span::SR, 0);
    let rd = draw(Span::RD, n as u64);
    NetworkSnapshot::new(sr, rd, 0).expect("generated snapshot is consistent")
}

/// Evaluates every configured policy and utility on one random snapshot.
pub fn run_trial(trial_seed: u64, config: &ExperimentConfig) -> TrialResult {
    let mut snap_rng = stream(derive_seed(trial_seed, 0));
    let snapshot = draw_snapshot(
        config.lles_per_link,
        config.fidelity_low,
        config.fidelity_high,
        &mut snap_rng,
    );
    let mut values = Vec::with_capacity(config.policies.len() * config.utility_kinds.len());
    for &policy in &config.policies {
        for &kind in &config.utility_kinds {
            let mut rng = stream(derive_path(
                trial_seed,
                &[1, policy_code(policy), kind_code(kind)],
            ));
            let outcome = run_policy(policy, &snapshot, kind, &config.success, &mut rng);
            let fidelities = outcome.e2e_fidelities();
            values.push(TrialValue {
                policy,
                kind,
                utility: aggregate_utility(kind, &fidelities),
                inner_sum: utility_sum(kind, &fidelities),
                e2e_count: fidelities.len(),
                swap_matching_weight: outcome.swap_matching_weight,
            });
        }
    }
    TrialResult {
        trial_seed,
        snapshot,
        values,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySummary {
    pub policy: Policy,
    pub kind: UtilityKind,
    /// Mean utility over non-degenerate trials.
    pub mean_utility: Option<f64>,
    /// Sample standard deviation over non-degenerate trials.
    pub std_dev: Option<f64>,
    pub counted_trials: usize,
    pub degenerate_trials: usize,
    /// Mean of `Σ g(F)` over all trials, degenerate ones included.
    pub mean_inner_sum: f64,
    pub inner_sum_std_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub trial_values: Option<Vec<Utility>>,
}

/// Relative gap of policy `better` over `baseline`: `(a - b) / |b|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapEntry {
    pub kind: UtilityKind,
    pub policy: Policy,
    pub baseline: Policy,
    pub relative_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub summaries: Vec<PolicySummary>,
    pub gaps: Vec<GapEntry>,
}

impl ExperimentReport {
    pub fn summary(&self, policy: Policy, kind: UtilityKind) -> Option<&PolicySummary> {
        self.summaries
            .iter()
            .find(|s| s.policy == policy && s.kind == kind)
    }

    pub fn mean(&self, policy: Policy, kind: UtilityKind) -> Option<f64> {
        self.summary(policy, kind).and_then(|s| s.mean_utility)
    }

    pub fn gap(&self, kind: UtilityKind, policy: Policy, baseline: Policy) -> Option<f64> {
        self.gaps
            .iter()
            .find(|g| g.kind == kind && g.policy == policy && g.baseline == baseline)
            .and_then(|g| g.relative_gap)
    }

    /// Writes per-trial values as CSV with header `policy,utility,trial,value`.
    /// Degenerate trials have an empty value.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let csv_err = |e: csv::Error| Error::Csv(e.to_string());
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["policy", "utility", "trial", "value"])
            .map_err(csv_err)?;
        for s in &self.summaries {
            let Some(values) = &s.trial_values else { continue };
            for (trial, u) in values.iter().enumerate() {
                let value = u.value().map(|v| v.to_string()).unwrap_or_default();
                w.write_record([s.policy.name(), s.kind.name(), &trial.to_string(), &value])
                    .map_err(csv_err)?;
            }
        }
        w.flush().map_err(|e| Error::Csv(e.to_string()))
    }
}

/// Signed relative difference `(a - b) / |b|`; positive when `a` is better.
pub fn relative_gap(a: f64, b: f64) -> Result<f64> {
    if b == 0.0 {
        return Err(Error::ZeroBaseline);
    }
    Ok((a - b) / b.abs())
}

fn mean_and_std(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    if xs.is_empty() {
        return (None, None);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = (xs.len() > 1).then(|| {
        let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
        (ss / (n - 1.0)).sqrt()
    });
    (Some(mean), std)
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let trials: Vec<TrialResult> = (0..config.trials)
        .into_par_iter()
        .map(|i| run_trial(trial_seed(config.master_seed, i), config))
        .collect();
    Ok(aggregate(config, &trials))
}

pub fn aggregate(config: &ExperimentConfig, trials: &[TrialResult]) -> ExperimentReport {
    let mut summaries = Vec::new();
    for &policy in &config.policies {
        for &kind in &config.utility_kinds {
            let values: Vec<&TrialValue> = trials
                .iter()
                .map(|t| t.get(policy, kind).expect("every combination is evaluated"))
                .collect();
            let counted: Vec<f64> = values.iter().filter_map(|v| v.utility.value()).collect();
            let (mean_utility, std_dev) = mean_and_std(&counted);
            let sums: Vec<f64> = values.iter().map(|v| v.inner_sum).collect();
            let (mean_inner, inner_std) = mean_and_std(&sums);
            summaries.push(PolicySummary {
                policy,
                kind,
                mean_utility,
                std_dev,
                counted_trials: counted.len(),
                degenerate_trials: values.len() - counted.len(),
                mean_inner_sum: mean_inner.unwrap_or(0.0),
                inner_sum_std_error: inner_std.map(|s| s / (sums.len() as f64).sqrt()),
                trial_values: config
                    .include_trials
                    .then(|| values.iter().map(|v| v.utility).collect()),
            });
        }
    }

    let mut gaps = Vec::new();
    for &kind in &config.utility_kinds {
        for &policy in &config.policies {
            for &baseline in &config.policies {
                if policy == baseline {
                    continue;
                }
                let mean = |p| {
                    summaries
                        .iter()
                        .find(|s: &&PolicySummary| s.policy == p && s.kind == kind)?
                        .mean_utility
                };
                let relative_gap = match (mean(policy), mean(baseline)) {
                    (Some(a), Some(b)) => relative_gap(a, b).ok(),
                    _ => None,
                };
                gaps.push(GapEntry {
                    kind,
                    policy,
                    baseline,
                    relative_gap,
                });
            }
        }
    }

    ExperimentReport {
        config: config.clone(),
        summaries,
        gaps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(trials: usize) -> ExperimentConfig {
        ExperimentConfig {
            trials,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn perfect_pairs_give_ln_three_everywhere() {
        let config = ExperimentConfig {
            fidelity_low: 1.0,
            fidelity_high: 1.0,
            success: SuccessModel::deterministic(),
            utility_kinds: vec![UtilityKind::A],
            ..small(1)
        };
        let t = run_trial(42, &config);
        for v in &t.values {
            assert_eq!(v.utility, Utility::Value(3f64.ln()), "{v:?}");
            assert_eq!(v.e2e_count, 3);
        }
    }

    #[test]
    fn no_pairs_is_degenerate() {
        let config = ExperimentConfig {
            lles_per_link: 0,
            ..small(1)
        };
        let t = run_trial(9, &config);
        assert_eq!(t.values.len(), 6);
        assert!(t.values.iter().all(|v| v.utility.is_degenerate()));
    }

    #[test]
    fn trial_is_deterministic() {
        let config = small(1);
        assert_eq!(run_trial(77, &config), run_trial(77, &config));
        assert_ne!(run_trial(77, &config).snapshot, run_trial(78, &config).snapshot);
    }

    #[test]
    fn single_trial_experiment_matches_run_trial() {
        let config = small(1);
        let report = run_experiment(&config).unwrap();
        let t = run_trial(trial_seed(config.master_seed, 0), &config);
        for v in &t.values {
            let s = report.summary(v.policy, v.kind).unwrap();
            assert_eq!(s.mean_utility, v.utility.value());
            assert_eq!(s.counted_trials + s.degenerate_trials, 1);
            assert_eq!(s.std_dev, None);
        }
    }

    #[test]
    fn relative_gap_examples() {
        assert!((relative_gap(1.05, 1.0).unwrap() - 0.05).abs() < 1e-12);
        assert_eq!(relative_gap(0.7, 0.7).unwrap(), 0.0);
        assert!((relative_gap(-0.8, -1.0).unwrap() - 0.2).abs() < 1e-12);
        assert_eq!(relative_gap(1.0, 0.0), Err(Error::ZeroBaseline));
    }

    #[test]
    fn config_validation() {
        assert!(small(0).validate().is_err());
        let inverted = ExperimentConfig {
            fidelity_low: 0.9,
            fidelity_high: 0.8,
            ..small(1)
        };
        assert!(inverted.validate().is_err());
        let dup = ExperimentConfig {
            policies: vec![Policy::PtS, Policy::PtS],
            ..small(1)
        };
        assert!(dup.validate().is_err());
        assert!(run_experiment(&small(0)).is_err());
    }

    #[test]
    fn csv_export() {
        let config = ExperimentConfig {
            policies: vec![Policy::SwapOnly],
            utility_kinds: vec![UtilityKind::A],
            ..small(3)
        };
        let report = run_experiment(&config).unwrap();
        let mut out = Vec::new();
        report.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "policy,utility,trial,value");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("SwapOnly,A,0,"));
    }

    #[test]
    fn gaps_recomputable_from_means() {
        let report = run_experiment(&small(50)).unwrap();
        for g in &report.gaps {
            let a = report.mean(g.policy, g.kind);
            let b = report.mean(g.baseline, g.kind);
            if let (Some(a), Some(b), Some(gap)) = (a, b, g.relative_gap) {
                assert_eq!(gap, (a - b) / b.abs());
            }
        }
    }
}
