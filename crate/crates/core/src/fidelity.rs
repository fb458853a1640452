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

//! Fidelity bookkeeping for Werner-state entangled pairs.
//!
//! Everything here is a pure function. Fidelities live in `[0, 1]`; the
//! fully depolarised Werner state sits at `1/4`, which is the fixed point
//! of memory decoherence.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Fidelity of the fully mixed two-qubit state.
pub const WERNER_FLOOR: f64 = 0.25;

/// Fidelity of an entangled pair with respect to its ideal Bell state.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Fidelity(f64);

impl Fidelity {
    pub const ONE: Fidelity = Fidelity(1.0);
    pub const WERNER: Fidelity = Fidelity(WERNER_FLOOR);

    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Fidelity(value))
        } else {
            Err(Error::InvalidFidelity(value))
        }
    }

    /// Wraps a value that is mathematically in range but may carry a few ulps
    /// of rounding error.
    pub(crate) fn saturating(value: f64) -> Self {
        debug_assert!(value.is_finite());
        Fidelity(value.clamp(0.0, 1.0))
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Fidelity {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Fidelity::new(value)
    }
}

impl From<Fidelity> for f64 {
    fn from(f: Fidelity) -> f64 {
        f.0
    }
}

impl fmt::Display for Fidelity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

/// Time constants of memory decoherence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayParams {
    /// Duration of one time slot, in seconds.
    pub slot_duration_delta: f64,
    /// Exponential decoherence time constant, in seconds. May be infinite,
    /// which serializes as `null`.
    #[serde(with = "unbounded")]
    pub decoherence_tau: f64,
}

mod unbounded {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() && *v > 0.0 {
            s.serialize_none()
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

impl DecayParams {
    pub fn new(slot_duration_delta: f64, decoherence_tau: f64) -> Result<Self> {
        let params = DecayParams {
            slot_duration_delta,
            decoherence_tau,
        };
        params.validate()?;
        Ok(params)
    }

    /// Parameters under which stored pairs never decay.
    pub fn no_decay() -> Self {
        DecayParams {
            slot_duration_delta: 1.0,
            decoherence_tau: f64::INFINITY,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.slot_duration_delta.is_finite() && self.slot_duration_delta > 0.0) {
            return Err(Error::param(
                "slot_duration_delta",
                format!("must be positive and finite, got {}", self.slot_duration_delta),
            ));
        }
        if self.decoherence_tau.is_nan() || self.decoherence_tau <= 0.0 {
            return Err(Error::param(
                "decoherence_tau",
                format!("must be positive, got {}", self.decoherence_tau),
            ));
        }
        Ok(())
    }
}

impl Default for DecayParams {
    fn default() -> Self {
        DecayParams {
            slot_duration_delta: 0.01,
            decoherence_tau: 1.0,
        }
    }
}

/// Application utility of a single end-to-end fidelity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum UtilityKind {
    /// `g(F) = F`: total fidelity.
    A,
    /// `g(F) = max(D(F), 0)`: distillable Bell pairs.
    B,
}

impl UtilityKind {
    pub const ALL: [UtilityKind; 2] = [UtilityKind::A, UtilityKind::B];

    pub fn name(self) -> &'static str {
        match self {
            UtilityKind::A => "A",
            UtilityKind::B => "B",
        }
    }
}

impl fmt::Display for UtilityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Logarithmic utility of a set of end-to-end pairs.
///
/// `Degenerate` marks an empty set or a set whose utility sum is zero, where
/// the logarithm is undefined. It serializes as JSON `null`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Utility {
    Value(f64),
    Degenerate,
}

impl Utility {
    pub fn value(self) -> Option<f64> {
        match self {
            Utility::Value(v) => Some(v),
            Utility::Degenerate => None,
        }
    }

    pub fn is_degenerate(self) -> bool {
        matches!(self, Utility::Degenerate)
    }
}

impl Serialize for Utility {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.value().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Utility {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        Ok(match Option::<f64>::deserialize(deserializer)? {
            Some(v) => Utility::Value(v),
            None => Utility::Degenerate,
        })
    }
}

/// Fidelity of a pair created with fidelity `f0`, after `elapsed_slots` slots
/// in memory.
pub fn decay_fidelity(f0: Fidelity, elapsed_slots: u64, params: &DecayParams) -> Fidelity {
    if elapsed_slots == 0 {
        return f0;
    }
    let exponent = -params.slot_duration_delta * elapsed_slots as f64 / params.decoherence_tau;
    Fidelity::saturating(WERNER_FLOOR + (f0.get() - WERNER_FLOOR) * exponent.exp())
}

/// Fidelity of the end-to-end pair produced by swapping two pairs.
pub fn swap_fidelity(f1: Fidelity, f2: Fidelity) -> Fidelity {
    let (a, b) = (f1.get(), f2.get());
    Fidelity::saturating(a * b + (1.0 - a) * (1.0 - b))
}

/// Fidelity of the pair produced by a successful 2-to-1 purification.
///
/// Fails only when the denominator vanishes, i.e. for the inputs `{0, 1}`.
pub fn purify_fidelity(f1: Fidelity, f2: Fidelity) -> Result<Fidelity> {
    let (a, b) = (f1.get(), f2.get());
    let both = a * b;
    let denom = both + (1.0 - a) * (1.0 - b);
    if denom <= 0.0 {
        return Err(Error::DegeneratePurification(a, b));
    }
    Ok(Fidelity::saturating(both / denom))
}

/// Probability that a 2-to-1 purification of `f1` and `f2` succeeds.
pub fn purify_success_prob(f1: Fidelity, f2: Fidelity) -> f64 {
    let (a, b) = (f1.get(), f2.get());
    (a * b + (1.0 - a) * (1.0 - b)).clamp(0.0, 1.0)
}

// x log2 x with the 0 log 0 = 0 convention.
fn xlog2(x: f64, arg: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * arg.log2()
    }
}

/// Hashing distillation rate `D(F)`: a lower bound on the number of perfect
/// Bell pairs distillable per noisy pair. Negative below roughly `0.8107`.
pub fn distillation_rate(f: Fidelity) -> f64 {
    let x = f.get();
    1.0 + xlog2(x, x) + xlog2(1.0 - x, (1.0 - x) / 3.0)
}

/// Per-pair utility `g(F)`. Always non-negative.
pub fn g_value(kind: UtilityKind, f: Fidelity) -> f64 {
    match kind {
        UtilityKind::A => f.get(),
        UtilityKind::B => distillation_rate(f).max(0.0),
    }
}

/// `Σ g(F_i)` over the given fidelities.
pub fn utility_sum(kind: UtilityKind, fidelities: &[Fidelity]) -> f64 {
    fidelities.iter().map(|&f| g_value(kind, f)).sum()
}

/// Natural logarithm of [`utility_sum`], or [`Utility::Degenerate`] when the
/// sum is not positive.
pub fn aggregate_utility(kind: UtilityKind, fidelities: &[Fidelity]) -> Utility {
    let sum = utility_sum(kind, fidelities);
    if sum > 0.0 {
        Utility::Value(sum.ln())
    } else {
        Utility::Degenerate
    }
}
