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

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("fidelity {0} is outside [0, 1]")]
    InvalidFidelity(f64),

    #[error("purification of fidelities {0} and {1} is degenerate (zero denominator)")]
    DegeneratePurification(f64, f64),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("brute-force matching supports at most {limit} nodes, got {nodes}")]
    TooManyNodes { nodes: usize, limit: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("relative gap is undefined for a zero baseline")]
    ZeroBaseline,

    #[error("csv export failed: {0}")]
    Csv(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
