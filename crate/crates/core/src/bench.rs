//! Synthetic CPU workloads with a known number of additions, used to check
//! that measured energy tracks the amount of work.

use std::hint::black_box;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_UNIT_OPS: u64 = 50_000_000;
pub const MAX_EXPONENT: u32 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Linear,
    Quadratic,
    Exponential,
}

impl std::str::FromStr for Shape {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(Shape::Linear),
            "quadratic" => Ok(Shape::Quadratic),
            "exp" | "exponential" => Ok(Shape::Exponential),
            other => Err(format!(
                "unknown workload `{other}` (linear, quadratic, exp)"
            )),
        }
    }
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Shape::Linear => "linear",
            Shape::Quadratic => "quadratic",
            Shape::Exponential => "exp",
        })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BenchError {
    #[error("{shape} workload with n = {n} exceeds the guard ({reason})")]
    GuardExceeded {
        shape: Shape,
        n: u64,
        reason: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    pub shape: Shape,
    pub n: u64,
    pub unit_ops: u64,
}

impl WorkloadSpec {
    pub fn new(shape: Shape, n: u64) -> Self {
        WorkloadSpec {
            shape,
            n,
            unit_ops: DEFAULT_UNIT_OPS,
        }
    }

    /// Number of work units: n, n² or 2ⁿ.
    pub fn units(&self) -> Result<u64, BenchError> {
        let guard = |reason: &str| BenchError::GuardExceeded {
            shape: self.shape,
            n: self.n,
            reason: reason.to_string(),
        };
        match self.shape {
            Shape::Linear => Ok(self.n),
            Shape::Quadratic => self
                .n
                .checked_mul(self.n)
                .ok_or_else(|| guard("n² overflows")),
            Shape::Exponential => {
                if self.n > MAX_EXPONENT as u64 {
                    return Err(guard(&format!("n must be at most {MAX_EXPONENT}")));
                }
                Ok(1u64 << self.n)
            }
        }
    }

    pub fn total_additions(&self) -> Result<u64, BenchError> {
        self.units()?
            .checked_mul(self.unit_ops)
            .ok_or_else(|| BenchError::GuardExceeded {
                shape: self.shape,
                n: self.n,
                reason: "total addition count overflows".into(),
            })
    }
}

/// Result of a completed workload. The checksum depends on every addition,
/// so the loop cannot be folded away.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WorkloadRun {
    pub additions: u64,
    pub checksum: u64,
}

fn unit_of_work(unit_ops: u64, seed: u64) -> u64 {
    let mut acc = seed;
    for _ in 0..unit_ops {
        acc = black_box(acc).wrapping_add(1);
    }
    acc
}

pub fn run_workload(spec: &WorkloadSpec) -> Result<WorkloadRun, BenchError> {
    let additions = spec.total_additions()?;
    let units = spec.units()?;
    let mut checksum = black_box(spec.n);
    for _ in 0..units {
        checksum = unit_of_work(spec.unit_ops, checksum);
    }
    Ok(WorkloadRun {
        additions,
        checksum,
    })
}
