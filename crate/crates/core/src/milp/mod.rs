//! MILP solving: LP relaxation, branch-and-bound over the binaries, an
//! exhaustive oracle for tiny instances and MPS export.

mod bnb;
mod enumerate;
mod flips;
pub mod lp;
mod mps;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Schedule;

pub use bnb::solve_milp;
pub use enumerate::{enumerate_small, MAX_ENUMERATED_BINARIES};
pub use lp::{solve_lp, LpError, LpSolution, LpStatus};
pub use mps::{export_mps, write_mps};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("{got} binaries exceed the enumeration limit of {limit}")]
    TooManyBinaries { got: usize, limit: usize },
    #[error("row {0} couples more than one continuous variable; enumeration needs at most one")]
    CoupledContinuous(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branching {
    #[default]
    MostFractional,
    PseudoCost,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BnbConfig {
    /// Relative gap at which the search stops.
    pub gap_tol: f64,
    pub time_limit: Option<Duration>,
    pub node_limit: usize,
    pub branching: Branching,
    /// Emit a progress line every this many nodes (0 disables).
    pub log_every: usize,
}

impl Default for BnbConfig {
    fn default() -> Self {
        Self {
            gap_tol: 0.01,
            time_limit: None,
            node_limit: 1_000_000,
            branching: Branching::MostFractional,
            log_every: 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    GapFeasible,
    Infeasible,
    Timeout,
}

impl SolveStatus {
    pub fn name(self) -> &'static str {
        match self {
            Self::Optimal => "optimal",
            Self::GapFeasible => "gap-feasible",
            Self::Infeasible => "infeasible",
            Self::Timeout => "timeout",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSolution {
    pub status: SolveStatus,
    /// All variable values of the incumbent, if any.
    pub values: Option<Vec<f64>>,
    pub schedule: Option<Schedule>,
    /// Peak per zone, kW.
    pub p_max: Vec<f64>,
    pub objective_value: Option<f64>,
    pub best_bound: f64,
    pub gap: f64,
    pub nodes: usize,
    pub lp_iterations: usize,
}

impl ScheduleSolution {
    pub fn has_incumbent(&self) -> bool {
        self.values.is_some()
    }
}

/// `(incumbent - bound) / |incumbent|`, zero when both vanish.
pub fn relative_gap(incumbent: f64, bound: f64) -> f64 {
    let diff = (incumbent - bound).max(0.0);
    if diff == 0.0 {
        0.0
    } else if incumbent.abs() < 1e-12 {
        f64::INFINITY
    } else {
        diff / incumbent.abs()
    }
}
