use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    TimeLimit,
    Error,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "Optimal",
            SolveStatus::Infeasible => "Infeasible",
            SolveStatus::Unbounded => "Unbounded",
            SolveStatus::IterationLimit => "IterationLimit",
            SolveStatus::TimeLimit => "TimeLimit",
            SolveStatus::Error => "Error",
        }
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of a solve. Objective values are in minimization form and
/// include the problem's objective offset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Best integer-feasible solution, in the problem's column order.
    pub incumbent: Option<Vec<f64>>,
    pub upper_bound: f64,
    pub lower_bound: f64,
    pub node_count: usize,
    pub subproblem_count: usize,
    pub iteration_count: usize,
    /// Human-readable detail for `Error` and limit statuses.
    pub message: Option<String>,
    /// Lower bound after each outer iteration (iterative driver only).
    #[serde(default)]
    pub bound_history: Vec<f64>,
}

impl SolveResult {
    pub fn new(status: SolveStatus) -> Self {
        SolveResult {
            status,
            incumbent: None,
            upper_bound: f64::INFINITY,
            lower_bound: f64::NEG_INFINITY,
            node_count: 0,
            subproblem_count: 0,
            iteration_count: 0,
            message: None,
            bound_history: Vec::new(),
        }
    }

    /// `(U - L) / (|U| + theta)`, infinite when either bound is infinite.
    pub fn rel_gap(&self, theta: f64) -> f64 {
        rel_gap(self.upper_bound, self.lower_bound, theta)
    }
}

pub fn rel_gap(upper: f64, lower: f64, theta: f64) -> f64 {
    if upper.is_finite() && lower.is_finite() {
        ((upper - lower) / (upper.abs() + theta)).max(0.0)
    } else if upper == lower {
        0.0
    } else {
        f64::INFINITY
    }
}
