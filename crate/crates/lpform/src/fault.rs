//! Runtime faults shared by the reference interpreters. Oracle-equivalence
//! tests compare fault/return outcomes across stages, so all interpreters
//! report through the same type.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Fault {
    #[error("division or modulo by zero")]
    DivisionByZero,
    #[error("use of unassigned variable `{0}`")]
    UnassignedVar(String),
    #[error("step budget exceeded")]
    StepBudgetExceeded,
    #[error("call stack depth exceeded")]
    StackDepthExceeded,
    #[error("unknown procedure `{0}`")]
    UnknownProc(String),
    #[error("arity mismatch calling `{0}`")]
    ArityMismatch(String),
}

/// Interpreter resource limits.
#[derive(Debug, Clone, Copy)]
pub struct Limits {
    /// Maximum primitive steps before the run faults.
    pub step_budget: u64,
    /// Maximum call depth.
    pub max_depth: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            step_budget: 10_000_000,
            max_depth: 10_000,
        }
    }
}
