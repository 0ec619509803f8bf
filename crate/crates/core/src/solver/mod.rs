//! Finding optimal assignments for encoded instances.
//!
//! Two backends: [`solve_internal`] is an exact branch-and-bound over the
//! selector variables (desk scale), [`solve_external`] shells out to any
//! MaxSAT solver speaking the DIMACS WCNF convention (`o` / `s` / `v`
//! output lines). [`solve`] dispatches on [`SolverConfig`] and re-verifies
//! whatever comes back: the model must satisfy every hard clause, and the
//! reported cost is recomputed from the soft clauses independently of the
//! backend.

mod external;
mod internal;

pub use external::solve_external;
pub use internal::solve_internal;

use std::path::PathBuf;
use std::time::Duration;

use thiserror::Error;

use crate::encoder::{VarLayout, WcnfError, WcnfFormula};

/// How a solve ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// Proven optimal within budget.
    Optimum,
    /// Best model found when the budget expired.
    FeasibleBest,
    /// Hard clauses unsatisfiable (cannot happen for well-formed encodings).
    Infeasible,
    /// Budget expired before any model was found.
    TimeoutNone,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SolveStatus::Optimum => write!(f, "optimum"),
            SolveStatus::FeasibleBest => write!(f, "feasible-best"),
            SolveStatus::Infeasible => write!(f, "infeasible"),
            SolveStatus::TimeoutNone => write!(f, "timeout-none"),
        }
    }
}

/// A complete assignment plus its cost (sum of violated soft weights).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Model {
    values: Vec<bool>,
    cost: u64,
}

impl Model {
    /// `values` is indexed by variable id; index 0 is unused.
    pub fn new(values: Vec<bool>, cost: u64) -> Model {
        Model { values, cost }
    }

    pub fn value(&self, var: usize) -> bool {
        self.values[var]
    }

    /// Full assignment, indexed by variable id (entry 0 unused).
    pub fn values(&self) -> &[bool] {
        &self.values
    }

    pub fn cost(&self) -> u64 {
        self.cost
    }
}

/// Solve result; models exist exactly for the two feasible statuses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveOutcome {
    Optimum(Model),
    FeasibleBest(Model),
    Infeasible,
    TimeoutNone,
}

impl SolveOutcome {
    pub fn status(&self) -> SolveStatus {
        match self {
            SolveOutcome::Optimum(_) => SolveStatus::Optimum,
            SolveOutcome::FeasibleBest(_) => SolveStatus::FeasibleBest,
            SolveOutcome::Infeasible => SolveStatus::Infeasible,
            SolveOutcome::TimeoutNone => SolveStatus::TimeoutNone,
        }
    }

    pub fn model(&self) -> Option<&Model> {
        match self {
            SolveOutcome::Optimum(m) | SolveOutcome::FeasibleBest(m) => Some(m),
            _ => None,
        }
    }

    fn map_model(self, f: impl FnOnce(Model) -> Model) -> SolveOutcome {
        match self {
            SolveOutcome::Optimum(m) => SolveOutcome::Optimum(f(m)),
            SolveOutcome::FeasibleBest(m) => SolveOutcome::FeasibleBest(f(m)),
            other => other,
        }
    }
}

/// Which backend to use.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Backend {
    Internal,
    /// Command template with a `{wcnf}` placeholder for the instance path,
    /// e.g. `maxhs -printSoln {wcnf}`.
    External { command: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub backend: Backend,
    /// Wall-clock budget per solve.
    pub budget: Duration,
    /// Reserved for randomized backends; the internal search is
    /// deterministic and ignores it.
    pub seed: u64,
    /// Cap on the selector count (k*m) the internal exact search accepts.
    pub internal_cap: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            backend: Backend::Internal,
            budget: Duration::from_secs(2000),
            seed: 0,
            internal_cap: 24,
        }
    }
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("internal solver: instance needs {needed} search variables, cap is {cap}")]
    VarCapExceeded { needed: usize, cap: usize },
    #[error("external solver: failed to run '{command}': {source}")]
    Spawn {
        command: String,
        source: std::io::Error,
        instance: Option<PathBuf>,
    },
    #[error("external solver: {detail}{}", instance.as_ref().map(|p| format!(" (instance kept at {})", p.display())).unwrap_or_default())]
    ExternalOutput {
        detail: String,
        instance: Option<PathBuf>,
    },
    #[error("solver fault: returned model violates hard clauses{}", instance.as_ref().map(|p| format!(" (instance kept at {})", p.display())).unwrap_or_default())]
    ModelViolatesHard { instance: Option<PathBuf> },
    #[error("external solver: command template must contain a {{wcnf}} placeholder")]
    MissingPlaceholder,
    #[error(transparent)]
    Wcnf(#[from] WcnfError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Solves the instance with the configured backend, then re-verifies the
/// result: hard clauses must hold and the cost is recomputed from the soft
/// clauses (the recomputed value wins on mismatch, with a warning).
pub fn solve(
    formula: &WcnfFormula,
    layout: &VarLayout,
    config: &SolverConfig,
) -> Result<SolveOutcome, SolverError> {
    let outcome = match &config.backend {
        Backend::Internal => {
            solve_internal(formula, layout, config.budget, config.internal_cap)?
        }
        Backend::External { command } => {
            solve_external(formula, layout, command, config.budget)?
        }
    };
    if let Some(model) = outcome.model() {
        if !formula.hard_satisfied(model.values()) {
            return Err(SolverError::ModelViolatesHard { instance: None });
        }
        let recomputed = formula.violation_cost(model.values());
        if recomputed != model.cost() {
            log::warn!(
                "solver reported cost {} but the model costs {}; using the recomputed value",
                model.cost(),
                recomputed
            );
            return Ok(outcome.map_model(|m| Model::new(m.values, recomputed)));
        }
    }
    Ok(outcome)
}
