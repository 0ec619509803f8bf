//! End-to-end training: encode, solve, decode, verify.
//!
//! DNF rules come from the label-negation duality: a DNF rule for y is the
//! negation of a CNF rule for the negated labels, so DNF training flips the
//! labels (and swaps the cost-sensitive penalties, since each error changes
//! kind under the flip), learns a CNF, and re-polarizes the result.

use std::collections::BTreeSet;
use std::io::BufWriter;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::dataset::BinaryDataset;
use crate::encoder::{
    emit_wcnf, encode_with_limit, EncodeError, LambdaSpec, ObjectiveConfig, SparsityMode,
    DEFAULT_VAR_LIMIT,
};
use crate::rules::{decode, Polarity, Rule, RuleError};
use crate::solver::{solve, Backend, SolveStatus, SolverConfig, SolverError};

#[derive(Debug, Clone, PartialEq)]
pub struct LearnConfig {
    pub k: usize,
    pub objective: ObjectiveConfig,
    pub polarity: Polarity,
    pub solver: SolverConfig,
}

impl LearnConfig {
    pub fn new(k: usize, lambda: u64) -> LearnConfig {
        LearnConfig {
            k,
            objective: ObjectiveConfig::uniform(lambda),
            polarity: Polarity::Cnf,
            solver: SolverConfig::default(),
        }
    }

    /// Short display label, used in reports.
    pub fn label(&self) -> String {
        let lambda = match self.objective.lambda {
            LambdaSpec::Uniform(l) => l.to_string(),
            LambdaSpec::CostSensitive {
                false_positive,
                false_negative,
            } => format!("fp{false_positive}/fn{false_negative}"),
        };
        format!("{} k={} lambda={}", self.polarity, self.k, lambda)
    }
}

/// A trained rule plus the numbers the objective promised.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub rule: Rule,
    /// Training samples the rule misclassifies, ascending.
    pub error_indices: Vec<usize>,
    /// size-term + penalty-weighted errors, recomputed from the rule.
    pub objective_cost: u64,
    pub status: SolveStatus,
    pub wall: Duration,
}

impl TrainOutcome {
    pub fn error_count(&self) -> usize {
        self.error_indices.len()
    }
}

#[derive(Debug, Error)]
pub enum LearnError {
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Wcnf(#[from] crate::encoder::WcnfError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error("solver timed out with no model; instance saved to {path} for offline solving")]
    TimeoutNoModel { path: PathBuf },
    #[error("solver reported the encoding infeasible; this indicates a solver fault")]
    Infeasible,
    #[error("lambda sweep requires the exact internal backend")]
    SweepNeedsExactBackend,
    #[error("lambda sweep requires a uniform (non-cost-sensitive) objective")]
    SweepNeedsUniformLambda,
    #[error("lambda list must be strictly increasing")]
    SweepNotIncreasing,
    #[error("solver did not prove optimality within budget during sweep")]
    SweepNotOptimal,
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Learns a k-clause rule on the dataset.
pub fn train(data: &BinaryDataset, config: &LearnConfig) -> Result<TrainOutcome, LearnError> {
    let started = Instant::now();
    let flipped;
    let (working, objective) = match config.polarity {
        Polarity::Cnf => (data, config.objective.clone()),
        Polarity::Dnf => {
            flipped = data.with_negated_labels();
            (&flipped, config.objective.flipped())
        }
    };

    let (formula, layout) = encode_with_limit(working, config.k, &objective, DEFAULT_VAR_LIMIT)?;
    let outcome = solve(&formula, &layout, &config.solver)?;
    let model = match outcome.model() {
        Some(model) => model,
        None => {
            return Err(match outcome.status() {
                SolveStatus::Infeasible => LearnError::Infeasible,
                _ => {
                    let file = tempfile::Builder::new()
                        .prefix("rule-instance-")
                        .suffix(".wcnf")
                        .tempfile()?;
                    {
                        let mut writer = BufWriter::new(file.as_file());
                        emit_wcnf(&formula, &layout, data.feature_names(), &mut writer)?;
                    }
                    let path = file.into_temp_path().keep().map_err(|e| e.error)?;
                    LearnError::TimeoutNoModel { path }
                }
            });
        }
    };

    let rule = decode(model, &layout, data.feature_names())?.with_polarity(config.polarity);
    let error_indices = classification_errors(&rule, data)?;
    let objective_cost = rule_objective_cost(&rule, &config.objective, data.labels(), &error_indices);
    if outcome.status() == SolveStatus::Optimum && objective_cost != model.cost() {
        // forced noise variables make the two coincide at a true optimum
        log::warn!(
            "optimum model cost {} differs from the rule's objective cost {objective_cost}",
            model.cost()
        );
    }
    Ok(TrainOutcome {
        rule,
        error_indices,
        objective_cost,
        status: outcome.status(),
        wall: started.elapsed(),
    })
}

/// Indices the rule misclassifies, ascending.
pub fn classification_errors(
    rule: &Rule,
    data: &BinaryDataset,
) -> Result<Vec<usize>, RuleError> {
    let mut errors = Vec::new();
    for i in 0..data.num_samples() {
        if rule.classify(data.row(i))? != data.labels()[i] {
            errors.push(i);
        }
    }
    Ok(errors)
}

/// The objective value of a concrete rule: the sparsity term under the
/// configured mode plus the penalties of the given errors.
pub fn rule_objective_cost(
    rule: &Rule,
    objective: &ObjectiveConfig,
    labels: &[bool],
    error_indices: &[usize],
) -> u64 {
    let size_term: u64 = match objective.sparsity {
        SparsityMode::PerLiteral => rule
            .clauses()
            .iter()
            .flat_map(|c| c.iter())
            .map(|&j| objective.feature_cost(j))
            .sum(),
        SparsityMode::DistinctFeature => {
            let in_all: BTreeSet<usize> = rule
                .clauses()
                .iter()
                .skip(1)
                .fold(rule.clauses()[0].clone(), |acc, c| {
                    acc.intersection(c).copied().collect()
                });
            in_all.iter().map(|&j| objective.feature_cost(j)).sum()
        }
    };
    let error_term: u64 = error_indices
        .iter()
        .map(|&i| objective.lambda.penalty(labels[i]))
        .sum();
    size_term + error_term
}

/// One adjacent-pair violation of the size/error monotonicity that exact
/// optima must satisfy as lambda grows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonotonicityViolation {
    pub lambda_low: u64,
    pub lambda_high: u64,
    pub size_low: usize,
    pub size_high: usize,
    pub errors_low: usize,
    pub errors_high: usize,
}

impl std::fmt::Display for MonotonicityViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "lambda {} -> {}: size {} -> {}, errors {} -> {}",
            self.lambda_low,
            self.lambda_high,
            self.size_low,
            self.size_high,
            self.errors_low,
            self.errors_high
        )
    }
}

/// Outcomes of a lambda sweep plus any monotonicity violations observed.
#[derive(Debug, Clone)]
pub struct SweepReport {
    pub lambdas: Vec<u64>,
    pub outcomes: Vec<TrainOutcome>,
    /// Nonempty only on a solver or encoding bug; diagnosed loudly but kept
    /// so callers can inspect the counterexample.
    pub violations: Vec<MonotonicityViolation>,
}

/// Trains once per lambda (strictly increasing list) with the exact backend
/// and checks that rule size never shrinks and error count never grows as
/// lambda increases.
pub fn sweep_lambda(
    data: &BinaryDataset,
    config: &LearnConfig,
    lambdas: &[u64],
) -> Result<SweepReport, LearnError> {
    if config.solver.backend != Backend::Internal {
        return Err(LearnError::SweepNeedsExactBackend);
    }
    if !matches!(config.objective.lambda, LambdaSpec::Uniform(_)) {
        return Err(LearnError::SweepNeedsUniformLambda);
    }
    if lambdas.windows(2).any(|w| w[0] >= w[1]) || lambdas.is_empty() {
        return Err(LearnError::SweepNotIncreasing);
    }
    let mut outcomes = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let mut cell = config.clone();
        cell.objective.lambda = LambdaSpec::Uniform(lambda);
        let outcome = train(data, &cell)?;
        if outcome.status != SolveStatus::Optimum {
            return Err(LearnError::SweepNotOptimal);
        }
        outcomes.push(outcome);
    }
    let mut violations = Vec::new();
    for (pair, w) in lambdas.windows(2).enumerate() {
        let (low, high) = (&outcomes[pair], &outcomes[pair + 1]);
        if low.rule.size() > high.rule.size() || low.error_count() < high.error_count() {
            let violation = MonotonicityViolation {
                lambda_low: w[0],
                lambda_high: w[1],
                size_low: low.rule.size(),
                size_high: high.rule.size(),
                errors_low: low.error_count(),
                errors_high: high.error_count(),
            };
            log::error!(
                "lambda monotonicity violated ({violation}); this indicates a solver or \
                 encoding bug"
            );
            violations.push(violation);
        }
    }
    Ok(SweepReport {
        lambdas: lambdas.to_vec(),
        outcomes,
        violations,
    })
}
