//! Learning sparse, interpretable k-clause CNF/DNF classification rules from
//! binary-labeled tabular data by exact reduction to partial weighted MaxSAT.
//!
//! The pipeline has three stages:
//!
//! 1. [`dataset`] turns raw tabular data (binary, categorical, continuous
//!    columns) into a 0/1 feature matrix plus a reversible [`FeatureMap`].
//! 2. [`encoder`] builds a partial weighted MaxSAT instance whose optimum
//!    assignment corresponds to the k-clause rule minimizing
//!    `size(rule) + lambda * errors(rule)` over the training data, and
//!    [`solver`] finds that assignment (built-in exact search at desk scale,
//!    or an external MaxSAT solver subprocess via DIMACS WCNF files).
//! 3. [`rules`] decodes assignments into [`Rule`] values that classify rows,
//!    [`learner`] orchestrates train/sweep, and [`eval`] runs cross-validation
//!    grids and learning curves.

pub mod dataset;
pub mod encoder;
pub mod eval;
pub mod learner;
pub mod rules;
pub mod solver;

pub use dataset::{
    apply_map, binarize, load_csv, load_csv_rows, read_binary_csv, write_binary_csv, BinFeature,
    BinaryDataset, BinarizeStrategy, Cell, ColumnKind, CsvOptions, DatasetError, FeatureMap,
    MissingPolicy, RawColumn, RawTable, Transform,
};
pub use encoder::{
    emit_wcnf, encode, encode_with_limit, parse_wcnf, EncodeError, LambdaSpec, Lit,
    ObjectiveConfig, SparsityMode, VarLayout, VarRole, WcnfError, WcnfFormula,
};
pub use eval::{
    cross_validate, curve_table, fold_indices, learning_curve, metrics, Confusion, ConfigSummary,
    CurvePoint, CvPlan, EvalError, EvalReport, FoldResult, Metrics,
};
pub use learner::{
    classification_errors, rule_objective_cost, sweep_lambda, train, LearnConfig, LearnError,
    MonotonicityViolation, SweepReport, TrainOutcome,
};
pub use rules::{decode, Polarity, Provenance, Rule, RuleError};
pub use solver::{
    solve, solve_external, solve_internal, Backend, Model, SolveOutcome, SolveStatus,
    SolverConfig, SolverError,
};
