//! Flag definitions.
//!
//! Every value-carrying flag is an `Option` so the merge order stays visible:
//! command line first, then `RULESAT_SOLVER_CMD` (solver command only), then
//! the `--config` file, then the built-in default.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "rulesat",
    version,
    about = "Learn sparse CNF/DNF classification rules via MaxSAT",
    propagate_version = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Convert raw tabular data into a binary feature matrix plus its map
    Binarize(BinarizeCmd),
    /// Write the MaxSAT instance for an already-binary dataset
    Encode(EncodeCmd),
    /// Learn a rule and write it (plus the feature map) to disk
    Train(TrainCmd),
    /// Classify raw rows with a saved rule and feature map
    Predict(PredictCmd),
    /// Cross-validated hyperparameter grid
    Evaluate(EvaluateCmd),
    /// Accuracy versus training-set size
    Curve(CurveCmd),
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// Key = value file supplying defaults for any long flag
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every random choice (fold splits, subsampling)
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug, Clone)]
pub struct InputArgs {
    /// Input CSV path (header row required)
    #[arg(long)]
    pub input: PathBuf,
    /// Name of the label column
    #[arg(long)]
    pub label: Option<String>,
    /// Label value mapped to 1 (all other values map to 0)
    #[arg(long)]
    pub positive_label: Option<String>,
    /// Field delimiter, a single character
    #[arg(long)]
    pub delimiter: Option<char>,
    /// Per-column kind override, repeatable: name=binary|categorical|continuous
    #[arg(long = "kind", value_name = "COL=KIND")]
    pub kinds: Vec<String>,
    /// Drop rows with missing values instead of rejecting the file
    #[arg(long)]
    pub drop_missing: bool,
    /// Numeric columns with at most this many distinct values are categorical
    #[arg(long)]
    pub categorical_cap: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct BinarizeArgs {
    /// Thresholds per continuous feature (q)
    #[arg(long)]
    pub thresholds: Option<usize>,
    /// Threshold placement: quantile | uniform
    #[arg(long)]
    pub strategy: Option<String>,
    /// Treat the input as already binarized; no transform is applied
    #[arg(long)]
    pub binarized: bool,
}

#[derive(Args, Debug, Clone)]
pub struct ObjectiveArgs {
    /// Error penalty (positive integer)
    #[arg(long)]
    pub lambda: Option<u64>,
    /// False-positive penalty (use with --lambda-fn instead of --lambda)
    #[arg(long = "lambda-fp", conflicts_with = "lambda", requires = "lambda_fn")]
    pub lambda_fp: Option<u64>,
    /// False-negative penalty
    #[arg(long = "lambda-fn", conflicts_with = "lambda", requires = "lambda_fp")]
    pub lambda_fn: Option<u64>,
    /// Sparsity mode: per-literal | distinct-feature
    #[arg(long)]
    pub sparsity: Option<String>,
    /// File of `feature name = cost` lines (unlisted features cost 1)
    #[arg(long)]
    pub feature_costs: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct SolverArgs {
    /// Solver backend: internal | external
    #[arg(long)]
    pub backend: Option<String>,
    /// External solver command template with a {wcnf} placeholder
    /// (RULESAT_SOLVER_CMD supplies it when the flag is absent)
    #[arg(long)]
    pub solver_cmd: Option<String>,
    /// Wall-clock budget per solve, seconds
    #[arg(long)]
    pub timeout: Option<f64>,
    /// Selector-count cap accepted by the internal exact search
    #[arg(long)]
    pub cap: Option<usize>,
}

#[derive(Args, Debug)]
pub struct BinarizeCmd {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub binarize: BinarizeArgs,
    /// Where to write the binary dataset CSV
    #[arg(long)]
    pub out_data: PathBuf,
    /// Where to write the feature map
    #[arg(long)]
    pub out_map: PathBuf,
}

#[derive(Args, Debug)]
pub struct EncodeCmd {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub input: InputArgs,
    /// Number of clauses in the rule
    #[arg(long)]
    pub k: Option<usize>,
    #[command(flatten)]
    pub objective: ObjectiveArgs,
    /// Where to write the WCNF instance
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct TrainCmd {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub binarize: BinarizeArgs,
    /// Number of clauses in the rule
    #[arg(long)]
    pub k: Option<usize>,
    #[command(flatten)]
    pub objective: ObjectiveArgs,
    /// Rule form: cnf | dnf
    #[arg(long)]
    pub polarity: Option<String>,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Where to write the learned rule
    #[arg(long)]
    pub out_rule: PathBuf,
    /// Where to write the feature map the rule indexes into
    #[arg(long)]
    pub out_map: PathBuf,
}

#[derive(Args, Debug)]
pub struct PredictCmd {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Rule file written by train
    #[arg(long)]
    pub rule: PathBuf,
    /// Feature map file written by train or binarize
    #[arg(long)]
    pub map: PathBuf,
    /// Input CSV of raw rows (a label column, if present, is ignored)
    #[arg(long)]
    pub input: PathBuf,
    /// Field delimiter, a single character
    #[arg(long)]
    pub delimiter: Option<char>,
    /// Emit NA for rows with missing values instead of failing
    #[arg(long)]
    pub drop_missing: bool,
    /// Where to write per-row predictions
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvaluateCmd {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub binarize: BinarizeArgs,
    /// Comma-separated error penalties to grid over
    #[arg(long)]
    pub lambdas: Option<String>,
    /// Comma-separated clause counts to grid over
    #[arg(long)]
    pub ks: Option<String>,
    /// Comma-separated rule forms to grid over (cnf,dnf)
    #[arg(long)]
    pub polarities: Option<String>,
    /// Sparsity mode: per-literal | distinct-feature
    #[arg(long)]
    pub sparsity: Option<String>,
    /// Cross-validation folds
    #[arg(long)]
    pub folds: Option<usize>,
    /// Parallel (config, fold) workers
    #[arg(long)]
    pub jobs: Option<usize>,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Where to write the per-fold report CSV
    #[arg(long)]
    pub out_report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CurveCmd {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub binarize: BinarizeArgs,
    /// Number of clauses in the rule
    #[arg(long)]
    pub k: Option<usize>,
    #[command(flatten)]
    pub objective: ObjectiveArgs,
    /// Rule form: cnf | dnf
    #[arg(long)]
    pub polarity: Option<String>,
    /// Comma-separated training fractions in (0, 1]
    #[arg(long)]
    pub fractions: Option<String>,
    /// Trials per fraction (medians are reported)
    #[arg(long)]
    pub trials: Option<usize>,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Where to write the curve table CSV
    #[arg(long)]
    pub out: Option<PathBuf>,
}
