//! Cross-validation, hyperparameter grids, and learning curves.

use std::time::Duration;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::dataset::BinaryDataset;
use crate::learner::{train, LearnConfig, LearnError};
use crate::rules::{Rule, RuleError};
use crate::solver::SolveStatus;

/// Plan for one cross-validated grid search.
#[derive(Debug, Clone)]
pub struct CvPlan {
    pub folds: usize,
    pub seed: u64,
    pub stratified: bool,
    pub grid: Vec<LearnConfig>,
    /// Worker threads for independent (config, fold) cells; 1 = sequential.
    pub jobs: usize,
}

impl CvPlan {
    pub fn new(grid: Vec<LearnConfig>) -> CvPlan {
        CvPlan {
            folds: 10,
            seed: 0,
            stratified: true,
            grid,
            jobs: 1,
        }
    }
}

/// Confusion counts for binary classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
}

/// Metrics of one rule on one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    pub error_indices: Vec<usize>,
    pub confusion: Confusion,
}

/// Accuracy, error set, and confusion counts of a rule on a dataset.
pub fn metrics(rule: &Rule, data: &BinaryDataset) -> Result<Metrics, RuleError> {
    let mut confusion = Confusion::default();
    let mut error_indices = Vec::new();
    for i in 0..data.num_samples() {
        let predicted = rule.classify(data.row(i))?;
        let actual = data.labels()[i];
        match (predicted, actual) {
            (true, true) => confusion.tp += 1,
            (false, false) => confusion.tn += 1,
            (true, false) => {
                confusion.fp += 1;
                error_indices.push(i);
            }
            (false, true) => {
                confusion.fn_ += 1;
                error_indices.push(i);
            }
        }
    }
    let n = data.num_samples();
    Ok(Metrics {
        accuracy: (confusion.tp + confusion.tn) as f64 / n as f64,
        error_indices,
        confusion,
    })
}

/// One (config, fold) cell of the grid.
#[derive(Debug, Clone)]
pub struct FoldResult {
    pub config_index: usize,
    pub fold: usize,
    pub test_accuracy: f64,
    pub train_accuracy: f64,
    pub rule_size: usize,
    pub status: SolveStatus,
    pub wall: Duration,
    pub rule: Rule,
}

/// Aggregates for one grid config.
#[derive(Debug, Clone)]
pub struct ConfigSummary {
    pub config_index: usize,
    pub label: String,
    pub mean_test_accuracy: f64,
    pub median_test_accuracy: f64,
    pub mean_train_accuracy: f64,
    pub median_rule_size: f64,
    /// Folds dropped because the solver timed out with no model.
    pub excluded_folds: usize,
}

#[derive(Debug, Clone)]
pub struct EvalReport {
    pub cells: Vec<FoldResult>,
    pub summaries: Vec<ConfigSummary>,
    /// Index into `summaries` of the best config by mean test accuracy,
    /// ties broken toward smaller median rule size, then smaller k.
    pub best: usize,
}

impl EvalReport {
    pub fn best_summary(&self) -> &ConfigSummary {
        &self.summaries[self.best]
    }

    /// Per-cell rows as delimiter-separated values.
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("config,fold,test_accuracy,train_accuracy,rule_size,status,wall_ms\n");
        for cell in &self.cells {
            out.push_str(&format!(
                "{},{},{:.6},{:.6},{},{},{}\n",
                self.summaries[cell.config_index].label.replace(',', ";"),
                cell.fold,
                cell.test_accuracy,
                cell.train_accuracy,
                cell.rule_size,
                cell.status,
                cell.wall.as_millis()
            ));
        }
        out
    }

    /// Pretty text table of the per-config aggregates.
    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:<24} {:>10} {:>12} {:>11} {:>12} {:>9}\n",
            "config", "mean test", "median test", "mean train", "median size", "excluded"
        );
        for (i, s) in self.summaries.iter().enumerate() {
            let marker = if i == self.best { " *" } else { "" };
            out.push_str(&format!(
                "{:<24} {:>10.4} {:>12.4} {:>11.4} {:>12.1} {:>9}{}\n",
                s.label,
                s.mean_test_accuracy,
                s.median_test_accuracy,
                s.mean_train_accuracy,
                s.median_rule_size,
                s.excluded_folds,
                marker
            ));
        }
        out
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("folds must be between 2 and the sample count (got {0})")]
    BadFoldCount(usize),
    #[error("grid is empty")]
    EmptyGrid,
    #[error(
        "stratification impossible: class with {smallest} samples cannot fill {folds} folds; \
         use fewer folds"
    )]
    StratificationImpossible { smallest: usize, folds: usize },
    #[error("every fold of config '{label}' timed out without a model")]
    AllFoldsFailed { label: String },
    #[error("fraction {0} outside (0, 1]")]
    BadFraction(f64),
    #[error("trials must be at least 1")]
    NoTrials,
    #[error("subsample at fraction {fraction} has a single class; enlarge it")]
    DegenerateSubsample { fraction: f64 },
    #[error("reported accuracy of config {config_index} fold {fold} does not match its rule")]
    StaleAggregate { config_index: usize, fold: usize },
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Rule(#[from] RuleError),
}

/// Deterministic (seeded) fold split; stratified splits deal each class
/// round-robin so per-fold class rates stay within one sample of the global
/// rate, and fold sizes differ by at most one.
pub fn fold_indices(
    labels: &[bool],
    folds: usize,
    seed: u64,
    stratified: bool,
) -> Result<Vec<Vec<usize>>, EvalError> {
    let n = labels.len();
    if folds < 2 || folds > n {
        return Err(EvalError::BadFoldCount(folds));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize>;
    if stratified {
        let mut positives: Vec<usize> = (0..n).filter(|&i| labels[i]).collect();
        let mut negatives: Vec<usize> = (0..n).filter(|&i| !labels[i]).collect();
        let smallest = positives.len().min(negatives.len());
        if smallest < folds {
            return Err(EvalError::StratificationImpossible { smallest, folds });
        }
        positives.shuffle(&mut rng);
        negatives.shuffle(&mut rng);
        order = positives;
        order.extend(negatives);
    } else {
        order = (0..n).collect();
        order.shuffle(&mut rng);
    }
    let mut out = vec![Vec::new(); folds];
    for (t, &i) in order.iter().enumerate() {
        out[t % folds].push(i);
    }
    for fold in &mut out {
        fold.sort_unstable();
    }
    Ok(out)
}

/// Runs the full grid under k-fold cross-validation.
///
/// Feasible-best cells count like any other (their best-found rule scores);
/// cells where the solver produced no model at all are excluded from the
/// aggregates and counted per config.
pub fn cross_validate(data: &BinaryDataset, plan: &CvPlan) -> Result<EvalReport, EvalError> {
    if plan.grid.is_empty() {
        return Err(EvalError::EmptyGrid);
    }
    let folds = fold_indices(data.labels(), plan.folds, plan.seed, plan.stratified)?;
    let all: Vec<usize> = (0..data.num_samples()).collect();

    let mut tasks: Vec<(usize, usize)> = Vec::new();
    for config_index in 0..plan.grid.len() {
        for fold in 0..folds.len() {
            tasks.push((config_index, fold));
        }
    }

    let run_cell = |&(config_index, fold): &(usize, usize)| -> Result<Option<FoldResult>, EvalError> {
        let test_idx = &folds[fold];
        let train_idx: Vec<usize> = all
            .iter()
            .copied()
            .filter(|i| !test_idx.contains(i))
            .collect();
        let train_data = data.subset(&train_idx);
        let test_data = data.subset(test_idx);
        let config = &plan.grid[config_index];
        match train(&train_data, config) {
            Ok(outcome) => {
                let on_train = metrics(&outcome.rule, &train_data)?;
                let on_test = metrics(&outcome.rule, &test_data)?;
                Ok(Some(FoldResult {
                    config_index,
                    fold,
                    test_accuracy: on_test.accuracy,
                    train_accuracy: on_train.accuracy,
                    rule_size: outcome.rule.size(),
                    status: outcome.status,
                    wall: outcome.wall,
                    rule: outcome.rule,
                }))
            }
            Err(LearnError::TimeoutNoModel { path }) => {
                log::warn!(
                    "config {} fold {fold}: no model within budget (instance at {})",
                    config.label(),
                    path.display()
                );
                Ok(None)
            }
            Err(e) => Err(e.into()),
        }
    };

    let results: Vec<Result<Option<FoldResult>, EvalError>> = if plan.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(plan.jobs)
            .build()
            .expect("thread pool");
        pool.install(|| tasks.par_iter().map(run_cell).collect())
    } else {
        tasks.iter().map(run_cell).collect()
    };

    let mut cells: Vec<FoldResult> = Vec::new();
    let mut excluded = vec![0usize; plan.grid.len()];
    for (task, result) in tasks.iter().zip(results) {
        match result? {
            Some(cell) => cells.push(cell),
            None => excluded[task.0] += 1,
        }
    }
    // deterministic order regardless of scheduling
    cells.sort_by_key(|c| (c.config_index, c.fold));

    let mut summaries = Vec::with_capacity(plan.grid.len());
    for (config_index, config) in plan.grid.iter().enumerate() {
        let mine: Vec<&FoldResult> = cells
            .iter()
            .filter(|c| c.config_index == config_index)
            .collect();
        if mine.is_empty() {
            return Err(EvalError::AllFoldsFailed {
                label: config.label(),
            });
        }
        let test: Vec<f64> = mine.iter().map(|c| c.test_accuracy).collect();
        let train_acc: Vec<f64> = mine.iter().map(|c| c.train_accuracy).collect();
        let sizes: Vec<f64> = mine.iter().map(|c| c.rule_size as f64).collect();
        summaries.push(ConfigSummary {
            config_index,
            label: config.label(),
            mean_test_accuracy: mean(&test),
            median_test_accuracy: median(&test),
            mean_train_accuracy: mean(&train_acc),
            median_rule_size: median(&sizes),
            excluded_folds: excluded[config_index],
        });
    }

    let best = pick_best(&summaries, &plan.grid);
    Ok(EvalReport {
        cells,
        summaries,
        best,
    })
}

fn pick_best(summaries: &[ConfigSummary], grid: &[LearnConfig]) -> usize {
    let mut best = 0;
    for i in 1..summaries.len() {
        let (a, b) = (&summaries[i], &summaries[best]);
        let better = if a.mean_test_accuracy != b.mean_test_accuracy {
            a.mean_test_accuracy > b.mean_test_accuracy
        } else if a.median_rule_size != b.median_rule_size {
            a.median_rule_size < b.median_rule_size
        } else {
            grid[a.config_index].k < grid[b.config_index].k
        };
        if better {
            best = i;
        }
    }
    best
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub(crate) fn median(xs: &[f64]) -> f64 {
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// One row of a learning-curve table.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub fraction: f64,
    pub median_train_accuracy: f64,
    pub median_test_accuracy: f64,
}

/// Trains on seeded subsamples of the training split at each fraction and
/// scores on a fixed held-out split; medians over `trials` per fraction.
pub fn learning_curve(
    data: &BinaryDataset,
    config: &LearnConfig,
    fractions: &[f64],
    trials: usize,
    seed: u64,
) -> Result<Vec<CurvePoint>, EvalError> {
    if trials == 0 {
        return Err(EvalError::NoTrials);
    }
    for &f in fractions {
        if !(f > 0.0 && f <= 1.0) {
            return Err(EvalError::BadFraction(f));
        }
    }
    // fixed stratified 70/30 split
    let (train_idx, test_idx) = holdout_split(data.labels(), 0.3, seed)?;
    let test_data = data.subset(&test_idx);

    let mut points = Vec::with_capacity(fractions.len());
    for (fi, &fraction) in fractions.iter().enumerate() {
        let mut train_accs = Vec::with_capacity(trials);
        let mut test_accs = Vec::with_capacity(trials);
        for trial in 0..trials {
            let mut rng =
                ChaCha8Rng::seed_from_u64(seed ^ (0x5eed + fi as u64) ^ ((trial as u64) << 32));
            let mut pool = train_idx.clone();
            pool.shuffle(&mut rng);
            let take = ((pool.len() as f64 * fraction).round() as usize).max(1);
            let mut sample: Vec<usize> = pool.into_iter().take(take).collect();
            sample.sort_unstable();
            let sub = data.subset(&sample);
            let positives = sub.labels().iter().filter(|&&y| y).count();
            if positives == 0 || positives == sub.num_samples() {
                return Err(EvalError::DegenerateSubsample { fraction });
            }
            let outcome = train(&sub, config)?;
            train_accs.push(metrics(&outcome.rule, &sub)?.accuracy);
            test_accs.push(metrics(&outcome.rule, &test_data)?.accuracy);
        }
        points.push(CurvePoint {
            fraction,
            median_train_accuracy: median(&train_accs),
            median_test_accuracy: median(&test_accs),
        });
    }
    Ok(points)
}

/// Stratified holdout split: roughly `test_share` of each class goes to the
/// test side; both sides keep ascending index order.
pub fn holdout_split(
    labels: &[bool],
    test_share: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>), EvalError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e3779b97f4a7c15));
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for class in [true, false] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng);
        let cut = ((members.len() as f64) * test_share).round() as usize;
        let cut = cut.clamp(1.min(members.len()), members.len().saturating_sub(1).max(1));
        test_idx.extend(&members[..cut]);
        train_idx.extend(&members[cut..]);
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    if train_idx.is_empty() || test_idx.is_empty() {
        return Err(EvalError::BadFoldCount(2));
    }
    Ok((train_idx, test_idx))
}

/// Formats learning-curve points as a plain table for external plotting.
pub fn curve_table(points: &[CurvePoint]) -> String {
    let mut out = String::from("fraction,median_train_accuracy,median_test_accuracy\n");
    for p in points {
        out.push_str(&format!(
            "{:.3},{:.6},{:.6}\n",
            p.fraction, p.median_train_accuracy, p.median_test_accuracy
        ));
    }
    out
}

/// Checks that reported accuracies match metrics recomputed from the stored
/// rules; exposed so harnesses can assert report integrity.
pub fn verify_report(
    report: &EvalReport,
    data: &BinaryDataset,
    plan: &CvPlan,
) -> Result<(), EvalError> {
    let folds = fold_indices(data.labels(), plan.folds, plan.seed, plan.stratified)?;
    for cell in &report.cells {
        let test_data = data.subset(&folds[cell.fold]);
        let again = metrics(&cell.rule, &test_data)?;
        if (again.accuracy - cell.test_accuracy).abs() > 1e-12 {
            return Err(EvalError::StaleAggregate {
                config_index: cell.config_index,
                fold: cell.fold,
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::Polarity;

    fn dataset(rows: Vec<Vec<bool>>, labels: Vec<bool>) -> BinaryDataset {
        let m = rows[0].len();
        let names = (1..=m).map(|j| format!("x{j}")).collect();
        BinaryDataset::new(rows, labels, names).unwrap()
    }

    fn separable_copies(copies: usize) -> BinaryDataset {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..copies {
            rows.push(vec![true, false]);
            labels.push(true);
            rows.push(vec![false, true]);
            labels.push(false);
        }
        dataset(rows, labels)
    }

    #[test]
    fn folds_partition_the_samples() {
        let labels: Vec<bool> = (0..23).map(|i| i % 3 == 0).collect();
        let folds = fold_indices(&labels, 4, 7, true).unwrap();
        let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..23).collect::<Vec<_>>());
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }

    #[test]
    fn stratified_folds_balance_classes() {
        let labels: Vec<bool> = (0..40).map(|i| i < 12).collect();
        let folds = fold_indices(&labels, 4, 3, true).unwrap();
        for fold in &folds {
            let pos = fold.iter().filter(|&&i| labels[i]).count();
            assert_eq!(pos, 3); // 12 positives over 4 folds
        }
    }

    #[test]
    fn stratification_error_suggests_fewer_folds() {
        let labels = vec![true, false, false, false, false];
        let err = fold_indices(&labels, 3, 0, true).unwrap_err();
        assert!(err.to_string().contains("fewer folds"));
    }

    #[test]
    fn fold_split_is_deterministic() {
        let labels: Vec<bool> = (0..30).map(|i| i % 2 == 0).collect();
        let a = fold_indices(&labels, 5, 42, true).unwrap();
        let b = fold_indices(&labels, 5, 42, true).unwrap();
        assert_eq!(a, b);
        let c = fold_indices(&labels, 5, 43, true).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn metrics_on_perfect_rule() {
        let data = separable_copies(3);
        let rule = Rule::new(
            Polarity::Cnf,
            vec![[0usize].into_iter().collect()],
            data.feature_names().to_vec(),
        )
        .unwrap();
        let m = metrics(&rule, &data).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert!(m.error_indices.is_empty());
        assert_eq!(m.confusion.tp + m.confusion.tn, 6);
    }

    #[test]
    fn metrics_on_constant_zero_rule() {
        let data = separable_copies(2);
        let rule = Rule::new(
            Polarity::Cnf,
            vec![std::collections::BTreeSet::new()],
            data.feature_names().to_vec(),
        )
        .unwrap();
        let m = metrics(&rule, &data).unwrap();
        assert_eq!(m.accuracy, 0.5);
        assert_eq!(m.confusion.fp, 0);
        assert_eq!(m.confusion.fn_, 2);
    }

    #[test]
    fn cross_validate_separable_data_is_perfect() {
        let data = separable_copies(10);
        let plan = CvPlan {
            folds: 2,
            seed: 1,
            stratified: true,
            grid: vec![LearnConfig::new(1, 2)],
            jobs: 1,
        };
        let report = cross_validate(&data, &plan).unwrap();
        for cell in &report.cells {
            assert_eq!(cell.test_accuracy, 1.0);
        }
        verify_report(&report, &data, &plan).unwrap();
    }

    #[test]
    fn cross_validate_is_deterministic_and_parallel_agrees() {
        let data = separable_copies(8);
        let mut plan = CvPlan::new(vec![LearnConfig::new(1, 1), LearnConfig::new(1, 5)]);
        plan.folds = 4;
        plan.seed = 9;
        let sequential = cross_validate(&data, &plan).unwrap();
        plan.jobs = 4;
        let parallel = cross_validate(&data, &plan).unwrap();
        assert_eq!(sequential.to_csv(), parallel.to_csv());
        assert_eq!(sequential.best, parallel.best);
    }

    #[test]
    fn best_config_prefers_accuracy_then_size_then_k() {
        let data = separable_copies(10);
        let mut plan = CvPlan::new(vec![LearnConfig::new(2, 5), LearnConfig::new(1, 5)]);
        plan.folds = 2;
        let report = cross_validate(&data, &plan).unwrap();
        // both perfect; k=1 produces the smaller rule
        assert_eq!(report.best_summary().label, "cnf k=1 lambda=5");
    }

    #[test]
    fn learning_curve_full_fraction_single_trial() {
        let data = separable_copies(10);
        let points =
            learning_curve(&data, &LearnConfig::new(1, 2), &[1.0], 1, 5).unwrap();
        assert_eq!(points.len(), 1);
        assert_eq!(points[0].fraction, 1.0);
        assert_eq!(points[0].median_test_accuracy, 1.0);
    }

    #[test]
    fn learning_curve_rejects_bad_fractions() {
        let data = separable_copies(4);
        assert!(matches!(
            learning_curve(&data, &LearnConfig::new(1, 2), &[0.0], 1, 5),
            Err(EvalError::BadFraction(_))
        ));
        assert!(matches!(
            learning_curve(&data, &LearnConfig::new(1, 2), &[1.5], 1, 5),
            Err(EvalError::BadFraction(_))
        ));
    }

    #[test]
    fn median_is_order_free() {
        let a = median(&[0.9, 0.5, 0.7]);
        let b = median(&[0.5, 0.7, 0.9]);
        assert_eq!(a, b);
        assert_eq!(median(&[1.0, 3.0]), 2.0);
    }
}
