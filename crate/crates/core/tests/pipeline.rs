//! Cross-module integration at the library level: file round trips, the
//! train-and-reclassify contract, cost-sensitive penalties, and learning
//! curves on seeded synthetic data.

use std::time::Duration;

use rulesat::{
    binarize, learning_curve, load_csv_rows, metrics, train, BinarizeStrategy, BinaryDataset,
    Cell, ColumnKind, CsvOptions, FeatureMap, LearnConfig, ObjectiveConfig, Polarity, Provenance,
    RawColumn, RawTable, Rule, SolveStatus,
};

fn iris_path() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/iris.csv")
}

#[test]
fn trained_rule_survives_the_file_round_trip_and_reclassifies_identically() {
    let mut opts = CsvOptions::new("species");
    opts.positive_label = Some("versicolor".into());
    let raw = rulesat::load_csv(&iris_path(), &opts).unwrap();
    let (data, map) = binarize(&raw, 4, BinarizeStrategy::Quantile).unwrap();

    let mut config = LearnConfig::new(2, 5);
    config.solver.internal_cap = 1024;
    config.solver.budget = Duration::from_secs(3);
    let outcome = train(&data, &config).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let rule_path = dir.path().join("rule.toml");
    let map_path = dir.path().join("map.toml");
    let provenance = Provenance {
        lambda: "5".into(),
        sparsity: "per-literal".into(),
        solver_status: outcome.status.to_string(),
        objective_cost: outcome.objective_cost,
        training_errors: outcome.error_count(),
        map: Some(map_path.display().to_string()),
    };
    outcome.rule.save(&rule_path, Some(&provenance)).unwrap();
    map.save(&map_path).unwrap();

    let (rule, loaded_prov) = Rule::load(&rule_path).unwrap();
    let loaded_map = FeatureMap::load(&map_path).unwrap();
    assert_eq!(rule, outcome.rule);
    assert_eq!(loaded_prov.unwrap().training_errors, outcome.error_count());

    // classifying the raw training rows through the loaded artifacts must
    // reproduce exactly the recorded error set
    let bound = loaded_map.bind(&raw.column_names()).unwrap();
    let mut errors = Vec::new();
    for i in 0..raw.num_rows() {
        let row = bound.apply(&raw.row(i)).unwrap();
        if rule.classify(&row).unwrap() != raw.labels()[i] {
            errors.push(i);
        }
    }
    assert_eq!(errors, outcome.error_indices);
}

#[test]
fn cost_sensitive_penalties_steer_the_error_kind() {
    // contradictory pair: every rule errs on one of them, and the cheap side
    // of the penalty split decides which
    let data = BinaryDataset::new(
        vec![vec![true], vec![true]],
        vec![true, false],
        vec!["x1".into()],
    )
    .unwrap();

    let mut dear_fp = LearnConfig::new(1, 1);
    dear_fp.objective = ObjectiveConfig::cost_sensitive(10, 1);
    let outcome = train(&data, &dear_fp).unwrap();
    // predicting constant 0 misclassifies the positive sample (a false
    // negative, cost 1) instead of the negative one (cost 10)
    assert_eq!(outcome.error_indices, vec![0]);
    assert_eq!(outcome.objective_cost, 1);

    let mut dear_fn = LearnConfig::new(1, 1);
    dear_fn.objective = ObjectiveConfig::cost_sensitive(1, 10);
    let outcome = train(&data, &dear_fn).unwrap();
    assert_eq!(outcome.error_indices, vec![1]);
    assert_eq!(outcome.objective_cost, 2); // one selector + one false positive
}

#[test]
fn cost_sensitive_penalties_swap_for_dnf_training() {
    let data = BinaryDataset::new(
        vec![vec![true], vec![true]],
        vec![true, false],
        vec!["x1".into()],
    )
    .unwrap();
    let mut config = LearnConfig::new(1, 1);
    config.objective = ObjectiveConfig::cost_sensitive(10, 1);
    config.polarity = Polarity::Dnf;
    let outcome = train(&data, &config).unwrap();
    // the DNF optimum mirrors the CNF one: err on the false-negative side
    assert_eq!(outcome.status, SolveStatus::Optimum);
    assert_eq!(outcome.error_indices, vec![0]);
    assert_eq!(outcome.objective_cost, 2); // stored selector + cheap error
}

#[test]
fn distinct_feature_mode_prefers_shared_features() {
    // y = x1 AND x2 is learnable at k=2; per-literal cost 2 either way, but
    // distinct-feature counts only features used in all clauses
    let rows = vec![
        vec![true, true],
        vec![true, false],
        vec![false, true],
        vec![false, false],
    ];
    let labels = vec![true, false, false, false];
    let data = BinaryDataset::new(rows, labels, vec!["a".into(), "b".into()]).unwrap();
    let mut config = LearnConfig::new(2, 10);
    config.objective.sparsity = rulesat::SparsityMode::DistinctFeature;
    let outcome = train(&data, &config).unwrap();
    assert_eq!(outcome.status, SolveStatus::Optimum);
    assert_eq!(outcome.error_count(), 0);
    // zero errors; the distinct-feature size term only counts features
    // appearing in every clause slot
    let shared: Vec<usize> = outcome.rule.clauses()[0]
        .intersection(&outcome.rule.clauses()[1])
        .copied()
        .collect();
    assert_eq!(outcome.objective_cost, shared.len() as u64);
}

#[test]
fn learning_curve_on_separable_data_improves_toward_full_fraction() {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    // seeded separable blob: label = feature 0
    for i in 0..60 {
        let a = i % 2 == 0;
        rows.push(vec![a, i % 3 == 0, i % 5 == 0]);
        labels.push(a);
    }
    let names = vec!["a".into(), "b".into(), "c".into()];
    let data = BinaryDataset::new(rows, labels, names).unwrap();
    let config = LearnConfig::new(1, 5);
    let points = learning_curve(&data, &config, &[0.3, 1.0], 5, 7).unwrap();
    assert_eq!(points.len(), 2);
    let tolerance = 0.05;
    assert!(
        points[1].median_test_accuracy + tolerance >= points[0].median_test_accuracy,
        "full-data accuracy {} fell below the 30% subsample {}",
        points[1].median_test_accuracy,
        points[0].median_test_accuracy
    );
    assert_eq!(points[1].median_test_accuracy, 1.0);

    // a fraction so small the subsample must be single-class is an error
    let err = learning_curve(&data, &config, &[0.02], 1, 7).unwrap_err();
    assert!(matches!(
        err,
        rulesat::EvalError::DegenerateSubsample { .. }
    ));
}

#[test]
fn unseen_category_prediction_stays_calm() {
    let raw = RawTable::new(
        vec![RawColumn {
            name: "color".into(),
            kind: ColumnKind::Categorical,
            values: vec![
                Cell::Text("red".into()),
                Cell::Text("blue".into()),
                Cell::Text("red".into()),
                Cell::Text("blue".into()),
            ],
        }],
        vec![true, false, true, false],
    )
    .unwrap();
    let (data, map) = binarize(&raw, 10, BinarizeStrategy::Quantile).unwrap();
    let outcome = train(&data, &LearnConfig::new(1, 5)).unwrap();
    assert_eq!(outcome.error_count(), 0);

    let (header, rows) = {
        // a raw row with a category never seen in training
        (
            vec!["color".to_string()],
            vec![vec![Cell::Text("chartreuse".into())]],
        )
    };
    let bound = map.bind(&header).unwrap();
    let binary_row = bound.apply(&rows[0]).unwrap();
    assert!(binary_row.iter().all(|&b| !b));
    // an all-zero one-hot group classifies as the negative class here
    assert!(!outcome.rule.classify(&binary_row).unwrap());
}

#[test]
fn metrics_agree_with_recorded_training_errors() {
    let mut opts = CsvOptions::new("species");
    opts.positive_label = Some("virginica".into());
    let raw = rulesat::load_csv(&iris_path(), &opts).unwrap();
    let (data, _) = binarize(&raw, 3, BinarizeStrategy::Quantile).unwrap();
    let mut config = LearnConfig::new(2, 2);
    config.solver.internal_cap = 1024;
    config.solver.budget = Duration::from_secs(3);
    let outcome = train(&data, &config).unwrap();
    let m = metrics(&outcome.rule, &data).unwrap();
    assert_eq!(m.error_indices, outcome.error_indices);
    let n = data.num_samples();
    assert_eq!(
        m.confusion.tp + m.confusion.tn + m.confusion.fp + m.confusion.fn_,
        n
    );
    assert!((m.accuracy - (n - m.error_indices.len()) as f64 / n as f64).abs() < 1e-12);
}

#[test]
fn loader_round_trips_through_raw_cells() {
    let (header, rows) = load_csv_rows(&iris_path(), b',').unwrap();
    assert_eq!(header.len(), 5);
    assert_eq!(rows.len(), 150);
    assert!(matches!(rows[0][0], Cell::Num(_)));
    assert!(matches!(rows[0][4], Cell::Text(_)));
}
