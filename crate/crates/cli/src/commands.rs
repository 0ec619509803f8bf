//! Subcommand implementations.

use std::fs::File;
use std::io::{BufWriter, Write};


use anyhow::{anyhow, bail, Context, Result};
use rulesat::{
    binarize, cross_validate, curve_table, emit_wcnf, encode_with_limit, learning_curve,
    load_csv, load_csv_rows, read_binary_csv, train, write_binary_csv, BinaryDataset, CvPlan,
    DatasetError, FeatureMap, LambdaSpec, LearnConfig, Provenance, Rule, SparsityMode,
};

use crate::args::{
    BinarizeCmd, CurveCmd, EncodeCmd, EvaluateCmd, PredictCmd, TrainCmd,
};
use crate::config::{self, pick, ConfigFile};

/// Loads the training data either raw (binarizing it) or pre-binarized.
fn load_dataset(
    input: &crate::args::InputArgs,
    bin: &crate::args::BinarizeArgs,
    config: &ConfigFile,
) -> Result<(BinaryDataset, FeatureMap)> {
    let opts = config::csv_options(input, config)?;
    if bin.binarized || config.get_bool("binarized")? {
        let (data, map) = read_binary_csv(&input.input, &opts.label_column, opts.delimiter)
            .with_context(|| format!("reading {}", input.input.display()))?;
        Ok((data, map))
    } else {
        let raw = load_csv(&input.input, &opts)
            .with_context(|| format!("reading {}", input.input.display()))?;
        let (q, strategy) = config::strategy(bin, config)?;
        Ok(binarize(&raw, q, strategy)?)
    }
}

pub fn run_binarize(cmd: &BinarizeCmd) -> Result<()> {
    let config = ConfigFile::load(cmd.common.config.as_deref())?;
    let (data, map) = load_dataset(&cmd.input, &cmd.binarize, &config)?;
    let label = config::csv_options(&cmd.input, &config)?.label_column;
    let out = BufWriter::new(
        File::create(&cmd.out_data)
            .with_context(|| format!("creating {}", cmd.out_data.display()))?,
    );
    write_binary_csv(&data, &label, out)?;
    map.save(&cmd.out_map)?;
    println!(
        "binarized {} samples into {} features",
        data.num_samples(),
        data.num_features()
    );
    println!("data: {}", cmd.out_data.display());
    println!("map: {}", cmd.out_map.display());
    Ok(())
}

pub fn run_encode(cmd: &EncodeCmd) -> Result<()> {
    let config = ConfigFile::load(cmd.common.config.as_deref())?;
    let opts = config::csv_options(&cmd.input, &config)?;
    let (data, _) = read_binary_csv(&cmd.input.input, &opts.label_column, opts.delimiter)
        .with_context(|| format!("reading {}", cmd.input.input.display()))?;
    let objective = config::objective(&cmd.objective, &config, data.feature_names())?;
    let k = config::clause_count(cmd.k, &config)?;
    let (formula, layout) = encode_with_limit(&data, k, &objective, usize::MAX)?;
    let mut out = BufWriter::new(
        File::create(&cmd.out).with_context(|| format!("creating {}", cmd.out.display()))?,
    );
    emit_wcnf(&formula, &layout, data.feature_names(), &mut out)?;
    out.flush()?;
    println!(
        "wrote {}: {} variables, {} clauses, top {}",
        cmd.out.display(),
        formula.num_vars(),
        formula.num_clauses(),
        formula.top()
    );
    Ok(())
}

fn lambda_text(spec: &LambdaSpec) -> String {
    match spec {
        LambdaSpec::Uniform(l) => l.to_string(),
        LambdaSpec::CostSensitive {
            false_positive,
            false_negative,
        } => format!("fp={false_positive},fn={false_negative}"),
    }
}

fn sparsity_text(mode: SparsityMode) -> &'static str {
    match mode {
        SparsityMode::PerLiteral => "per-literal",
        SparsityMode::DistinctFeature => "distinct-feature",
    }
}

pub fn run_train(cmd: &TrainCmd) -> Result<()> {
    let config = ConfigFile::load(cmd.common.config.as_deref())?;
    let (data, map) = load_dataset(&cmd.input, &cmd.binarize, &config)?;
    let objective = config::objective(&cmd.objective, &config, data.feature_names())?;
    let polarity = config::polarity(cmd.polarity.as_deref(), &config)?;
    let mut solver = config::solver(&cmd.solver, &config)?;
    solver.seed = pick(cmd.common.seed, config.get("seed")?, 0);
    let learn = LearnConfig {
        k: config::clause_count(cmd.k, &config)?,
        objective,
        polarity,
        solver,
    };

    let outcome = train(&data, &learn)?;
    map.save(&cmd.out_map)?;
    let provenance = Provenance {
        lambda: lambda_text(&learn.objective.lambda),
        sparsity: sparsity_text(learn.objective.sparsity).to_string(),
        solver_status: outcome.status.to_string(),
        objective_cost: outcome.objective_cost,
        training_errors: outcome.error_count(),
        map: Some(cmd.out_map.display().to_string()),
    };
    outcome.rule.save(&cmd.out_rule, Some(&provenance))?;

    println!("rule: {}", outcome.rule.render(&map)?);
    println!(
        "polarity: {}  k: {}  size: {}",
        outcome.rule.polarity(),
        outcome.rule.k(),
        outcome.rule.size()
    );
    println!(
        "training errors: {} / {}",
        outcome.error_count(),
        data.num_samples()
    );
    println!("objective cost: {}", outcome.objective_cost);
    println!("status: {}", outcome.status);
    println!("wall: {:.3} s", outcome.wall.as_secs_f64());
    println!("rule file: {}", cmd.out_rule.display());
    println!("map file: {}", cmd.out_map.display());
    Ok(())
}

pub fn run_predict(cmd: &PredictCmd) -> Result<()> {
    let config = ConfigFile::load(cmd.common.config.as_deref())?;
    let (rule, _provenance) = Rule::load(&cmd.rule)?;
    let map = FeatureMap::load(&cmd.map)?;
    if map.len() != rule.num_features() {
        bail!(
            "feature map has {} entries but the rule expects {}",
            map.len(),
            rule.num_features()
        );
    }
    let delimiter = pick(cmd.delimiter, config.get("delimiter")?, ',');
    let (header, rows) = load_csv_rows(&cmd.input, delimiter as u8)?;
    let bound = map.bind(&header)?;
    let drop_missing = cmd.drop_missing || config.get_bool("drop-missing")?;

    let mut out = BufWriter::new(
        File::create(&cmd.out).with_context(|| format!("creating {}", cmd.out.display()))?,
    );
    writeln!(out, "row,prediction")?;
    let mut skipped = 0usize;
    for (i, cells) in rows.iter().enumerate() {
        match bound.apply(cells) {
            Ok(binary_row) => {
                let label = rule.classify(&binary_row)?;
                writeln!(out, "{},{}", i + 1, if label { 1 } else { 0 })?;
            }
            Err(DatasetError::MissingValues { .. }) if drop_missing => {
                writeln!(out, "{},NA", i + 1)?;
                skipped += 1;
            }
            Err(e) => return Err(anyhow!(e).context(format!("row {}", i + 1))),
        }
    }
    out.flush()?;
    println!("predicted {} rows ({} skipped)", rows.len(), skipped);
    println!("predictions: {}", cmd.out.display());
    Ok(())
}

pub fn run_evaluate(cmd: &EvaluateCmd) -> Result<()> {
    let config = ConfigFile::load(cmd.common.config.as_deref())?;
    let (data, _map) = load_dataset(&cmd.input, &cmd.binarize, &config)?;

    let lambdas_text: String = pick(cmd.lambdas.clone(), config.get("lambdas")?, "1,10".into());
    let ks_text: String = pick(cmd.ks.clone(), config.get("ks")?, "1,2,3".into());
    let polarities_text: String = pick(
        cmd.polarities.clone(),
        config.get("polarities")?,
        "cnf,dnf".into(),
    );
    let lambdas: Vec<u64> = config::parse_list(&lambdas_text, "lambda")?;
    let ks: Vec<usize> = config::parse_list(&ks_text, "k")?;
    let polarity_names: Vec<String> = config::parse_list(&polarities_text, "polarity")?;

    let sparsity = match cmd.sparsity.as_deref() {
        Some(name) => config::parse_sparsity(name)?,
        None => match config.get::<String>("sparsity")? {
            Some(name) => config::parse_sparsity(&name)?,
            None => SparsityMode::PerLiteral,
        },
    };
    let mut solver = config::solver(&cmd.solver, &config)?;
    let seed = pick(cmd.common.seed, config.get("seed")?, 0);
    solver.seed = seed;

    let mut grid = Vec::new();
    for polarity_name in &polarity_names {
        let polarity = config::polarity(Some(polarity_name), &config)?;
        for &k in &ks {
            for &lambda in &lambdas {
                let mut learn = LearnConfig::new(k, lambda);
                learn.objective.sparsity = sparsity;
                learn.polarity = polarity;
                learn.solver = solver.clone();
                grid.push(learn);
            }
        }
    }

    let plan = CvPlan {
        folds: pick(cmd.folds, config.get("folds")?, 10),
        seed,
        stratified: true,
        grid,
        jobs: pick(cmd.jobs, config.get("jobs")?, 1),
    };
    let report = cross_validate(&data, &plan)?;

    print!("{}", report.to_table());
    let best = report.best_summary();
    println!(
        "best: {} (mean test accuracy {:.4}, median rule size {:.1})",
        best.label, best.mean_test_accuracy, best.median_rule_size
    );
    let excluded: usize = report.summaries.iter().map(|s| s.excluded_folds).sum();
    if excluded > 0 {
        println!("excluded {excluded} fold results with no model within budget");
    }
    if let Some(path) = &cmd.out_report {
        std::fs::write(path, report.to_csv())?;
        println!("report: {}", path.display());
    }
    Ok(())
}

pub fn run_curve(cmd: &CurveCmd) -> Result<()> {
    let config = ConfigFile::load(cmd.common.config.as_deref())?;
    let (data, _map) = load_dataset(&cmd.input, &cmd.binarize, &config)?;
    let objective = config::objective(&cmd.objective, &config, data.feature_names())?;
    let polarity = config::polarity(cmd.polarity.as_deref(), &config)?;
    let mut solver = config::solver(&cmd.solver, &config)?;
    let seed = pick(cmd.common.seed, config.get("seed")?, 0);
    solver.seed = seed;
    let learn = LearnConfig {
        k: config::clause_count(cmd.k, &config)?,
        objective,
        polarity,
        solver,
    };
    let fractions_text: String = pick(
        cmd.fractions.clone(),
        config.get("fractions")?,
        "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9".into(),
    );
    let fractions: Vec<f64> = config::parse_list(&fractions_text, "fraction")?;
    let trials = pick(cmd.trials, config.get("trials")?, 10);

    let points = learning_curve(&data, &learn, &fractions, trials, seed)?;
    let table = curve_table(&points);
    print!("{table}");
    if let Some(path) = &cmd.out {
        std::fs::write(path, table)?;
        println!("curve: {}", path.display());
    }
    Ok(())
}
