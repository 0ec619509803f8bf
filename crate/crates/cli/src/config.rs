//! `--config` file support and flag resolution.
//!
//! The file holds `key = value` lines (# starts a comment), one per long
//! flag, e.g. `lambda = 10` or `strategy = quantile`. Precedence is always
//! command line > RULESAT_SOLVER_CMD (solver command only) > config file >
//! built-in default.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use rulesat::{
    Backend, BinarizeStrategy, ColumnKind, CsvOptions, LambdaSpec, MissingPolicy,
    ObjectiveConfig, Polarity, SolverConfig, SparsityMode,
};

use crate::args::{BinarizeArgs, InputArgs, ObjectiveArgs, SolverArgs};

#[derive(Debug, Default)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<ConfigFile> {
        let Some(path) = path else {
            return Ok(ConfigFile::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("config file {}", path.display()))?;
        let mut values = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("config line {}: expected key = value", lineno + 1))?;
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(ConfigFile { values })
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|e| anyhow!("config key '{key}': {e}")),
        }
    }

    pub fn get_bool(&self, key: &str) -> Result<bool> {
        Ok(self.get::<bool>(key)?.unwrap_or(false))
    }
}

pub fn pick<T>(flag: Option<T>, config: Option<T>, default: T) -> T {
    flag.or(config).unwrap_or(default)
}

pub fn csv_options(args: &InputArgs, config: &ConfigFile) -> Result<CsvOptions> {
    let label = args
        .label
        .clone()
        .or(config.get("label")?)
        .ok_or_else(|| anyhow!("--label is required (or set label= in the config file)"))?;
    let mut opts = CsvOptions::new(label);
    opts.positive_label = args
        .positive_label
        .clone()
        .or(config.get("positive-label")?);
    let delimiter = pick(args.delimiter, config.get("delimiter")?, ',');
    if !delimiter.is_ascii() {
        bail!("--delimiter must be a single ASCII character");
    }
    opts.delimiter = delimiter as u8;
    opts.categorical_cap = pick(args.categorical_cap, config.get("categorical-cap")?, 10);
    opts.missing = if args.drop_missing || config.get_bool("drop-missing")? {
        MissingPolicy::DropRows
    } else {
        MissingPolicy::Strict
    };
    for spec in &args.kinds {
        let (name, kind) = spec
            .split_once('=')
            .ok_or_else(|| anyhow!("--kind expects COL=KIND, got '{spec}'"))?;
        opts.kind_overrides
            .insert(name.trim().to_string(), parse_kind(kind.trim())?);
    }
    Ok(opts)
}

fn parse_kind(text: &str) -> Result<ColumnKind> {
    match text {
        "binary" => Ok(ColumnKind::Binary),
        "categorical" => Ok(ColumnKind::Categorical),
        "continuous" => Ok(ColumnKind::Continuous),
        other => bail!("unknown column kind '{other}'"),
    }
}

pub fn strategy(args: &BinarizeArgs, config: &ConfigFile) -> Result<(usize, BinarizeStrategy)> {
    let thresholds = pick(args.thresholds, config.get("thresholds")?, 10);
    let name: String = pick(
        args.strategy.clone(),
        config.get("strategy")?,
        "quantile".to_string(),
    );
    let strategy = match name.as_str() {
        "quantile" => BinarizeStrategy::Quantile,
        "uniform" => BinarizeStrategy::Uniform,
        other => bail!("unknown strategy '{other}' (quantile | uniform)"),
    };
    Ok((thresholds, strategy))
}

pub fn parse_sparsity(name: &str) -> Result<SparsityMode> {
    match name {
        "per-literal" => Ok(SparsityMode::PerLiteral),
        "distinct-feature" => Ok(SparsityMode::DistinctFeature),
        other => bail!("unknown sparsity mode '{other}' (per-literal | distinct-feature)"),
    }
}

pub fn objective(
    args: &ObjectiveArgs,
    config: &ConfigFile,
    feature_names: &[String],
) -> Result<ObjectiveConfig> {
    let lambda = match (args.lambda, args.lambda_fp, args.lambda_fn) {
        (Some(l), None, None) => LambdaSpec::Uniform(l),
        (None, Some(fp), Some(fn_)) => LambdaSpec::CostSensitive {
            false_positive: fp,
            false_negative: fn_,
        },
        (None, None, None) => match (
            config.get::<u64>("lambda")?,
            config.get::<u64>("lambda-fp")?,
            config.get::<u64>("lambda-fn")?,
        ) {
            (Some(l), None, None) => LambdaSpec::Uniform(l),
            (None, Some(fp), Some(fn_)) => LambdaSpec::CostSensitive {
                false_positive: fp,
                false_negative: fn_,
            },
            (None, None, None) => LambdaSpec::Uniform(1),
            _ => bail!("use either lambda or both of lambda-fp and lambda-fn"),
        },
        _ => bail!("use either --lambda or both of --lambda-fp and --lambda-fn"),
    };
    let sparsity_name: Option<String> = args.sparsity.clone().or(config.get("sparsity")?);
    let sparsity = match sparsity_name.as_deref() {
        Some(name) => parse_sparsity(name)?,
        None => SparsityMode::PerLiteral,
    };
    let costs_path = args.feature_costs.clone().or(config.get("feature-costs")?);
    let feature_costs = match costs_path {
        Some(path) => Some(read_feature_costs(&path, feature_names)?),
        None => None,
    };
    Ok(ObjectiveConfig {
        lambda,
        feature_costs,
        sparsity,
    })
}

/// Reads `feature name = cost` lines; the split is on the last `=` because
/// one-hot feature names themselves contain one.
fn read_feature_costs(path: &Path, feature_names: &[String]) -> Result<Vec<u64>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("feature costs file {}", path.display()))?;
    let mut costs = vec![1u64; feature_names.len()];
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (name, cost) = line
            .rsplit_once('=')
            .ok_or_else(|| anyhow!("feature costs line {}: expected name = cost", lineno + 1))?;
        let name = name.trim();
        let cost: u64 = cost
            .trim()
            .parse()
            .map_err(|e| anyhow!("feature costs line {}: {e}", lineno + 1))?;
        let index = feature_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| anyhow!("feature costs: no binary feature named '{name}'"))?;
        costs[index] = cost;
    }
    Ok(costs)
}

pub fn solver(args: &SolverArgs, config: &ConfigFile) -> Result<SolverConfig> {
    let backend_name: String = pick(
        args.backend.clone(),
        config.get("backend")?,
        "internal".to_string(),
    );
    let command = args
        .solver_cmd
        .clone()
        .or_else(|| std::env::var("RULESAT_SOLVER_CMD").ok())
        .or(config.get("solver-cmd")?);
    let backend = match backend_name.as_str() {
        "internal" => Backend::Internal,
        "external" => Backend::External {
            command: command
                .ok_or_else(|| anyhow!("external backend needs --solver-cmd or RULESAT_SOLVER_CMD"))?,
        },
        other => bail!("unknown backend '{other}' (internal | external)"),
    };
    let timeout = pick(args.timeout, config.get("timeout")?, 2000.0);
    if !(timeout > 0.0) {
        bail!("--timeout must be positive");
    }
    Ok(SolverConfig {
        backend,
        budget: Duration::from_secs_f64(timeout),
        seed: 0,
        internal_cap: pick(args.cap, config.get("cap")?, 24),
    })
}

pub fn polarity(flag: Option<&str>, config: &ConfigFile) -> Result<Polarity> {
    let name: String = pick(
        flag.map(str::to_string),
        config.get("polarity")?,
        "cnf".to_string(),
    );
    match name.as_str() {
        "cnf" => Ok(Polarity::Cnf),
        "dnf" => Ok(Polarity::Dnf),
        other => bail!("unknown polarity '{other}' (cnf | dnf)"),
    }
}

pub fn clause_count(flag: Option<usize>, config: &ConfigFile) -> Result<usize> {
    flag.or(config.get("k")?)
        .ok_or_else(|| anyhow!("--k is required (or set k= in the config file)"))
}

pub fn parse_list<T: FromStr>(text: &str, what: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|e| anyhow!("{what} '{s}': {e}")))
        .collect()
}
