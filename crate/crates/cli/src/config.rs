//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use checkmark_core::{AttentionSpec, CostSpec, Error as ModelError, GridConfig, ModelConfig, TypeDistribution};

use crate::CliError;

const KEYS: &[&str] = &[
    "model.gamma",
    "attention.family",
    "attention.alpha",
    "attention.loss_b",
    "attention.addiction_z",
    "cost.kappa",
    "cost.sigma",
    "dist.family",
    "dist.theta_max",
    "grid.theta_points",
    "grid.lambda_coarse_points",
    "grid.refine_tol",
    "output.dir",
    "output.format",
    "output.precision",
    "seed",
];

const REQUIRED: &[&str] = &[
    "model.gamma",
    "attention.family",
    "attention.alpha",
    "cost.kappa",
    "cost.sigma",
    "dist.family",
    "dist.theta_max",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub output_dir: PathBuf,
    pub format: OutputFormat,
    /// Decimal digits written for every number.
    pub precision: usize,
    pub seed: u64,
}

impl RunConfig {
    /// The running example with default output settings.
    pub fn running_example() -> Self {
        RunConfig {
            model: ModelConfig::running_example(),
            output_dir: PathBuf::from("out"),
            format: OutputFormat::Csv,
            precision: 12,
            seed: 0,
        }
    }
}

fn config_error(key: &str, reason: impl Into<String>) -> CliError {
    CliError::Config {
        key: key.to_string(),
        reason: reason.into(),
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let mut entries: BTreeMap<&str, &str> = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| config_error(line, format!("line {}: expected `key = value`", n + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(config_error(key, "unknown key"));
        }
        if entries.insert(key, value).is_some() {
            return Err(config_error(key, "key given more than once"));
        }
    }
    if let Some(missing) = REQUIRED.iter().find(|k| !entries.contains_key(*k)) {
        return Err(config_error(missing, "missing required key"));
    }

    let num = |key: &str, default: f64| -> Result<f64, CliError> {
        match entries.get(key) {
            None => Ok(default),
            Some(v) => v.parse::<f64>().map_err(|_| config_error(key, format!("not a number: `{v}`"))),
        }
    };
    let count = |key: &str, default: u64| -> Result<u64, CliError> {
        match entries.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse::<u64>()
                .map_err(|_| config_error(key, format!("not a nonnegative integer: `{v}`"))),
        }
    };
    let family = |key: &str, expect: &str| -> Result<(), CliError> {
        match entries.get(key) {
            Some(&v) if v == expect => Ok(()),
            Some(v) => Err(config_error(key, format!("unsupported family `{v}`, expected `{expect}`"))),
            None => Err(config_error(key, "missing required key")),
        }
    };

    family("attention.family", "power")?;
    family("dist.family", "uniform")?;
    let defaults = GridConfig::default();
    let grid = GridConfig {
        theta_points: count("grid.theta_points", defaults.theta_points as u64)? as usize,
        lambda_coarse_points: count("grid.lambda_coarse_points", defaults.lambda_coarse_points as u64)? as usize,
        refine_tol: num("grid.refine_tol", defaults.refine_tol)?,
    };
    let model = build_model(
        num("attention.alpha", 0.0)?,
        num("attention.loss_b", 0.0)?,
        num("attention.addiction_z", 0.0)?,
        num("cost.kappa", 0.0)?,
        num("cost.sigma", 0.0)?,
        num("dist.theta_max", 0.0)?,
        num("model.gamma", 0.0)?,
        grid,
    )
    .map_err(model_error)?;

    let format = match entries.get("output.format").copied().unwrap_or("csv") {
        "csv" => OutputFormat::Csv,
        other => return Err(config_error("output.format", format!("unsupported format `{other}`"))),
    };
    let precision = count("output.precision", 12)?;
    if !(1..=17).contains(&precision) {
        return Err(config_error("output.precision", format!("precision must lie in 1..=17, got {precision}")));
    }
    Ok(RunConfig {
        model,
        output_dir: PathBuf::from(entries.get("output.dir").copied().unwrap_or("out")),
        format,
        precision: precision as usize,
        seed: count("seed", 0)?,
    })
}

#[allow(clippy::too_many_arguments)]
fn build_model(
    alpha: f64,
    loss_b: f64,
    addiction_z: f64,
    kappa: f64,
    sigma: f64,
    theta_max: f64,
    gamma: f64,
    grid: GridConfig,
) -> checkmark_core::Result<ModelConfig> {
    let mut attention = AttentionSpec::power(alpha)?;
    if loss_b != 0.0 {
        attention = attention.with_loss(loss_b)?;
    }
    if addiction_z != 0.0 {
        attention = attention.with_addiction(addiction_z)?;
    }
    ModelConfig::new(
        attention,
        CostSpec::new(kappa, sigma)?,
        TypeDistribution::uniform(theta_max)?,
        gamma,
        grid,
    )
}

fn model_error(e: ModelError) -> CliError {
    match e {
        ModelError::InvalidParameter { key, reason } => config_error(key, reason),
        ModelError::NonRegular { .. } => config_error("dist.family", e.to_string()),
        other => CliError::Model(other),
    }
}
