use std::path::{Path, PathBuf};

use checkmark_core::{MechanismSolution, ModelConfig};

use crate::CliError;

/// CSV sink that formats every number with a fixed count of decimals.
pub struct Table {
    path: PathBuf,
    writer: csv::Writer<std::fs::File>,
    precision: usize,
}

impl Table {
    pub fn create(dir: &Path, name: &str, header: &[&str], precision: usize) -> Result<Self, CliError> {
        let path = dir.join(name);
        let io = |e: std::io::Error| CliError::Io {
            path: path.clone(),
            source: e,
        };
        std::fs::create_dir_all(dir).map_err(io)?;
        let file = std::fs::File::create(&path).map_err(io)?;
        let mut table = Table {
            writer: csv::Writer::from_writer(file),
            path,
            precision,
        };
        table.record(header.iter().map(|s| s.to_string()))?;
        Ok(table)
    }

    pub fn fmt(&self, x: f64) -> String {
        // Keeps the sign of exact zeros out of the output.
        let x = if x == 0.0 { 0.0 } else { x };
        format!("{x:.*}", self.precision)
    }

    pub fn row(&mut self, values: &[f64]) -> Result<(), CliError> {
        let cells: Vec<String> = values.iter().map(|&x| self.fmt(x)).collect();
        self.record(cells)
    }

    pub fn record(&mut self, cells: impl IntoIterator<Item = String>) -> Result<(), CliError> {
        let cells: Vec<String> = cells.into_iter().collect();
        self.writer.write_record(&cells).map_err(|e| self.csv_error(e))
    }

    pub fn finish(mut self) -> Result<PathBuf, CliError> {
        self.writer.flush().map_err(|e| CliError::Io {
            path: self.path.clone(),
            source: e,
        })?;
        Ok(self.path)
    }

    fn csv_error(&self, e: csv::Error) -> CliError {
        CliError::Io {
            path: self.path.clone(),
            source: std::io::Error::other(e),
        }
    }
}

pub const MECHANISM_HEADER: [&str; 8] = [
    "theta",
    "phi",
    "lambda",
    "v_good",
    "v_bad",
    "price",
    "attention",
    "engagement_density",
];

/// One row per grid node of `sol`.
pub fn write_mechanism(
    dir: &Path,
    name: &str,
    sol: &MechanismSolution,
    cfg: &ModelConfig,
    precision: usize,
) -> Result<PathBuf, CliError> {
    let mut t = Table::create(dir, name, &MECHANISM_HEADER, precision)?;
    for i in 0..sol.len() {
        let att = cfg.attention.value(sol.quality[i]);
        t.row(&[
            sol.theta[i],
            sol.phi[i],
            sol.quality[i],
            sol.views_good[i],
            sol.views_bad[i],
            sol.price[i],
            att,
            att * sol.views_good[i] * cfg.dist.pdf(sol.theta[i]),
        ])?;
    }
    t.finish()
}
