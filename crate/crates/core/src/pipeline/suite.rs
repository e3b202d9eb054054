use std::path::Path;

use serde::{Deserialize, Serialize};

use super::report::render_cells;
use super::{derive_seed, run, ExperimentConfig, ExperimentResult, ReportFormat};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SuiteConfig {
    #[serde(default)]
    pub seed: u64,
    pub experiments: Vec<ExperimentConfig>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SuiteFile {
    Bare(Vec<ExperimentConfig>),
    Full(SuiteConfig),
}

/// Reads a suite: a JSON array of experiments, or `{"seed", "experiments"}`.
pub fn load_suite(path: impl AsRef<Path>) -> Result<SuiteConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_suite(&text)
}

pub(crate) fn parse_suite(text: &str) -> Result<SuiteConfig> {
    match serde_json::from_str(text) {
        Ok(SuiteFile::Bare(experiments)) => Ok(SuiteConfig { seed: 0, experiments }),
        Ok(SuiteFile::Full(s)) => Ok(s),
        // Untagged errors say nothing useful; retry as the object form for the message.
        Err(_) => serde_json::from_str::<SuiteConfig>(text)
            .map_err(|e| Error::invalid(format!("suite config: {e}"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteCell {
    pub index: usize,
    pub config: ExperimentConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<ExperimentResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Runs every experiment in order. Experiments without a seed get one
/// derived from the suite seed and their position. Failures are recorded in
/// their cell and the suite continues.
pub fn run_suite(suite: &SuiteConfig) -> Vec<SuiteCell> {
    suite
        .experiments
        .iter()
        .enumerate()
        .map(|(index, exp)| {
            let config = ExperimentConfig {
                seed: Some(exp.seed.unwrap_or_else(|| derive_seed(suite.seed, index as u64))),
                ..exp.clone()
            };
            let (result, error) = match run(&config) {
                Ok(r) => (Some(r), None),
                Err(e) => (None, Some(e.to_string())),
            };
            SuiteCell {
                index,
                config,
                result,
                error,
            }
        })
        .collect()
}

/// Writes `results.json`, `report.md` and `report.csv` into `dir`.
pub fn write_suite(cells: &[SuiteCell], dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, format) in [
        ("results.json", ReportFormat::Json),
        ("report.md", ReportFormat::Markdown),
        ("report.csv", ReportFormat::Csv),
    ] {
        let path = dir.join(name);
        std::fs::write(&path, render_cells(cells, format)?).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}
