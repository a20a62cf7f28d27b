//! JSON run configurations. Every file carries `schema_version`; omitted
//! fields take the defaults below.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use projband::estimator::{DEFAULT_GRID_PER_CELL, DEFAULT_LAMBDA};
use projband::experiments::{CoverageConfig, ExperimentConfig};
use projband::gproc::DEFAULT_GRID;

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SampleFormat {
    #[default]
    Text,
    /// Packed little-endian f64.
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateConfig {
    pub schema_version: u32,
    pub seed: u64,
    pub input: Option<PathBuf>,
    pub format: SampleFormat,
    pub interval: (f64, f64),
    pub degree: usize,
    /// Number of cells; ⌊n^lambda⌋ when absent.
    pub cells: Option<usize>,
    pub lambda: f64,
    /// Points of the (x, p_hat) table.
    pub grid_points: usize,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        Self {
            schema_version: schema_version(),
            seed: 0,
            input: None,
            format: SampleFormat::Text,
            interval: (-3.0, 3.0),
            degree: 4,
            cells: None,
            lambda: DEFAULT_LAMBDA,
            grid_points: 601,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BandConfig {
    pub schema_version: u32,
    pub seed: u64,
    pub input: Option<PathBuf>,
    pub format: SampleFormat,
    pub interval: (f64, f64),
    pub degree: usize,
    pub cells: Option<usize>,
    pub lambda: f64,
    pub alpha: f64,
    pub grid_per_cell: usize,
}

impl Default for BandConfig {
    fn default() -> Self {
        Self {
            schema_version: schema_version(),
            seed: 0,
            input: None,
            format: SampleFormat::Text,
            interval: (-3.0, 3.0),
            degree: 4,
            cells: None,
            lambda: DEFAULT_LAMBDA,
            alpha: 0.1,
            grid_per_cell: DEFAULT_GRID_PER_CELL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChiConfig {
    pub schema_version: u32,
    pub seed: u64,
    pub degree: usize,
    pub interval: (f64, f64),
    pub delta_range: (f64, f64),
    pub grid: usize,
}

impl Default for ChiConfig {
    fn default() -> Self {
        Self {
            schema_version: schema_version(),
            seed: 0,
            degree: 4,
            interval: (-1.0, 1.0),
            delta_range: (0.01, 4.0),
            grid: 400,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McSupConfig {
    pub schema_version: u32,
    pub seed: u64,
    pub degree: usize,
    pub interval: (f64, f64),
    /// Levels in units of √S.
    pub levels: Vec<f64>,
    pub n_rep: usize,
    pub grid: usize,
}

impl Default for McSupConfig {
    fn default() -> Self {
        Self {
            schema_version: schema_version(),
            seed: 0,
            degree: 4,
            interval: (-1.0, 1.0),
            levels: vec![2.5, 3.0],
            n_rep: 100_000,
            grid: DEFAULT_GRID,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RiceConfig {
    pub schema_version: u32,
    pub seed: u64,
    pub degree: usize,
    pub interval: (f64, f64),
    pub region: (f64, f64),
    /// Levels in units of √S.
    pub levels: Vec<f64>,
    /// Monte Carlo cross-check size; 0 skips it.
    pub n_rep: usize,
    pub grid: usize,
}

impl Default for RiceConfig {
    fn default() -> Self {
        Self {
            schema_version: schema_version(),
            seed: 0,
            degree: 4,
            interval: (-1.0, 1.0),
            region: (-1.0, 0.0),
            levels: vec![1.5, 2.0],
            n_rep: 100_000,
            grid: DEFAULT_GRID,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    #[default]
    Distribution,
    Coverage,
}

/// The inner configs' own `seed` fields are replaced by the top-level seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentCmdConfig {
    pub schema_version: u32,
    pub seed: u64,
    pub kind: ExperimentKind,
    pub distribution: ExperimentConfig,
    pub coverage: CoverageConfig,
    /// Points of each density panel.
    pub panel_points: usize,
}

impl Default for ExperimentCmdConfig {
    fn default() -> Self {
        Self {
            schema_version: schema_version(),
            seed: 0,
            kind: ExperimentKind::Distribution,
            distribution: ExperimentConfig::default(),
            coverage: CoverageConfig::default(),
            panel_points: 601,
        }
    }
}

/// Common accessors used by the command runner.
pub trait RunConfig: Serialize + DeserializeOwned + Default {
    fn schema(&self) -> u32;
    fn seed_mut(&mut self) -> &mut u64;
}

macro_rules! run_config {
    ($($t:ty),*) => {$(
        impl RunConfig for $t {
            fn schema(&self) -> u32 {
                self.schema_version
            }
            fn seed_mut(&mut self) -> &mut u64 {
                &mut self.seed
            }
        }
    )*};
}

run_config!(EstimateConfig, BandConfig, ChiConfig, McSupConfig, RiceConfig, ExperimentCmdConfig);

/// Reads a config (defaults when `path` is `None`) and applies the seed override.
pub fn load<C: RunConfig>(path: Option<&Path>, seed: Option<u64>) -> Result<C, CliError> {
    let mut cfg: C = match path {
        None => C::default(),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", p.display())))?;
            let value: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| CliError::Parse(format!("config {}: {e}", p.display())))?;
            match value.get("schema_version") {
                None => return Err(CliError::Parse("config: missing field `schema_version`".into())),
                Some(v) if v.as_u64() != Some(SCHEMA_VERSION as u64) => {
                    return Err(CliError::Parse(format!(
                        "config: unsupported schema_version {v}, expected {SCHEMA_VERSION}"
                    )))
                }
                _ => {}
            }
            serde_json::from_value(value).map_err(|e| CliError::Parse(format!("config {}: {e}", p.display())))?
        }
    };
    debug_assert_eq!(cfg.schema(), SCHEMA_VERSION);
    if let Some(s) = seed {
        *cfg.seed_mut() = s;
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &tempfile::TempDir, text: &str) -> PathBuf {
        let p = dir.path().join("c.json");
        std::fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn defaults_and_overrides() {
        let c: ChiConfig = load(None, Some(7)).unwrap();
        assert_eq!((c.degree, c.grid, c.seed), (4, 400, 7));
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, r#"{"schema_version": 1, "degree": 5}"#);
        let c: ChiConfig = load(Some(&p), None).unwrap();
        assert_eq!(c.degree, 5);
        assert_eq!(c.delta_range, (0.01, 4.0));
    }

    #[test]
    fn rejects_bad_files() {
        let dir = tempfile::tempdir().unwrap();
        for text in [
            r#"{"degree": 5}"#,
            r#"{"schema_version": 2}"#,
            r#"{"schema_version": 1, "degre": 5}"#,
            r#"{"schema_version": 1, "degree": "five"}"#,
            "{",
        ] {
            let p = write(&dir, text);
            assert!(matches!(load::<ChiConfig>(Some(&p), None), Err(CliError::Parse(_))), "{text}");
        }
        let missing = dir.path().join("nope.json");
        assert!(matches!(load::<ChiConfig>(Some(&missing), None), Err(CliError::Usage(_))));
    }
}
