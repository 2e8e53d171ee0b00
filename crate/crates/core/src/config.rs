//! Command-line configuration: a run plus output settings.
//!
//! Tabulated potentials may name a CSV file instead of listing values
//! inline. [`CliConfig::load`] resolves the path relative to the config
//! file and inlines the values, so a dumped config is self-contained.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::grid::PotentialSpec;
use crate::io::parse_tabulated_csv;
use crate::rpe::RunConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Formats {
    Json,
    Csv,
    #[default]
    Both,
}

impl Formats {
    pub fn json(self) -> bool {
        matches!(self, Formats::Json | Formats::Both)
    }

    pub fn csv(self) -> bool {
        matches!(self, Formats::Csv | Formats::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verbosity {
    Quiet,
    #[default]
    Info,
    Debug,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default)]
    pub formats: Formats,
    #[serde(default)]
    pub verbosity: Verbosity,
}

fn default_dir() -> PathBuf {
    PathBuf::from("rpe-out")
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: default_dir(),
            formats: Formats::default(),
            verbosity: Verbosity::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CliConfig {
    pub run: RunConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl CliConfig {
    /// Parse and validate ranges. CSV references are left unresolved.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: CliConfig = serde_json::from_str(text)?;
        cfg.run.validate()?;
        if let PotentialSpec::Tabulated { values, csv } = &cfg.run.potential {
            match (values.is_empty(), csv) {
                (false, Some(_)) => {
                    return Err(Error::InvalidPotential(
                        "tabulated potential gives both values and csv".into(),
                    ))
                }
                (true, None) => return Err(Error::InvalidPotential("tabulated potential has no values".into())),
                _ => {}
            }
        }
        if cfg.output.dir.as_os_str().is_empty() {
            return Err(Error::InvalidParameter("output dir is empty".into()));
        }
        Ok(cfg)
    }

    /// Read a config file, resolve any potential CSV next to it, and check
    /// the grid and potential.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        cfg.resolve_csv(base)?;
        Ok(cfg)
    }

    /// Inline the values of a CSV-backed tabulated potential.
    pub fn resolve_csv(&mut self, base: &Path) -> Result<()> {
        if let PotentialSpec::Tabulated { values, csv } = &mut self.run.potential {
            if let Some(rel) = csv.take() {
                let file = base.join(&rel);
                let text = std::fs::read_to_string(&file).map_err(|e| {
                    Error::InvalidPotential(format!("cannot read {}: {e}", file.display()))
                })?;
                *values = parse_tabulated_csv(&text)?;
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
