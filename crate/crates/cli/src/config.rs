//! Experiment configuration: a TOML file with `[game]`, `[solver]`, `[sweep]`
//! and `[output]` sections, plus dotted `key=value` overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use tmfe::envs::{Infection, InfectionParams, MTurk, MTurkParams};
use tmfe::solvers::{Algorithm, SolverConfig};
use tmfe::GameModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "env", rename_all = "kebab-case")]
pub enum GameSpec {
    Infection(InfectionParams),
    Mturk(MTurkParams),
}

impl Default for GameSpec {
    fn default() -> Self {
        GameSpec::Infection(InfectionParams::default())
    }
}

impl GameSpec {
    pub fn build(&self) -> Result<Box<dyn GameModel>> {
        Ok(match self {
            GameSpec::Infection(p) => Box::new(Infection::new(p.clone())?),
            GameSpec::Mturk(p) => Box::new(MTurk::new(p.clone())?),
        })
    }

    pub fn zeta(&self) -> f64 {
        match self {
            GameSpec::Infection(p) => p.zeta,
            GameSpec::Mturk(p) => p.zeta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reference {
    /// The T-BR equilibrium of the configured game.
    #[default]
    Tbr,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// Number of runs per algorithm; run `r` uses seed `solver.seed + r`.
    pub seeds: u64,
    pub algorithms: Vec<Algorithm>,
    /// Dotted keys mapped to the values to try; the sweep covers their
    /// Cartesian product.
    pub grid: BTreeMap<String, Vec<toml::Value>>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { seeds: 20, algorithms: vec![Algorithm::Tmfq, Algorithm::Gmbl, Algorithm::Online], grid: BTreeMap::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// Write one trace CSV per run.
    pub traces: bool,
    /// Field used for the `l1_to_ref` columns.
    pub reference: Reference,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), traces: true, reference: Reference::Tbr }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub game: GameSpec,
    pub solver: SolverConfig,
    pub sweep: SweepSection,
    pub output: OutputSection,
}

impl Config {
    /// Reads `path` (or starts from defaults) and applies `overrides` in order.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                text.parse::<toml::Table>().with_context(|| format!("parsing {}", p.display()))?
            }
            None => toml::Table::new(),
        };
        for item in overrides {
            let (key, value) = item.split_once('=').with_context(|| format!("override `{item}` is not of the form key=value"))?;
            set_path(&mut table, key.trim(), parse_value(value.trim()))?;
        }
        Self::from_table(table)
    }

    pub fn from_table(mut table: toml::Table) -> Result<Self> {
        // the game defaults to the infection model
        if let Some(toml::Value::Table(game)) = table.get_mut("game") {
            game.entry("env").or_insert_with(|| "infection".into());
        }
        let cfg: Config = toml::Value::Table(table).try_into().context("invalid configuration")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let model = self.game.build()?;
        self.solver.validate(model.num_actions())?;
        if self.sweep.seeds == 0 {
            bail!("sweep.seeds must be at least 1");
        }
        if self.sweep.algorithms.is_empty() {
            bail!("sweep.algorithms must not be empty");
        }
        for (key, values) in &self.sweep.grid {
            if values.is_empty() {
                bail!("sweep.grid.{key} has no values");
            }
        }
        Ok(())
    }

    /// This configuration with `key` set to `value`.
    pub fn with(&self, key: &str, value: toml::Value) -> Result<Self> {
        let mut table = match toml::Value::try_from(self)? {
            toml::Value::Table(t) => t,
            _ => unreachable!("a struct serializes to a table"),
        };
        set_path(&mut table, key, value)?;
        Self::from_table(table)
    }
}

/// Parses an override value as a TOML value, falling back to a bare string.
pub fn parse_value(text: &str) -> toml::Value {
    format!("v = {text}").parse::<toml::Table>().ok().and_then(|mut t| t.remove("v")).unwrap_or_else(|| toml::Value::String(text.to_string()))
}

fn set_path(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        bail!("malformed key `{key}`");
    }
    let mut node = table;
    for part in &parts[..parts.len() - 1] {
        let entry = node.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = match entry {
            toml::Value::Table(t) => t,
            _ => bail!("`{part}` in `{key}` is not a section"),
        };
    }
    node.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}
