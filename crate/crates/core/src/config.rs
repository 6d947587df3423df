//! The unified run configuration file and `section.key=value` overrides.

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::measures::MeasureConfig;
use crate::policy::{AllowanceParams, ConversionParams, GmiParams, PolicyParameters, TaxParams};
use crate::scenario::RunConfig;
use crate::shock::ShockScenario;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSection {
    #[serde(default = "default_durations")]
    pub durations: Vec<u32>,
}

impl Default for BoundsSection {
    fn default() -> Self {
        BoundsSection { durations: default_durations() }
    }
}

fn default_durations() -> Vec<u32> {
    vec![3, 5, 9]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub scenario: ShockScenario,
    pub tax: TaxParams,
    pub gmi: GmiParams,
    pub allowances: AllowanceParams,
    pub conversion: ConversionParams,
    #[serde(default)]
    pub measures: MeasureConfig,
    #[serde(default)]
    pub bounds: BoundsSection,
}

impl From<ConfigFile> for RunConfig {
    fn from(c: ConfigFile) -> Self {
        RunConfig {
            scenario: c.scenario,
            policy: PolicyParameters { tax: c.tax, gmi: c.gmi, allowances: c.allowances, conversion: c.conversion },
            measures: c.measures,
            bounds_durations: c.bounds.durations,
        }
    }
}

/// A loaded configuration together with the canonical text it was built
/// from once overrides are applied.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadedConfig {
    pub run: RunConfig,
    pub resolved_text: String,
}

fn parse_table(text: &str) -> Result<Table> {
    text.parse().map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))
}

/// Apply overrides to any TOML document. The text comes back unchanged when
/// there is nothing to apply.
pub fn apply_overrides(text: &str, overrides: &[String]) -> Result<String> {
    if overrides.is_empty() {
        return Ok(text.to_string());
    }
    let mut table = parse_table(text)?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    toml::to_string(&table).map_err(|e| Error::Config(e.to_string()))
}

/// Parse a run configuration, apply overrides, and validate the result.
pub fn load_run_config(text: &str, overrides: &[String]) -> Result<LoadedConfig> {
    let resolved_text = apply_overrides(text, overrides)?;
    let table = parse_table(&resolved_text)?;
    let file: ConfigFile = Value::Table(table).try_into().map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
    let run = RunConfig::from(file);
    run.validate()?;
    Ok(LoadedConfig { run, resolved_text })
}

/// Set `a.b.c = value` in `table`; a bare `key` addresses the top level. The value is read as a TOML literal and
/// falls back to a plain string.
pub fn apply_override(table: &mut Table, spec: &str) -> Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {spec:?} is not of the form section.key=value")))?;
    let keys: Vec<&str> = path.trim().split('.').map(str::trim).collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(Error::Config(format!("override key {path:?} has an empty segment")));
    }
    let raw = raw.trim();
    let value = match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key is present"),
        Err(_) => Value::String(raw.to_string()),
    };
    let mut cur = table;
    for k in &keys[..keys.len() - 1] {
        let entry = cur.entry(k.to_string()).or_insert_with(|| Value::Table(Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override {path:?}: {k} is not a section")))?;
    }
    cur.insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}
