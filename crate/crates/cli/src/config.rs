//! TOML run configuration.
//!
//! ```toml
//! seed = 42
//! output_dir = "out"
//! horizon = 168                  # hours, multiple of 24
//! imbalance_accounting = "verbatim"
//! # csv_path = "scenario.csv"    # instead of [scenario]
//!
//! [scenario]                     # synthetic generator
//! [forecasters.production]       # also .consumption, .price
//! [demand_model]
//! [true_demand_model]            # optional, defaults to [demand_model]
//! [policy]
//! [tariff]
//! [cost_model]
//! [calendar]                     # only with csv_path
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use dynprice_core::{
    BaselineTariff, Calendar, CostModel, DemandModelConfig, ForecasterSuite, GeneratorConfig,
    Horizon, ImbalanceAccounting, PolicyConfig, RunConfig, ScenarioSource,
};
use serde::{Deserialize, Serialize};

/// Sweep axis that sets the noise level of all three forecasters.
pub const GAMMA_ALIAS: &str = "forecasters.gamma";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub horizon: i64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv_path: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<GeneratorConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub calendar: Option<Calendar>,
    pub imbalance_accounting: ImbalanceAccounting,
    pub forecasters: ForecasterSuite,
    pub demand_model: DemandModelConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub true_demand_model: Option<DemandModelConfig>,
    pub policy: PolicyConfig,
    pub tariff: BaselineTariff,
    pub cost_model: CostModel,
}

impl Default for FileConfig {
    fn default() -> Self {
        let run = RunConfig::default();
        let ScenarioSource::Generate(scenario) = run.source else {
            unreachable!("the default run generates its scenario")
        };
        Self {
            seed: run.seed,
            output_dir: PathBuf::from("out"),
            horizon: run.horizon.hours(),
            csv_path: None,
            scenario: Some(scenario),
            calendar: None,
            imbalance_accounting: run.imbalance,
            forecasters: run.forecasters,
            demand_model: run.demand,
            true_demand_model: run.true_demand,
            policy: run.policy,
            tariff: run.tariff,
            cost_model: run.cost,
        }
    }
}

impl FileConfig {
    /// Reads and checks a configuration file. A relative `csv_path` is taken
    /// relative to the file, a relative `output_dir` to the working directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let value: toml::Table =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        Self::from_table(value, base).with_context(|| format!("in config {}", path.display()))
    }

    pub fn from_table(table: toml::Table, base: &Path) -> Result<Self> {
        let has_scenario = table.contains_key("scenario");
        let mut config: FileConfig = table.try_into()?;
        if config.csv_path.is_some() {
            if has_scenario {
                bail!("csv_path and [scenario] are mutually exclusive");
            }
            config.scenario = None;
        } else if config.calendar.is_some() {
            bail!("[calendar] applies to csv_path; generated scenarios take [scenario.calendar]");
        }
        if let Some(csv) = &mut config.csv_path {
            if csv.is_relative() {
                *csv = base.join(&*csv);
            }
            if !csv.is_file() {
                bail!("csv_path {} does not exist", csv.display());
            }
        }
        config.run_config()?.validate()?;
        Ok(config)
    }

    pub fn run_config(&self) -> Result<RunConfig> {
        let source = match (&self.csv_path, &self.scenario) {
            (Some(path), _) => ScenarioSource::Csv {
                path: path.clone(),
                calendar: self.calendar.clone().unwrap_or_default(),
            },
            (None, Some(g)) => ScenarioSource::Generate(g.clone()),
            (None, None) => ScenarioSource::Generate(GeneratorConfig::default()),
        };
        Ok(RunConfig {
            horizon: Horizon::new(self.horizon)?,
            source,
            forecasters: self.forecasters.clone(),
            demand: self.demand_model.clone(),
            true_demand: self.true_demand_model.clone(),
            policy: self.policy.clone(),
            tariff: self.tariff,
            cost: self.cost_model,
            imbalance: self.imbalance_accounting,
            seed: self.seed,
        })
    }

    /// Copy with the numeric setting at dotted path `axis` replaced.
    pub fn with_axis(&self, axis: &str, value: f64) -> Result<Self> {
        let mut table = toml::Table::try_from(self)?;
        if axis == GAMMA_ALIAS {
            for kind in ["production", "consumption", "price"] {
                set_numeric(&mut table, &format!("forecasters.{kind}.gamma"), value)?;
            }
        } else {
            set_numeric(&mut table, axis, value)?;
        }
        let mut next: FileConfig = table
            .try_into()
            .with_context(|| format!("setting {axis} = {value}"))?;
        next.policy.exec = self.policy.exec;
        next.run_config()?
            .validate()
            .with_context(|| format!("setting {axis} = {value}"))?;
        Ok(next)
    }
}

fn set_numeric(table: &mut toml::Table, axis: &str, value: f64) -> Result<()> {
    let mut keys = axis.split('.').peekable();
    let mut node = table;
    while let Some(key) = keys.next() {
        if keys.peek().is_none() {
            let slot = node
                .get_mut(key)
                .ok_or_else(|| anyhow!("unknown sweep axis {axis}: no setting {key}"))?;
            *slot = match slot {
                toml::Value::Float(_) => toml::Value::Float(value),
                toml::Value::Integer(_) if value.fract() == 0.0 && value.abs() < 9.0e15 => {
                    toml::Value::Integer(value as i64)
                }
                toml::Value::Integer(_) => bail!("sweep axis {axis} takes integers, got {value}"),
                other => bail!(
                    "sweep axis {axis} is not numeric (found {})",
                    other.type_str()
                ),
            };
            return Ok(());
        }
        node = match node.get_mut(key) {
            Some(toml::Value::Table(t)) => t,
            _ => bail!("unknown sweep axis {axis}: no section {key}"),
        };
    }
    bail!("empty sweep axis")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<FileConfig> {
        FileConfig::from_table(toml::from_str(text).unwrap(), Path::new(""))
    }

    #[test]
    fn bundled_config_matches_defaults() {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.toml");
        assert_eq!(FileConfig::load(&path).unwrap(), FileConfig::default());
    }

    #[test]
    fn empty_file_is_the_default_run() {
        let config = parse("").unwrap();
        assert_eq!(config, FileConfig::default());
        assert_eq!(config.run_config().unwrap(), RunConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(parse("sede = 1").is_err());
        assert!(parse("[policy]\nrestart = 3").is_err());
    }

    #[test]
    fn csv_path_must_exist() {
        let err = parse("csv_path = \"/no/such/file.csv\"").unwrap_err();
        assert!(format!("{err:#}").contains("does not exist"));
    }

    #[test]
    fn csv_path_excludes_generator_section() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("s.csv");
        std::fs::write(&csv, "").unwrap();
        let text = format!(
            "csv_path = {:?}\n[scenario]\nseed = 1",
            csv.display().to_string()
        );
        assert!(parse(&text).is_err());
    }

    #[test]
    fn invalid_values_fail_at_parse_time() {
        assert!(parse("horizon = 25").is_err());
        assert!(parse("[policy]\ngrid_levels = 1").is_err());
    }

    #[test]
    fn axis_replaces_numeric_leaves() {
        let base = FileConfig::default();
        let next = base.with_axis("demand_model.rho", 0.5).unwrap();
        assert_eq!(next.demand_model.rho, 0.5);
        let next = base.with_axis("policy.restarts", 7.0).unwrap();
        assert_eq!(next.policy.restarts, 7);
        let next = base.with_axis(GAMMA_ALIAS, 0.2).unwrap();
        assert_eq!(next.forecasters.production.gamma, 0.2);
        assert_eq!(next.forecasters.consumption.gamma, 0.2);
        assert_eq!(next.forecasters.price.gamma, 0.2);
    }

    #[test]
    fn bad_axes_are_rejected() {
        let base = FileConfig::default();
        assert!(base.with_axis("demand_model.nope", 1.0).is_err());
        assert!(base.with_axis("policy.kind", 1.0).is_err());
        assert!(base.with_axis("policy.restarts", 1.5).is_err());
        assert!(base.with_axis("demand_model.rho", 2.0).is_err());
    }
}
