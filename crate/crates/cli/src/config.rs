//! Layered configuration: built-in profile, then a TOML file, then flags.

use std::path::Path;

use anyhow::{Context, Result};
use lobcal_core::data::{SessionWindow, SynthConfig};
use lobcal_core::model::{ModelParams, RunConfig};
use lobcal_core::objective::{ObjectiveSettings, WeightSettings};
use lobcal_core::search::{FreeParam, GeneticConfig, NelderMeadConfig, ParamBounds};
use lobcal_core::stats::LeeReadyConfig;
use serde::{Deserialize, Serialize};

use crate::UsageError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// T=500, 3 replications, 50 simplex iterations, GA 30x20, 100 surface points.
    Desk,
    /// T=2300, 5 replications, 100 simplex iterations, GA 100x50, 1000 surface points.
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurfaceConfig {
    pub n: usize,
    /// Random subsets drawn for the minimum-region comparison.
    pub region_draws: usize,
}

impl Default for SurfaceConfig {
    fn default() -> Self {
        SurfaceConfig {
            n: 1000,
            region_draws: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrateConfig {
    pub nm_experiments: usize,
    pub ga_experiments: usize,
    /// Parameters the GA searches; the rest stay at `[model]`.
    pub ga_free: Vec<FreeParam>,
    /// Experiment `i` uses seed `seed + i`.
    pub seed: u64,
    pub log_evaluations: bool,
}

impl Default for CalibrateConfig {
    fn default() -> Self {
        CalibrateConfig {
            nm_experiments: 20,
            ga_experiments: 8,
            ga_free: vec![FreeParam::Lambda0, FreeParam::CLambda],
            seed: 1,
            log_evaluations: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AcfConfig {
    pub max_lag: usize,
    pub lee_ready: LeeReadyConfig,
}

impl Default for AcfConfig {
    fn default() -> Self {
        AcfConfig {
            max_lag: 100,
            lee_ready: LeeReadyConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub profile: Option<Profile>,
    pub model: ModelParams,
    pub run: RunConfig,
    pub objective: ObjectiveSettings,
    pub weights: WeightSettings,
    pub nm: NelderMeadConfig,
    pub ga: GeneticConfig,
    pub bounds: ParamBounds,
    pub surface: SurfaceConfig,
    pub calibrate: CalibrateConfig,
    pub acf: AcfConfig,
    pub session: SessionWindow,
    pub synth: SynthConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            profile: None,
            model: ModelParams::default(),
            run: RunConfig {
                tick_size: 0.01,
                ..RunConfig::default()
            },
            objective: ObjectiveSettings::default(),
            weights: WeightSettings::default(),
            nm: NelderMeadConfig::default(),
            ga: GeneticConfig::default(),
            bounds: ParamBounds::default(),
            surface: SurfaceConfig::default(),
            calibrate: CalibrateConfig::default(),
            acf: AcfConfig::default(),
            session: SessionWindow::default(),
            synth: SynthConfig::default(),
        }
    }
}

impl Config {
    pub fn for_profile(profile: Profile) -> Self {
        let mut c = Config {
            profile: Some(profile),
            ..Config::default()
        };
        match profile {
            Profile::Desk => {
                c.run.steps = 500;
                c.objective.replications = 3;
                c.nm.iterations = 50;
                c.ga.population = 30;
                c.ga.generations = 20;
                c.surface.n = 100;
            }
            Profile::Full => {
                c.run.steps = 2300;
                c.objective.replications = 5;
                c.nm.iterations = 100;
                c.ga.population = 100;
                c.ga.generations = 50;
                c.surface.n = 1000;
            }
        }
        c
    }

    /// Resolve the profile (flag, then file, then full) and overlay the file.
    pub fn load(path: Option<&Path>, profile_flag: Option<Profile>) -> Result<Self> {
        let file: toml::Table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                toml::from_str(&text).map_err(|e| UsageError(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        let file_profile = match file.get("profile") {
            Some(v) => Some(Profile::deserialize(v.clone()).map_err(|e| UsageError(format!("profile: {e}")))?),
            None => None,
        };
        let profile = profile_flag.or(file_profile).unwrap_or(Profile::Full);
        let base = toml::Table::try_from(Config::for_profile(profile)).context("serializing defaults")?;
        let merged = merge(base, file);
        let mut config: Config = toml::Value::Table(merged)
            .try_into()
            .map_err(|e| UsageError(format!("config: {e}")))?;
        config.profile = Some(profile);
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let usage = |e: lobcal_core::Error| UsageError(e.to_string());
        self.model.validate().map_err(usage)?;
        self.run.validate().map_err(usage)?;
        self.bounds.validate().map_err(usage)?;
        if self.objective.replications == 0 {
            return Err(UsageError("objective.replications must be at least one".into()).into());
        }
        Ok(())
    }
}

fn merge(mut base: toml::Table, over: toml::Table) -> toml::Table {
    for (k, v) in over {
        match (base.remove(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => {
                base.insert(k, toml::Value::Table(merge(b, o)));
            }
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
    base
}
