//! Scenario configuration files (TOML).
//!
//! Relative data paths are resolved against the directory holding the config
//! file. Per-MWh costs are fractions of the tariff `p_g` unless
//! `units = "absolute"` is set in `[costs]`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use windgame_core::{
    BinSpec, ChainConfig, ColumnMap, CostParams, PowerCurve, StrategyGrid, DEFAULT_DEMAND_MEAN,
};

use crate::error::{CliError, Stage};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub data: DataConfig,
    #[serde(default)]
    pub bins: BinsConfig,
    #[serde(default)]
    pub chain: ChainSection,
    #[serde(default)]
    pub curve: CurveConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub costs: CostsConfig,
    pub sweep: SweepConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesSource {
    pub path: PathBuf,
    #[serde(default = "default_timestamp_column")]
    pub timestamp: String,
    pub value: String,
}

fn default_timestamp_column() -> String {
    "timestamp".into()
}

impl SeriesSource {
    pub fn columns(&self) -> ColumnMap {
        ColumnMap::new(&self.timestamp, &self.value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub w1: SeriesSource,
    pub w2: SeriesSource,
    pub demand: SeriesSource,
    /// Mean local demand after scaling, MW.
    #[serde(default = "default_demand_mean")]
    pub demand_mean: f64,
}

fn default_demand_mean() -> f64 {
    DEFAULT_DEMAND_MEAN
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BinsConfig {
    pub wind_width: f64,
    pub wind_origin: f64,
    pub wind_max: f64,
    pub demand_width: f64,
    pub demand_origin: f64,
    pub demand_max: f64,
    pub min_count: u64,
}

impl Default for BinsConfig {
    fn default() -> Self {
        Self {
            wind_width: 1.0,
            wind_origin: 0.0,
            wind_max: 50.0,
            demand_width: 5.0,
            demand_origin: 0.0,
            demand_max: 1000.0,
            min_count: 10,
        }
    }
}

impl BinsConfig {
    pub fn wind_spec(&self) -> windgame_core::Result<BinSpec> {
        BinSpec::new(self.wind_width, self.wind_origin, self.wind_max)
    }

    pub fn demand_spec(&self) -> windgame_core::Result<BinSpec> {
        BinSpec::new(self.demand_width, self.demand_origin, self.demand_max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChainSection {
    pub samples: usize,
    pub realisations: usize,
    pub burn_in: f64,
    pub seed: u64,
}

impl Default for ChainSection {
    fn default() -> Self {
        let desk = Profile::Desk;
        Self {
            samples: desk.samples(),
            realisations: desk.realisations(),
            burn_in: 0.2,
            seed: 2017,
        }
    }
}

/// Either a CSV of `(wind, per-unit output)` points to fit, or explicit parameters.
/// With neither, the built-in E-82 fit is used.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveConfig {
    pub points: Option<PathBuf>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub p_n_max: f64,
    pub step: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            p_n_max: Profile::Desk.p_n_max(),
            step: Profile::Desk.step(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CostUnits {
    /// Per-MWh costs are multiples of `p_g`.
    #[default]
    Fraction,
    Absolute,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CostsConfig {
    pub units: CostUnits,
    pub p_g: f64,
    pub p_t: f64,
    pub c_g1: f64,
    pub c_g2: f64,
    /// Total line cost over the horizon.
    pub c_t: Option<f64>,
    /// Line cost per retained hour; multiplied by the realisation length.
    pub c_t_per_hour: Option<f64>,
}

impl Default for CostsConfig {
    fn default() -> Self {
        Self {
            units: CostUnits::Fraction,
            p_g: CostParams::DEFAULT_TARIFF,
            p_t: 0.26,
            c_g1: 0.30,
            c_g2: 0.28,
            c_t: None,
            c_t_per_hour: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParam {
    #[serde(rename = "c_g1")]
    CG1,
    #[serde(rename = "c_g2")]
    CG2,
    #[serde(rename = "p_t")]
    PT,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::CG1 => "c_g1",
            SweepParam::CG2 => "c_g2",
            SweepParam::PT => "p_t",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub param: SweepParam,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl SweepConfig {
    /// Sweep values in config units, `start, start + step, ...` up to `stop`
    /// (inclusive, allowing for rounding).
    pub fn values(&self) -> Vec<f64> {
        if self.stop == self.start {
            return vec![self.start];
        }
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        // rounded so that printed values read 0.44 rather than 0.44000000000000006
        (0..count)
            .map(|k| ((self.start + k as f64 * self.step) * 1e10).round() / 1e10)
            .collect()
    }

    fn validate(&self) -> Result<(), String> {
        let finite = self.start.is_finite() && self.stop.is_finite() && self.step.is_finite();
        if !finite {
            return Err("sweep start, stop and step must be finite".into());
        }
        if self.stop < self.start {
            return Err(format!(
                "sweep range is empty: stop {} is below start {}",
                self.stop, self.start
            ));
        }
        if self.stop > self.start && self.step <= 0.0 {
            return Err(format!("sweep step must be positive, got {}", self.step));
        }
        if self.start < 0.0 {
            return Err(format!("sweep values must be nonnegative, start is {}", self.start));
        }
        Ok(())
    }
}

/// Run sizes for the chain and the strategy grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// Small enough for a laptop in minutes.
    Desk,
    /// Full size: 170 chains of 50,000 states on a 0.5 MW grid up to 500.5 MW.
    Paper,
}

impl Profile {
    pub fn samples(self) -> usize {
        match self {
            Profile::Desk => 5_000,
            Profile::Paper => 50_000,
        }
    }

    pub fn realisations(self) -> usize {
        match self {
            Profile::Desk => 10,
            Profile::Paper => 170,
        }
    }

    pub fn step(self) -> f64 {
        match self {
            Profile::Desk => 5.0,
            Profile::Paper => 0.5,
        }
    }

    pub fn p_n_max(self) -> f64 {
        match self {
            Profile::Desk => 100.0,
            Profile::Paper => 500.5,
        }
    }
}

impl ScenarioConfig {
    /// Reads and validates a config file, resolving relative paths against its directory.
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::new(Stage::Config, format!("cannot read {}: {e}", path.display()))
        })?;
        let mut config = Self::from_toml(&text)
            .map_err(|e| CliError::new(Stage::Config, format!("{}: {}", path.display(), e.message)))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        config.resolve_paths(base);
        Ok(config)
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let config: Self =
            toml::from_str(text).map_err(|e| CliError::new(Stage::Config, e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        for source in [&mut self.data.w1, &mut self.data.w2, &mut self.data.demand] {
            if source.path.is_relative() {
                source.path = base.join(&source.path);
            }
        }
        if let Some(points) = &mut self.curve.points {
            if points.is_relative() {
                *points = base.join(&*points);
            }
        }
    }

    pub fn apply_profile(&mut self, profile: Profile) {
        self.chain.samples = profile.samples();
        self.chain.realisations = profile.realisations();
        self.grid.step = profile.step();
        self.grid.p_n_max = profile.p_n_max();
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| CliError::new(Stage::Config, msg);
        self.sweep.validate().map_err(bad)?;
        if !(self.data.demand_mean > 0.0) {
            return Err(bad(format!(
                "demand_mean must be positive, got {}",
                self.data.demand_mean
            )));
        }
        self.bins.wind_spec().map_err(|e| bad(e.to_string()))?;
        self.bins.demand_spec().map_err(|e| bad(e.to_string()))?;
        if self.bins.min_count == 0 {
            return Err(bad("min_count must be at least 1".into()));
        }
        self.chain_config().map_err(|e| bad(e.to_string()))?;
        self.strategy_grid().map_err(|e| bad(e.to_string()))?;
        match (&self.curve.points, self.curve.alpha, self.curve.beta) {
            (Some(_), None, None) | (None, None, None) => {}
            (None, Some(a), Some(b)) => {
                PowerCurve::new(a, b).map_err(|e| bad(e.to_string()))?;
            }
            _ => {
                return Err(bad(
                    "[curve] takes either `points` or both `alpha` and `beta`".into(),
                ))
            }
        }
        if self.costs.c_t.is_some() && self.costs.c_t_per_hour.is_some() {
            return Err(bad("set only one of c_t and c_t_per_hour".into()));
        }
        for value in self.sweep.values() {
            self.costs_at(value, 1).validate().map_err(|e| bad(e.to_string()))?;
        }
        Ok(())
    }

    pub fn chain_config(&self) -> windgame_core::Result<ChainConfig> {
        ChainConfig::new(
            self.chain.samples,
            self.chain.realisations,
            self.chain.burn_in,
            self.chain.seed,
        )
    }

    pub fn strategy_grid(&self) -> windgame_core::Result<StrategyGrid> {
        StrategyGrid::new(self.grid.p_n_max, self.grid.step)
    }

    /// Absolute cost parameters with the swept parameter set to `sweep_value`
    /// (config units), for a realisation of `retained_hours` hours.
    pub fn costs_at(&self, sweep_value: f64, retained_hours: usize) -> CostParams {
        let c = &self.costs;
        let scale = match c.units {
            CostUnits::Fraction => c.p_g,
            CostUnits::Absolute => 1.0,
        };
        let mut out = CostParams {
            p_g: c.p_g,
            p_t: c.p_t * scale,
            c_g1: c.c_g1 * scale,
            c_g2: c.c_g2 * scale,
            c_t: match (c.c_t, c.c_t_per_hour) {
                (Some(total), _) => total,
                (None, Some(rate)) => rate * retained_hours as f64,
                (None, None) => 0.0,
            },
        };
        let v = sweep_value * scale;
        match self.sweep.param {
            SweepParam::CG1 => out.c_g1 = v,
            SweepParam::CG2 => out.c_g2 = v,
            SweepParam::PT => out.p_t = v,
        }
        out
    }
}
