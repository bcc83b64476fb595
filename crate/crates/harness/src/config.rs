use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::path::Path;

use deepc_core::{ComfortSchedule, DeepcConfig, TariffProfile};
use deepc_sim::{generate_tariff_with, BatteryParams, BuildingParams, RbcConfig, TariffParams, WeatherParams};
use serde::{Deserialize, Serialize};

use crate::HarnessError;

pub const HOURS_PER_YEAR: usize = 365 * 24;

/// Everything that defines a closed-loop experiment. Loaded from TOML; every
/// key is optional and falls back to [`ScenarioConfig::default`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    /// First day (1..=365) of the evaluated episode.
    pub start_day: u32,
    pub horizon_days: usize,
    /// Rule-based hours simulated before the episode starts; ageing is off.
    pub warmup_hours: usize,
    pub sample_time_h: f64,
    pub initial_soc: f64,
    /// State-of-charge window held by the battery management system.
    pub bms_soc_window: (f64, f64),
    /// Uniform initial temperature of every building node (°C).
    pub initial_temperature: f64,
    /// Length of the data-collection run (h).
    pub collection_hours: usize,
    pub collection_start_day: u32,
    /// Upper bound on the plant order used in the data-length check.
    pub n_bound: usize,
    pub prbs_order: u8,
    pub prbs_hold: usize,
    pub building: BuildingParams,
    pub battery: BatteryParams,
    pub weather: WeatherParams,
    pub tariff: TariffParams,
    pub comfort: ComfortSchedule,
    pub deepc: DeepcConfig,
    pub rbc: RbcConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            start_day: 15,
            horizon_days: 10,
            warmup_hours: 48,
            sample_time_h: 1.0,
            initial_soc: 0.5,
            bms_soc_window: (0.2, 0.95),
            initial_temperature: 21.0,
            collection_hours: 4416,
            collection_start_day: 274,
            n_bound: 26,
            prbs_order: 20,
            prbs_hold: 1,
            building: BuildingParams::default(),
            battery: BatteryParams::default(),
            weather: WeatherParams::default(),
            tariff: TariffParams::default(),
            comfort: ComfortSchedule::default(),
            deepc: DeepcConfig::default(),
            rbc: RbcConfig::default(),
        }
    }
}

impl ScenarioConfig {
    /// Reduced problem size that runs on a laptop in minutes: a shorter past
    /// window, day-long PRBS chips during collection and a lighter `g`
    /// penalty.
    pub fn desk_scale() -> Self {
        let mut cfg = Self { collection_start_day: 305, prbs_hold: 24, ..Self::default() };
        cfg.deepc.t_ini = 8;
        cfg.deepc.lambda_g = 300.0;
        cfg
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serialises")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.horizon_days == 0 {
            return bad("horizon_days must be at least 1".into());
        }
        if !(1..=365).contains(&self.start_day) || !(1..=365).contains(&self.collection_start_day) {
            return bad("start days must lie in 1..=365".into());
        }
        if self.sample_time_h != 1.0 {
            return bad(format!("only hourly sampling is supported, got {} h", self.sample_time_h));
        }
        let window = self.deepc.t_ini + self.deepc.t_f;
        if self.collection_hours < window {
            return bad(format!("collection_hours {} shorter than T_ini + T_f = {window}", self.collection_hours));
        }
        if self.warmup_hours < self.deepc.t_ini {
            return bad(format!("warmup_hours {} shorter than T_ini {}", self.warmup_hours, self.deepc.t_ini));
        }
        if !(0.0..=1.0).contains(&self.initial_soc) {
            return bad("initial_soc must lie in [0, 1]".into());
        }
        let (lo, hi) = self.bms_soc_window;
        if !(0.0 <= lo && lo < hi && hi <= 1.0) {
            return bad(format!("bms_soc_window ({lo}, {hi}) must satisfy 0 <= lo < hi <= 1"));
        }
        self.deepc.validate()?;
        self.comfort.validate()?;
        self.rbc.validate()?;
        self.tariff_profile()?;
        Ok(())
    }

    pub fn tariff_profile(&self) -> Result<TariffProfile, HarnessError> {
        Ok(generate_tariff_with(&self.tariff)?)
    }

    pub fn horizon_hours(&self) -> usize {
        self.horizon_days * 24
    }

    /// Absolute hour of the first episode step. Offset by one year so the
    /// warm-up never needs negative hours; weather and prices repeat yearly.
    pub fn episode_start_hour(&self) -> usize {
        HOURS_PER_YEAR + (self.start_day as usize - 1) * 24
    }

    pub fn collection_start_hour(&self) -> usize {
        HOURS_PER_YEAR + (self.collection_start_day as usize - 1) * 24
    }

    /// Identifies the scenario independent of the controller; used to refuse
    /// comparisons across different experiments.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.to_toml().hash(&mut h);
        h.finish()
    }
}
