//! Synthetic weather, occupancy and price profiles.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use deepc_core::TariffProfile;

use crate::building::{N_DISTURBANCES, N_FACADES, N_ZONES, V_AMBIENT, V_GROUND, V_SOLAR};
use crate::SimError;

/// Shape of the synthetic climate. Defaults describe a central-European
/// site: annual mean 10 °C, ±10 °C seasonal and ±5 °C diurnal swing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeatherParams {
    pub ambient_mean: f64,
    pub ambient_seasonal: f64,
    pub ambient_diurnal: f64,
    /// Standard deviation of the hourly ambient noise (K).
    pub ambient_noise: f64,
    pub ground_mean: f64,
    pub ground_seasonal: f64,
    pub ground_noise: f64,
    /// Peak irradiance in summer and winter (W/m²) on a south facade.
    pub solar_summer: f64,
    pub solar_winter: f64,
    /// Gains while occupied and otherwise (W/m²).
    pub gains_occupied: f64,
    pub gains_idle: f64,
    pub gains_noise: f64,
}

impl Default for WeatherParams {
    fn default() -> Self {
        Self {
            ambient_mean: 10.0,
            ambient_seasonal: 10.0,
            ambient_diurnal: 5.0,
            ambient_noise: 1.0,
            ground_mean: 10.0,
            ground_seasonal: 3.0,
            ground_noise: 0.1,
            solar_summer: 800.0,
            solar_winter: 250.0,
            gains_occupied: 10.0,
            gains_idle: 2.0,
            gains_noise: 0.5,
        }
    }
}

/// Hourly disturbance channels: gains (5, W/m²), ambient (°C), ground (°C),
/// solar per facade (4, W/m²).
#[derive(Debug, Clone, PartialEq)]
pub struct DisturbanceProfile {
    /// `11 × horizon`.
    pub values: DMatrix<f64>,
}

impl DisturbanceProfile {
    pub fn horizon(&self) -> usize {
        self.values.ncols()
    }

    pub fn at(&self, hour: usize) -> DVector<f64> {
        self.values.column(hour).into_owned()
    }

    pub fn internal_gains(&self, zone: usize) -> Vec<f64> {
        self.values.row(zone).iter().copied().collect()
    }

    pub fn ambient(&self) -> Vec<f64> {
        self.values.row(V_AMBIENT).iter().copied().collect()
    }

    pub fn ground(&self) -> Vec<f64> {
        self.values.row(V_GROUND).iter().copied().collect()
    }

    pub fn solar(&self, facade: usize) -> Vec<f64> {
        self.values.row(V_SOLAR + facade).iter().copied().collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["hour".to_string()];
        header.extend((1..=N_ZONES).map(|z| format!("gains_{z}_w_m2")));
        header.push("ambient_c".into());
        header.push("ground_c".into());
        header.extend((1..=N_FACADES).map(|f| format!("solar_{f}_w_m2")));
        w.write_record(&header)?;
        for h in 0..self.horizon() {
            let mut row = vec![h.to_string()];
            row.extend(self.values.column(h).iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn day_rng(day: u32, seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ u64::from(day))
}

/// Facade orientation factor and the hour of its peak: north, east, south,
/// west.
const FACADES: [(f64, f64); N_FACADES] = [(0.25, 12.0), (0.7, 9.0), (1.0, 12.0), (0.7, 15.0)];

/// One day (24 hourly samples) of disturbances. Deterministic in
/// `(day_of_year, seed)`.
pub fn generate_disturbances(day_of_year: u32, seed: u64) -> Result<DisturbanceProfile, SimError> {
    generate_disturbances_with(&WeatherParams::default(), day_of_year, seed)
}

pub fn generate_disturbances_with(
    w: &WeatherParams,
    day_of_year: u32,
    seed: u64,
) -> Result<DisturbanceProfile, SimError> {
    if !(1..=365).contains(&day_of_year) {
        return Err(SimError::InvalidDay(day_of_year));
    }
    let mut rng = day_rng(day_of_year, seed);
    let d = day_of_year as f64;
    let season = (2.0 * PI * (d - 15.0) / 365.0).cos(); // +1 mid-January
    let summer = (2.0 * PI * (d - 172.0) / 365.0).cos(); // +1 at the solstice
    let daylight = 12.0 + 4.0 * summer;
    let sunrise = 12.0 - daylight / 2.0;
    let peak = 0.5 * (w.solar_summer + w.solar_winter) + 0.5 * (w.solar_summer - w.solar_winter) * summer;
    let weekday = (day_of_year - 1) % 7 < 5;
    let amb_noise = Normal::new(0.0, w.ambient_noise.max(0.0)).expect("finite std");
    let gnd_noise = Normal::new(0.0, w.ground_noise.max(0.0)).expect("finite std");
    let gain_noise = Normal::new(0.0, w.gains_noise.max(0.0)).expect("finite std");

    let mut values = DMatrix::zeros(N_DISTURBANCES, 24);
    for h in 0..24 {
        let hour = h as f64 + 0.5;
        let occupied = weekday && (8..18).contains(&h);
        for z in 0..N_ZONES {
            let base = if occupied { w.gains_occupied } else { w.gains_idle };
            values[(z, h)] = (base + gain_noise.sample(&mut rng)).max(0.0);
        }
        let diurnal = (2.0 * PI * (hour - 15.0) / 24.0).cos();
        values[(V_AMBIENT, h)] = w.ambient_mean - w.ambient_seasonal * season
            + w.ambient_diurnal * diurnal
            + amb_noise.sample(&mut rng);
        values[(V_GROUND, h)] = w.ground_mean - w.ground_seasonal * (2.0 * PI * (d - 45.0) / 365.0).cos()
            + gnd_noise.sample(&mut rng);
        let sun = ((hour - sunrise) / daylight).clamp(0.0, 1.0);
        let elevation = (PI * sun).sin();
        let cloud: f64 = rng.random_range(0.3..1.0);
        for (f, &(factor, peak_hour)) in FACADES.iter().enumerate() {
            let facing = 0.6 + 0.4 * (PI * (hour - peak_hour) / 12.0).cos();
            let local: f64 = rng.random_range(0.85..1.0);
            let s = if sun > 0.0 && sun < 1.0 { peak * factor * elevation * facing * cloud * local } else { 0.0 };
            values[(V_SOLAR + f, h)] = s.max(0.0);
        }
    }
    Ok(DisturbanceProfile { values })
}

/// Day of year (1..=365) of absolute hour `hour`, counting from 1 January
/// 00:00 and wrapping every 365 days.
pub fn day_of_year(hour: usize) -> u32 {
    ((hour / 24) % 365) as u32 + 1
}

/// Disturbances for `len` hours starting at absolute hour `start`.
pub fn disturbance_window(w: &WeatherParams, start: usize, len: usize, seed: u64) -> Result<DMatrix<f64>, SimError> {
    let mut out = DMatrix::zeros(N_DISTURBANCES, len);
    let mut cached: Option<(u32, DisturbanceProfile)> = None;
    for k in 0..len {
        let h = start + k;
        let day = day_of_year(h);
        if cached.as_ref().map(|c| c.0) != Some(day) {
            cached = Some((day, generate_disturbances_with(w, day, seed)?));
        }
        let profile = &cached.as_ref().expect("just filled").1;
        out.set_column(k, &profile.values.column(h % 24));
    }
    Ok(out)
}

/// Two-level price profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TariffParams {
    pub day_price: f64,
    pub night_price: f64,
    /// Day price applies on `[day_start, day_end)`.
    pub day_start: usize,
    pub day_end: usize,
}

impl Default for TariffParams {
    fn default() -> Self {
        Self { day_price: 0.27, night_price: 0.18, day_start: 7, day_end: 21 }
    }
}

/// Hourly prices (CHF/kWh). The profile has no random part; `seed` is
/// accepted for interface symmetry with the weather generator.
pub fn generate_tariff(_seed: u64) -> TariffProfile {
    generate_tariff_with(&TariffParams::default()).expect("default prices are valid")
}

pub fn generate_tariff_with(t: &TariffParams) -> Result<TariffProfile, SimError> {
    if t.day_start > t.day_end || t.day_end > 24 {
        return Err(SimError::InvalidTariff(format!("day window [{}, {})", t.day_start, t.day_end)));
    }
    TariffProfile::two_level(t.day_price, t.night_price, t.day_start, t.day_end)
        .map_err(|e| SimError::InvalidTariff(e.to_string()))
}
