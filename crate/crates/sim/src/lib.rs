//! Plant simulator for the energy hub: bilinear RC building, Shepherd
//! battery with capacity fade, static heat pump, synthetic weather and
//! tariffs, and the rule-based controllers used for data collection and as
//! the comparison baseline.

pub mod battery;
pub mod building;
pub mod rbc;
pub mod weather;

use thiserror::Error;

pub use battery::{battery_step, bms_limit, update_ageing, BatteryParams, BatteryState, BatteryStep, ClampEvent};
pub use building::{building_step, building_step_with, synthetic_building, BuildingModel, BuildingParams};
pub use rbc::{
    prbs_next, rbc_battery_control, rbc_blinds, rbc_building_control, PrbsGenerator, RbcConfig, RbcMode,
};
pub use weather::{
    disturbance_window, generate_disturbances, generate_disturbances_with, generate_tariff, generate_tariff_with,
    DisturbanceProfile, TariffParams, WeatherParams,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("state {state} left the sane range with value {value}")]
    StateBlowUp { state: usize, value: f64 },
    #[error("battery current {current} A exceeds the {limit} A limit")]
    CurrentLimit { current: f64, limit: f64 },
    #[error("heat pump input must be nonnegative, got {0} kW")]
    NegativeInput(f64),
    #[error("shift register seeded with zero")]
    ZeroRegister,
    #[error("no maximal-length taps for register order {0}")]
    UnsupportedOrder(u8),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("state matrix is not Hurwitz (max real part {0})")]
    NotHurwitz(f64),
    #[error("day of year {0} outside 1..=365")]
    InvalidDay(u32),
    #[error("invalid tariff: {0}")]
    InvalidTariff(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// Coefficient of performance of the heat pump.
pub const DEFAULT_COP: f64 = 3.0;

/// Thermal output (kW) for electrical input `u_h` (kW).
pub fn heat_pump_output(u_h: f64) -> Result<f64, SimError> {
    heat_pump_output_with(u_h, DEFAULT_COP)
}

pub fn heat_pump_output_with(u_h: f64, cop: f64) -> Result<f64, SimError> {
    if u_h < 0.0 || u_h.is_nan() {
        return Err(SimError::NegativeInput(u_h));
    }
    Ok(cop * u_h)
}
