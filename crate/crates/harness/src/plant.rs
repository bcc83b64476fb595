//! The simulated energy hub: building, heat pump and battery stepped together
//! on the hourly grid.

use deepc_sim::building::{N_DISTURBANCES, N_FACADES, N_ZONES};
use deepc_sim::weather::day_of_year;
use deepc_sim::{
    battery_step, bms_limit, building_step, generate_disturbances_with, heat_pump_output, synthetic_building, BatteryParams,
    BatteryState, BuildingModel, ClampEvent, DisturbanceProfile, WeatherParams,
};
use nalgebra::{DMatrix, DVector};

use crate::{HarnessError, ScenarioConfig};

/// Inputs the hub channel layout expects, in order: radiators, blinds, heat
/// pump, battery current, then the disturbances.
pub const N_HUB_INPUTS: usize = N_ZONES + N_FACADES + 2 + N_DISTURBANCES;
/// Zone temperatures, heat-pump thermal output, battery voltage.
pub const N_HUB_OUTPUTS: usize = N_ZONES + 2;
pub const IDX_HEAT_PUMP: usize = N_ZONES + N_FACADES;
pub const IDX_BATTERY: usize = IDX_HEAT_PUMP + 1;
pub const IDX_DISTURBANCE: usize = IDX_BATTERY + 1;
pub const OUT_HEAT_PUMP: usize = N_ZONES;
pub const OUT_BATTERY: usize = N_ZONES + 1;

/// Manipulated inputs for one hour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Actuation {
    /// Radiator heat per zone (kW).
    pub radiators: [f64; N_ZONES],
    /// Blind opening per facade, 1 fully open.
    pub blinds: [f64; N_FACADES],
    /// Heat-pump electrical input (kW).
    pub heat_pump: f64,
    /// Battery current (A), positive when discharging.
    pub battery: f64,
}

impl Actuation {
    pub fn idle() -> Self {
        Self { radiators: [0.0; N_ZONES], blinds: [0.0; N_FACADES], heat_pump: 0.0, battery: 0.0 }
    }

    /// Read the manipulated part of a hub input vector.
    pub fn from_hub(u: &[f64]) -> Self {
        let mut a = Self::idle();
        a.radiators.copy_from_slice(&u[..N_ZONES]);
        a.blinds.copy_from_slice(&u[N_ZONES..IDX_HEAT_PUMP]);
        a.heat_pump = u[IDX_HEAT_PUMP];
        a.battery = u[IDX_BATTERY];
        a
    }
}

/// What one plant step produced.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantStep {
    /// Hub input vector applied during the hour, disturbances included.
    pub inputs: DVector<f64>,
    /// Outputs at the end of the hour.
    pub outputs: DVector<f64>,
    /// Net grid power (kW), positive when importing.
    pub power: f64,
    pub clamp: Option<ClampEvent>,
}

#[derive(Debug, Clone)]
pub struct Plant {
    model: BuildingModel,
    x: DVector<f64>,
    battery_params: BatteryParams,
    battery: BatteryState,
    bms_window: (f64, f64),
    weather: WeatherParams,
    seed: u64,
    day: Option<(u32, DisturbanceProfile)>,
    hour: usize,
    outputs: DVector<f64>,
    pub ageing: bool,
}

impl Plant {
    /// Plant at absolute hour `hour` with every building node at the
    /// configured initial temperature.
    pub fn new(cfg: &ScenarioConfig, hour: usize) -> Result<Self, HarnessError> {
        let model = synthetic_building(&cfg.building)?;
        let x = DVector::from_element(model.n_states(), cfg.initial_temperature);
        let battery = BatteryState::fresh(&cfg.battery, cfg.initial_soc);
        let mut outputs = DVector::zeros(N_HUB_OUTPUTS);
        outputs.rows_mut(0, N_ZONES).copy_from(&model.output(&x));
        outputs[OUT_BATTERY] = battery.v_oc;
        Ok(Self {
            model,
            x,
            battery_params: cfg.battery.clone(),
            battery,
            bms_window: cfg.bms_soc_window,
            weather: cfg.weather.clone(),
            seed: cfg.seed,
            day: None,
            hour,
            outputs,
            ageing: false,
        })
    }

    pub fn hour(&self) -> usize {
        self.hour
    }

    pub fn battery(&self) -> &BatteryState {
        &self.battery
    }

    /// Most recent outputs (the initial ones before the first step).
    pub fn outputs(&self) -> &DVector<f64> {
        &self.outputs
    }

    pub fn zone_temperatures(&self) -> Vec<f64> {
        self.outputs.rows(0, N_ZONES).iter().copied().collect()
    }

    /// Disturbances during absolute hour `hour`.
    pub fn disturbance(&mut self, hour: usize) -> Result<DVector<f64>, HarnessError> {
        let day = day_of_year(hour);
        if self.day.as_ref().map(|d| d.0) != Some(day) {
            self.day = Some((day, generate_disturbances_with(&self.weather, day, self.seed)?));
        }
        Ok(self.day.as_ref().expect("cached").1.at(hour % 24))
    }

    /// Perfect forecast of the disturbances for `len` hours from `start`.
    pub fn forecast(&mut self, start: usize, len: usize) -> Result<DMatrix<f64>, HarnessError> {
        let mut out = DMatrix::zeros(N_DISTURBANCES, len);
        for k in 0..len {
            out.set_column(k, &self.disturbance(start + k)?);
        }
        Ok(out)
    }

    /// Apply `act` for one hour. The battery current actually drawn may be
    /// smaller than requested near the ends of the SoC window; the applied
    /// value is what gets reported.
    pub fn step(&mut self, act: &Actuation) -> Result<PlantStep, HarnessError> {
        let i_b = bms_limit(&self.battery, act.battery, 1.0, self.bms_window);
        let v = self.disturbance(self.hour)?;
        let mut u_s = DVector::zeros(N_ZONES + N_FACADES);
        u_s.rows_mut(0, N_ZONES).copy_from_slice(&act.radiators);
        u_s.rows_mut(N_ZONES, N_FACADES).copy_from_slice(&act.blinds);
        let (x, y_s) = building_step(&self.model, &self.x, &u_s, &v, 1.0)?;
        let y_h = heat_pump_output(act.heat_pump)?;
        let b = battery_step(&self.battery_params, &self.battery, i_b, 1.0, self.ageing)?;

        let mut inputs = DVector::zeros(N_HUB_INPUTS);
        inputs.rows_mut(0, N_ZONES + N_FACADES).copy_from(&u_s);
        inputs[IDX_HEAT_PUMP] = act.heat_pump;
        inputs[IDX_BATTERY] = i_b;
        inputs.rows_mut(IDX_DISTURBANCE, N_DISTURBANCES).copy_from(&v);
        let mut outputs = DVector::zeros(N_HUB_OUTPUTS);
        outputs.rows_mut(0, N_ZONES).copy_from(&y_s);
        outputs[OUT_HEAT_PUMP] = y_h;
        outputs[OUT_BATTERY] = b.y_b;
        let power = act.heat_pump - b.y_b * i_b / 1000.0;

        self.x = x;
        self.battery = b.state;
        self.hour += 1;
        self.outputs = outputs.clone();
        Ok(PlantStep { inputs, outputs, power, clamp: b.clamp })
    }
}
