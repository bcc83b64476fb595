//! Shepherd battery pack with cycle-counting capacity fade.
//!
//! Current is positive when discharging. State of charge is a fraction of
//! the present (faded) capacity. No coulombic loss, self-discharge or
//! calendar ageing is modelled.

use serde::{Deserialize, Serialize};

use crate::SimError;

/// Below this SoC the `1/soc` term of the voltage curve is frozen.
pub const SOC_GUARD: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatteryParams {
    /// Constant voltage term E0 (V).
    pub e0: f64,
    /// Polarisation term K (V).
    pub k: f64,
    /// Exponential zone amplitude A (V).
    pub a_exp: f64,
    /// Exponential zone rate B (1/Ah).
    pub b_exp: f64,
    /// Nominal capacity (Ah).
    pub q_nom: f64,
    /// Internal resistance of a fresh pack (Ω).
    pub r0_nom: f64,
    /// Relative resistance growth per unit capacity loss.
    pub k_r: f64,
    /// Capacity loss per equivalent full cycle (fraction).
    pub k_fade: f64,
    /// Hard current limit (A).
    pub i_max: f64,
}

impl Default for BatteryParams {
    fn default() -> Self {
        Self {
            e0: 64.14,
            k: 0.3,
            a_exp: 4.0,
            b_exp: 0.075,
            q_nom: 40.0,
            r0_nom: 0.05,
            k_r: 0.5,
            k_fade: 2.934e-5,
            i_max: 40.0,
        }
    }
}

impl BatteryParams {
    /// Open-circuit voltage at `soc`.
    pub fn v_oc(&self, soc: f64) -> f64 {
        let soc_eff = soc.max(SOC_GUARD);
        self.e0 - self.k / soc_eff + self.a_exp * (-self.b_exp * (1.0 - soc) * self.q_nom).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryState {
    pub soc: f64,
    /// Present capacity (Ah).
    pub capacity: f64,
    /// Present internal resistance (Ω).
    pub r0: f64,
    pub v_oc: f64,
    /// Cumulative |i|·dt (Ah).
    pub throughput: f64,
    /// Equivalent full cycles.
    pub cycles: f64,
    /// Fractional capacity loss.
    pub capacity_loss: f64,
}

impl BatteryState {
    pub fn fresh(params: &BatteryParams, soc: f64) -> Self {
        Self {
            soc,
            capacity: params.q_nom,
            r0: params.r0_nom,
            v_oc: params.v_oc(soc),
            throughput: 0.0,
            cycles: 0.0,
            capacity_loss: 0.0,
        }
    }

    /// Terminal voltage under current `i`.
    pub fn terminal_voltage(&self, i: f64) -> f64 {
        self.v_oc - self.r0 * i
    }
}

/// Reported when the charge balance would leave `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClampEvent {
    /// SoC before clamping.
    pub requested_soc: f64,
    pub clamped_soc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatteryStep {
    pub state: BatteryState,
    /// Terminal voltage during the step (V).
    pub y_b: f64,
    pub clamp: Option<ClampEvent>,
}

/// Advance the pack by `dt` hours at current `i`.
///
/// With `ageing` off, throughput and fade are left untouched (used during
/// data collection). The terminal voltage is evaluated on the post-step
/// state, matching outputs that are measured at the end of the interval.
pub fn battery_step(
    params: &BatteryParams,
    state: &BatteryState,
    i: f64,
    dt: f64,
    ageing: bool,
) -> Result<BatteryStep, SimError> {
    if !i.is_finite() || i.abs() > params.i_max {
        return Err(SimError::CurrentLimit { current: i, limit: params.i_max });
    }
    let mut next = state.clone();
    let requested = state.soc - i * dt / state.capacity;
    next.soc = requested.clamp(0.0, 1.0);
    let clamp = (next.soc != requested).then_some(ClampEvent { requested_soc: requested, clamped_soc: next.soc });
    if ageing {
        next.throughput += i.abs() * dt;
        next = update_ageing(params, &next);
    }
    next.v_oc = params.v_oc(next.soc);
    let y_b = next.terminal_voltage(i);
    Ok(BatteryStep { state: next, y_b, clamp })
}

/// Battery-management current limit: the largest part of `i` that keeps
/// the state of charge inside `window` over a step of `dt` hours. A pack
/// already outside the window may only move back towards it.
pub fn bms_limit(state: &BatteryState, i: f64, dt: f64, window: (f64, f64)) -> f64 {
    let per_amp = dt / state.capacity;
    let max_discharge = ((state.soc - window.0) / per_amp).max(0.0);
    let max_charge = ((window.1 - state.soc) / per_amp).max(0.0);
    i.clamp(-max_charge, max_discharge)
}

/// Recompute cycles, fade and resistance from the throughput.
pub fn update_ageing(params: &BatteryParams, state: &BatteryState) -> BatteryState {
    let mut s = state.clone();
    s.cycles = s.throughput / (2.0 * params.q_nom);
    s.capacity_loss = params.k_fade * s.cycles;
    s.capacity = params.q_nom * (1.0 - s.capacity_loss);
    s.r0 = params.r0_nom * (1.0 + params.k_r * s.capacity_loss);
    s
}
