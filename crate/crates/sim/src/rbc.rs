//! Rule-based controllers for data collection and as the baseline.

use serde::{Deserialize, Serialize};

use crate::SimError;

/// Maximal-length Fibonacci LFSR taps (1-based bit positions).
const TAPS: [(u8, &[u8]); 22] = [
    (3, &[3, 2]),
    (4, &[4, 3]),
    (5, &[5, 3]),
    (6, &[6, 5]),
    (7, &[7, 6]),
    (8, &[8, 6, 5, 4]),
    (9, &[9, 5]),
    (10, &[10, 7]),
    (11, &[11, 9]),
    (12, &[12, 6, 4, 1]),
    (13, &[13, 4, 3, 1]),
    (14, &[14, 5, 3, 1]),
    (15, &[15, 14]),
    (16, &[16, 15, 13, 4]),
    (17, &[17, 14]),
    (18, &[18, 11]),
    (19, &[19, 6, 2, 1]),
    (20, &[20, 17]),
    (21, &[21, 19]),
    (22, &[22, 21]),
    (23, &[23, 18]),
    (24, &[24, 23, 22, 17]),
];

pub fn supported_orders() -> impl Iterator<Item = u8> {
    TAPS.iter().map(|(o, _)| *o)
}

/// Pseudo-random binary signal from a maximal-length shift register.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PrbsGenerator {
    register: u32,
    order: u8,
    tap_mask: u32,
    /// Output level (signal units, stored as bits for `Eq`).
    amplitude_bits: u64,
    hold: usize,
    held: usize,
    current: bool,
    seed: u64,
}

impl PrbsGenerator {
    /// `seed` initialises the register (its low `order` bits) and must not
    /// leave it zero. Each chip is held for `hold` samples.
    pub fn new(order: u8, seed: u64, amplitude: f64, hold: usize) -> Result<Self, SimError> {
        let taps = TAPS.iter().find(|(o, _)| *o == order).ok_or(SimError::UnsupportedOrder(order))?.1;
        let mask = (1u64 << order) - 1;
        let register = (seed & mask) as u32;
        if register == 0 {
            return Err(SimError::ZeroRegister);
        }
        let tap_mask = taps.iter().fold(0u32, |m, t| m | 1 << (t - 1));
        Ok(Self {
            register,
            order,
            tap_mask,
            amplitude_bits: amplitude.to_bits(),
            hold: hold.max(1),
            held: 0,
            current: false,
            seed,
        })
    }

    pub fn amplitude(&self) -> f64 {
        f64::from_bits(self.amplitude_bits)
    }

    pub fn order(&self) -> u8 {
        self.order
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn period(&self) -> usize {
        ((1usize << self.order) - 1) * self.hold
    }

    fn shift(&mut self) -> bool {
        let bit = (self.register & self.tap_mask).count_ones() & 1 == 1;
        let mask = ((1u64 << self.order) - 1) as u32;
        self.register = ((self.register << 1) | bit as u32) & mask;
        bit
    }

    /// Next sample, `±amplitude`.
    pub fn next_value(&mut self) -> f64 {
        if self.held == 0 {
            self.current = self.shift();
        }
        self.held = (self.held + 1) % self.hold;
        if self.current {
            self.amplitude()
        } else {
            -self.amplitude()
        }
    }
}

/// Functional form of [`PrbsGenerator::next_value`].
pub fn prbs_next(gen: &PrbsGenerator) -> (f64, PrbsGenerator) {
    let mut g = gen.clone();
    let v = g.next_value();
    (v, g)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RbcMode {
    /// Excitation added; idle battery hours still receive the dither.
    DataCollection,
    /// No excitation.
    Baseline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RbcConfig {
    /// Half-open daily hour windows.
    pub charge_window: (usize, usize),
    pub discharge_window: (usize, usize),
    /// Charging/discharging current magnitude (A).
    pub charge_current: f64,
    pub soc_high: f64,
    pub soc_low: f64,
    pub prbs_amp_building: f64,
    pub prbs_amp_battery: f64,
    /// Blind dither amplitude (fraction).
    pub prbs_amp_blinds: f64,
    /// Heat-pump dither amplitude (kW).
    pub prbs_amp_heat_pump: f64,
    /// Battery current clamp (A).
    pub battery_limits: (f64, f64),
    /// Radiator clamp (kW).
    pub radiator_limits: (f64, f64),
    /// Blind opening while `[open_from, open_until)` and otherwise.
    pub blinds_day: f64,
    pub blinds_night: f64,
    pub blinds_open: (usize, usize),
}

impl Default for RbcConfig {
    fn default() -> Self {
        Self {
            charge_window: (0, 4),
            discharge_window: (5, 23),
            charge_current: 15.0,
            soc_high: 0.9,
            soc_low: 0.2,
            prbs_amp_building: 5.0,
            prbs_amp_battery: 15.0,
            prbs_amp_blinds: 0.25,
            prbs_amp_heat_pump: 0.1,
            battery_limits: (-22.0, 22.0),
            radiator_limits: (0.0, 5.0),
            blinds_day: 0.75,
            blinds_night: 0.25,
            blinds_open: (8, 18),
        }
    }
}

impl RbcConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidConfig(m.to_string()));
        if !(0.0 <= self.soc_low && self.soc_low < self.soc_high && self.soc_high <= 1.0) {
            return bad("need 0 <= soc_low < soc_high <= 1");
        }
        for (a, b) in [self.charge_window, self.discharge_window, self.blinds_open] {
            if a > b || b > 24 {
                return bad("hour windows must satisfy start <= end <= 24");
            }
        }
        if self.battery_limits.0 > self.battery_limits.1 || self.radiator_limits.0 > self.radiator_limits.1 {
            return bad("actuator limits must be ordered");
        }
        Ok(())
    }
}

fn in_window(hour: usize, w: (usize, usize)) -> bool {
    let h = hour % 24;
    h >= w.0 && h < w.1
}

/// Hysteresis-free thermostat plus excitation, per zone: full power at or
/// below `y_min`, minimum at or above `y_max`, off in between; the result
/// is `clamp(base + delta)`.
pub fn rbc_building_control(y: &[f64], bounds: &[(f64, f64)], delta: &[f64], u_bounds: (f64, f64)) -> Vec<f64> {
    y.iter()
        .zip(bounds)
        .zip(delta)
        .map(|((&yi, &(lo, hi)), &d)| {
            let base = if yi <= lo {
                u_bounds.1
            } else if yi >= hi {
                u_bounds.0
            } else {
                0.0
            };
            (base + d).clamp(u_bounds.0, u_bounds.1)
        })
        .collect()
}

/// Night charging, daytime discharging, waiting when the SoC limit is hit.
pub fn rbc_battery_control(hour_of_day: usize, soc: f64, cfg: &RbcConfig, delta: f64, mode: RbcMode) -> f64 {
    let base = if in_window(hour_of_day, cfg.charge_window) && soc < cfg.soc_high {
        Some(-cfg.charge_current)
    } else if in_window(hour_of_day, cfg.discharge_window) && soc > cfg.soc_low {
        Some(cfg.charge_current)
    } else {
        None
    };
    let i = match (base, mode) {
        (Some(b), _) => b + delta,
        (None, RbcMode::DataCollection) => delta,
        (None, RbcMode::Baseline) => 0.0,
    };
    i.clamp(cfg.battery_limits.0, cfg.battery_limits.1)
}

/// Scheduled blind opening plus dither, clamped to `[0, 1]`.
pub fn rbc_blinds(hour_of_day: usize, cfg: &RbcConfig, delta: f64) -> f64 {
    let base = if in_window(hour_of_day, cfg.blinds_open) { cfg.blinds_day } else { cfg.blinds_night };
    (base + delta).clamp(0.0, 1.0)
}
