use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::DeepcError;

/// Controller parameters. Every field has a default, so a config file only
/// needs the entries it overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeepcConfig {
    pub t_ini: usize,
    pub t_f: usize,
    pub beta: f64,
    pub lambda_g: f64,
    pub lambda_rho: f64,
    /// Heat-pump coefficient of performance.
    pub c_h: f64,
    /// Radiator-to-heat-pump conversion factor per zone.
    pub alpha: Vec<f64>,
    /// Battery voltage (V) at which the grid power balance is linearised.
    pub v_lin: f64,
    pub u_b_bounds: [f64; 2],
    pub y_b_bounds: [f64; 2],
    pub u_s_bounds: [f64; 2],
    pub blind_bounds: [f64; 2],
    /// KKT tolerance of the step QP.
    pub solver_tol: f64,
    pub solver_max_iter: usize,
    /// Relative cutoff for the column-space basis of the stacked Hankel data.
    pub data_rtol: f64,
    /// Relative cutoff used when solving the data-consistency equalities.
    pub consistency_rtol: f64,
}

impl Default for DeepcConfig {
    fn default() -> Self {
        Self {
            t_ini: 30,
            t_f: 24,
            beta: 0.01,
            lambda_g: 1000.0,
            lambda_rho: 10.0,
            c_h: 3.0,
            alpha: vec![11.9, 11.9, 11.9, 27.77, 7.58],
            v_lin: 66.0,
            u_b_bounds: [-22.0, 22.0],
            y_b_bounds: [63.0, 68.0],
            u_s_bounds: [0.0, 5.0],
            blind_bounds: [0.0, 1.0],
            solver_tol: 1e-6,
            solver_max_iter: 50_000,
            data_rtol: 1e-9,
            consistency_rtol: 1e-9,
        }
    }
}

impl DeepcConfig {
    pub fn validate(&self) -> Result<(), DeepcError> {
        let bad = |msg: &str| Err(DeepcError::Config(msg.to_string()));
        if self.t_ini == 0 || self.t_f == 0 {
            return bad("t_ini and t_f must be at least 1");
        }
        if !(self.beta > 0.0) {
            return bad("beta must be positive");
        }
        if !(self.lambda_g >= 0.0 && self.lambda_rho >= 0.0) {
            return bad("lambda_g and lambda_rho must be nonnegative");
        }
        if !(self.c_h > 0.0) {
            return bad("c_h must be positive");
        }
        if self.alpha.iter().any(|a| !(*a > 0.0)) {
            return bad("alpha entries must be positive");
        }
        for (name, b) in [
            ("u_b_bounds", self.u_b_bounds),
            ("y_b_bounds", self.y_b_bounds),
            ("u_s_bounds", self.u_s_bounds),
            ("blind_bounds", self.blind_bounds),
        ] {
            if !(b[0] <= b[1]) {
                return Err(DeepcError::Config(format!("{name} must satisfy min <= max")));
            }
        }
        if !(self.solver_tol > 0.0) || self.solver_max_iter == 0 {
            return bad("solver_tol and solver_max_iter must be positive");
        }
        Ok(())
    }

    /// kW of grid power per A of battery current at the linearisation voltage.
    pub fn kw_per_amp(&self) -> f64 {
        self.v_lin / 1000.0
    }

    pub fn from_toml(text: &str) -> Result<Self, DeepcError> {
        let cfg: Self = toml::from_str(text).map_err(|e| DeepcError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, DeepcError> {
        let text = std::fs::read_to_string(path).map_err(|e| DeepcError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }
}

/// Daily comfort band: a wide band during the unoccupied hours, a narrow one
/// otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComfortSchedule {
    pub occupied_band: (f64, f64),
    pub unoccupied_band: (f64, f64),
    /// Half-open daily interval `[start, end)` in hours; may wrap midnight.
    pub unoccupied_hours: (f64, f64),
}

impl Default for ComfortSchedule {
    fn default() -> Self {
        Self { occupied_band: (21.0, 25.0), unoccupied_band: (10.0, 40.0), unoccupied_hours: (23.0, 5.0) }
    }
}

impl ComfortSchedule {
    pub fn validate(&self) -> Result<(), DeepcError> {
        let (o, u) = (self.occupied_band, self.unoccupied_band);
        if !(o.0 < o.1 && u.0 < u.1) {
            return Err(DeepcError::Config("comfort bands need min < max".into()));
        }
        if !(u.0 <= o.0 && o.1 <= u.1) {
            return Err(DeepcError::Config("unoccupied band must contain the occupied band".into()));
        }
        Ok(())
    }

    pub fn is_unoccupied(&self, hour: f64) -> bool {
        let h = hour.rem_euclid(24.0);
        let (start, end) = self.unoccupied_hours;
        if start <= end {
            h >= start && h < end
        } else {
            h >= start || h < end
        }
    }
}

/// `(y_min, y_max)` in force at `hour_of_day` (taken modulo 24).
pub fn comfort_bounds_at(hour_of_day: f64, schedule: &ComfortSchedule) -> (f64, f64) {
    if schedule.is_unoccupied(hour_of_day) {
        schedule.unoccupied_band
    } else {
        schedule.occupied_band
    }
}

/// Energy price per hour of day (CHF/kWh), repeating every 24 h.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TariffProfile {
    pub c: Vec<f64>,
}

impl TariffProfile {
    pub fn new(c: Vec<f64>) -> Result<Self, DeepcError> {
        if c.len() != 24 {
            return Err(DeepcError::Config(format!("tariff needs 24 hourly prices, got {}", c.len())));
        }
        if c.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(DeepcError::Config("tariff prices must be finite and nonnegative".into()));
        }
        Ok(Self { c })
    }

    /// `day` price on `[day_start, day_end)`, `night` price otherwise.
    pub fn two_level(day: f64, night: f64, day_start: usize, day_end: usize) -> Result<Self, DeepcError> {
        Self::new((0..24).map(|h| if h >= day_start && h < day_end { day } else { night }).collect())
    }

    pub fn price_at(&self, hour: usize) -> f64 {
        self.c[hour % 24]
    }

    /// Prices for `len` consecutive hours starting at absolute hour `start`.
    pub fn window(&self, start: usize, len: usize) -> Vec<f64> {
        (start..start + len).map(|h| self.price_at(h)).collect()
    }
}
