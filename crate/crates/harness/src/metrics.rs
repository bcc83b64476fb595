//! Comfort, cost, ageing and prediction-error metrics of an episode log.

use std::path::Path;

use deepc_core::{comfort_bounds_at, ComfortSchedule, TariffProfile};
use deepc_sim::building::N_ZONES;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::episode::EpisodeLog;
use crate::plant::OUT_BATTERY;
use crate::HarnessError;

/// Mean absolute prediction error per channel and prediction step.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionError {
    /// `zones × T_f` (°C).
    pub rooms: DMatrix<f64>,
    /// Battery voltage per prediction step (V).
    pub battery: Vec<f64>,
    /// Number of prediction/realisation pairs per step.
    pub samples: Vec<usize>,
}

impl PredictionError {
    pub fn max_room(&self) -> f64 {
        self.rooms.iter().cloned().fold(0.0, f64::max)
    }

    pub fn max_battery(&self) -> f64 {
        self.battery.iter().cloned().fold(0.0, f64::max)
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), HarnessError> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["k".to_string()];
        header.extend((1..=self.rooms.nrows()).map(|z| format!("eps_room{z}_c")));
        header.push("eps_battery_v".into());
        header.push("samples".into());
        w.write_record(&header)?;
        for k in 0..self.battery.len() {
            let mut row = vec![(k + 1).to_string()];
            row.extend(self.rooms.column(k).iter().map(f64::to_string));
            row.push(self.battery[k].to_string());
            row.push(self.samples[k].to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Compare every stored plan with what happened. The prediction made at
/// record `t` for step `k` is matched with the outputs of record `t + k`;
/// pairs running past the end of the log are skipped.
pub fn compute_prediction_error(log: &EpisodeLog) -> Result<PredictionError, HarnessError> {
    let t_f = log.header.t_f;
    if t_f == 0 || log.records.iter().all(|r| r.prediction.is_none()) {
        return Err(HarnessError::MissingPredictions);
    }
    let mut rooms = DMatrix::zeros(N_ZONES, t_f);
    let mut battery = vec![0.0; t_f];
    let mut samples = vec![0usize; t_f];
    for (t, r) in log.records.iter().enumerate() {
        let Some(pred) = &r.prediction else { continue };
        for k in 0..t_f.min(log.records.len() - t) {
            let y = &log.records[t + k].outputs;
            for z in 0..N_ZONES {
                rooms[(z, k)] += (pred[(z, k)] - y[z]).abs();
            }
            battery[k] += (pred[(OUT_BATTERY, k)] - y[OUT_BATTERY]).abs();
            samples[k] += 1;
        }
    }
    for k in 0..t_f {
        if samples[k] > 0 {
            let n = samples[k] as f64;
            rooms.column_mut(k).unscale_mut(n);
            battery[k] /= n;
        }
    }
    Ok(PredictionError { rooms, battery, samples })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub controller: String,
    pub seed: u64,
    pub scenario: String,
    pub hours: usize,
    /// Mean lower-bound violation over violated room-hours (°C).
    pub lbv_per_room_hour: f64,
    pub ubv_per_room_hour: f64,
    /// Share of room-hours below / above the band (%).
    pub pct_lbv: f64,
    pub pct_ubv: f64,
    /// Energy bill (CHF).
    pub cost: f64,
    pub cycles: f64,
    /// Capacity loss at the end of the episode (%).
    pub capacity_loss: f64,
    pub fallbacks: usize,
}

/// Comfort violations, energy bill and battery ageing. Record `t` holds the
/// zone temperatures at the end of its hour, so it is judged against the
/// band of hour `t + 1`.
pub fn compute_violation_metrics(
    log: &EpisodeLog,
    schedule: &ComfortSchedule,
    tariff: &TariffProfile,
) -> MetricsReport {
    let (mut lbv, mut ubv, mut n_lbv, mut n_ubv) = (0.0, 0.0, 0usize, 0usize);
    let mut cost = 0.0;
    for r in &log.records {
        let (lo, hi) = comfort_bounds_at((r.hour + 1) as f64, schedule);
        for &y in &r.outputs[..N_ZONES] {
            if y < lo {
                lbv += lo - y;
                n_lbv += 1;
            }
            if y > hi {
                ubv += y - hi;
                n_ubv += 1;
            }
        }
        cost += r.power * tariff.price_at(r.hour);
    }
    let room_hours = (log.records.len() * N_ZONES).max(1) as f64;
    let mean = |s: f64, n: usize| if n == 0 { 0.0 } else { s / n as f64 };
    let last = log.records.last();
    MetricsReport {
        controller: log.header.controller.clone(),
        seed: log.header.seed,
        scenario: log.header.scenario.clone(),
        hours: log.records.len(),
        lbv_per_room_hour: mean(lbv, n_lbv),
        ubv_per_room_hour: mean(ubv, n_ubv),
        pct_lbv: 100.0 * n_lbv as f64 / room_hours,
        pct_ubv: 100.0 * n_ubv as f64 / room_hours,
        cost,
        cycles: last.map_or(0.0, |r| r.cycles),
        capacity_loss: 100.0 * last.map_or(0.0, |r| r.capacity_loss),
        fallbacks: log.header.fallbacks,
    }
}

impl MetricsReport {
    pub fn write_csv(&self, path: &Path) -> Result<(), HarnessError> {
        let mut w = csv::Writer::from_path(path)?;
        w.serialize(self)?;
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self, HarnessError> {
        let mut rd = csv::Reader::from_path(path)?;
        match rd.deserialize().next() {
            Some(r) => Ok(r?),
            None => Err(HarnessError::Config(format!("{} holds no metrics row", path.display()))),
        }
    }
}
