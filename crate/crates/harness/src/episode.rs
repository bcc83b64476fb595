//! Closed-loop episodes and their logs.

use std::path::Path;
use std::time::Instant;

use deepc_core::{DeepcController, DeepcError, StepRequest, WarmStart};
use deepc_sim::building::N_ZONES;
use deepc_sim::RbcMode;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::collect::{channel_info, rbc_actuation, warm_up, Dither};
use crate::config::HOURS_PER_YEAR;
use crate::plant::{Actuation, Plant, IDX_DISTURBANCE, N_HUB_INPUTS, N_HUB_OUTPUTS};
use crate::{HarnessError, ScenarioConfig};

pub enum Controller {
    Deepc(Box<DeepcController>),
    Rbc,
}

impl Controller {
    pub fn name(&self) -> &'static str {
        match self {
            Controller::Deepc(_) => "deepc",
            Controller::Rbc => "rbc",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub controller: String,
    pub seed: u64,
    /// Hex digest of the scenario, see [`ScenarioConfig::fingerprint`].
    pub scenario: String,
    /// Hours since 1 January 00:00 at the first record.
    pub start_hour: usize,
    pub horizon_hours: usize,
    pub t_f: usize,
    /// Wall-clock time of the closed loop (s). Kept out of `episode.csv` so
    /// replays compare equal.
    pub runtime_s: f64,
    /// Steps where the solver failed and the previous input was held.
    pub fallbacks: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// Hours since 1 January 00:00.
    pub hour: usize,
    /// Applied hub inputs including disturbances.
    pub inputs: Vec<f64>,
    /// Outputs at the end of the hour.
    pub outputs: Vec<f64>,
    pub soc: f64,
    pub capacity: f64,
    pub cycles: f64,
    pub capacity_loss: f64,
    pub price: f64,
    /// Net grid power (kW).
    pub power: f64,
    pub status: String,
    pub iterations: usize,
    /// First column of the plan (manipulated inputs only).
    pub plan_first: Option<Vec<f64>>,
    /// Predicted outputs for the next `T_f` records, `p × T_f`.
    pub prediction: Option<DMatrix<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub header: LogHeader,
    pub records: Vec<StepRecord>,
}

/// Clamp a plan input to the actuator ranges the controller was given.
fn actuate_plan(cfg: &ScenarioConfig, u0: &[f64]) -> Actuation {
    let c = &cfg.deepc;
    let mut a = Actuation::from_hub(u0);
    for r in a.radiators.iter_mut() {
        *r = r.clamp(c.u_s_bounds[0], c.u_s_bounds[1]);
    }
    for b in a.blinds.iter_mut() {
        *b = b.clamp(c.blind_bounds[0], c.blind_bounds[1]);
    }
    a.heat_pump = a.heat_pump.max(0.0);
    a.battery = a.battery.clamp(c.u_b_bounds[0], c.u_b_bounds[1]);
    a
}

fn window(samples: &[Vec<f64>], rows: usize, len: usize) -> DMatrix<f64> {
    let start = samples.len() - len;
    DMatrix::from_fn(rows, len, |i, k| samples[start + k][i])
}

/// Run `cfg.horizon_days` of closed loop. The plant first runs
/// `cfg.warmup_hours` under the rule-based controller without battery
/// ageing; ageing is on for the episode itself.
pub fn run_episode(cfg: &ScenarioConfig, controller: &Controller) -> Result<EpisodeLog, HarnessError> {
    cfg.validate()?;
    let tariff = cfg.tariff_profile()?;
    let start = cfg.episode_start_hour();
    let horizon = cfg.horizon_hours();
    let t_f = cfg.deepc.t_f;
    let mut plant = Plant::new(cfg, start - cfg.warmup_hours)?;
    let (mut u_hist, mut y_hist) = warm_up(cfg, &mut plant, cfg.warmup_hours)?;
    plant.ageing = true;

    let clock = Instant::now();
    let mut records = Vec::with_capacity(horizon);
    let mut warm: Option<WarmStart> = None;
    let mut last = u_hist.last().map(|u| Actuation::from_hub(u)).unwrap_or_else(Actuation::idle);
    let mut fallbacks = 0;
    for _ in 0..horizon {
        let hour = plant.hour();
        let (act, status, iterations, plan_first, prediction) = match controller {
            Controller::Rbc => {
                let a = rbc_actuation(
                    cfg,
                    hour,
                    &plant.zone_temperatures(),
                    plant.battery().soc,
                    &Dither::default(),
                    RbcMode::Baseline,
                );
                (a, "rbc".to_string(), 0, None, None)
            }
            Controller::Deepc(ctrl) => {
                let t_ini = cfg.deepc.t_ini;
                let req = StepRequest {
                    u_ini: window(&u_hist, N_HUB_INPUTS, t_ini),
                    y_ini: window(&y_hist, N_HUB_OUTPUTS, t_ini),
                    v_forecast: plant.forecast(hour, t_f)?,
                    prices: tariff.window(hour, t_f),
                    start_hour: hour,
                };
                match ctrl.step(&req, warm.as_ref()) {
                    Ok(plan) => {
                        warm = Some(ctrl.shift(&plan));
                        let u0: Vec<f64> = plan.u.column(0).iter().copied().collect();
                        let a = actuate_plan(cfg, &u0);
                        let status = plan.status.to_string();
                        (a, status, plan.iterations, Some(u0[..IDX_DISTURBANCE].to_vec()), Some(plan.y_pred))
                    }
                    Err(e) => {
                        let reason = match e {
                            DeepcError::Solver { status, .. } => status.to_string(),
                            other => return Err(other.into()),
                        };
                        warm = None;
                        fallbacks += 1;
                        (last, format!("hold:{reason}"), 0, None, None)
                    }
                }
            }
        };
        let s = plant.step(&act)?;
        let b = plant.battery();
        records.push(StepRecord {
            hour: hour - HOURS_PER_YEAR,
            inputs: s.inputs.as_slice().to_vec(),
            outputs: s.outputs.as_slice().to_vec(),
            soc: b.soc,
            capacity: b.capacity,
            cycles: b.cycles,
            capacity_loss: b.capacity_loss,
            price: tariff.price_at(hour),
            power: s.power,
            status,
            iterations,
            plan_first,
            prediction,
        });
        u_hist.push(s.inputs.as_slice().to_vec());
        y_hist.push(s.outputs.as_slice().to_vec());
        last = act;
    }
    let header = LogHeader {
        controller: controller.name().to_string(),
        seed: cfg.seed,
        scenario: format!("{:016x}", cfg.fingerprint()),
        start_hour: start - HOURS_PER_YEAR,
        horizon_hours: horizon,
        t_f,
        runtime_s: clock.elapsed().as_secs_f64(),
        fallbacks,
    };
    Ok(EpisodeLog { header, records })
}

pub const EPISODE_CSV: &str = "episode.csv";
pub const PREDICTIONS_CSV: &str = "predictions.csv";
pub const HEADER_TOML: &str = "episode.toml";

const TAIL_COLUMNS: [&str; 8] = ["soc", "capacity_ah", "cycles", "capacity_loss", "price", "power_kw", "status", "iterations"];

impl EpisodeLog {
    /// Write `episode.csv`, `predictions.csv` and `episode.toml` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), HarnessError> {
        std::fs::create_dir_all(dir)?;
        let (u_info, y_info) = channel_info();
        let mut w = csv::Writer::from_path(dir.join(EPISODE_CSV))?;
        let mut header = vec!["hour".to_string()];
        header.extend(u_info.iter().map(|c| c.name.clone()));
        header.extend(y_info.iter().map(|c| c.name.clone()));
        header.extend(TAIL_COLUMNS.iter().map(|s| s.to_string()));
        w.write_record(&header)?;
        for r in &self.records {
            let mut row = vec![r.hour.to_string()];
            row.extend(r.inputs.iter().chain(&r.outputs).map(f64::to_string));
            for v in [r.soc, r.capacity, r.cycles, r.capacity_loss, r.price, r.power] {
                row.push(v.to_string());
            }
            row.push(r.status.clone());
            row.push(r.iterations.to_string());
            w.write_record(&row)?;
        }
        w.flush()?;

        let mut w = csv::Writer::from_path(dir.join(PREDICTIONS_CSV))?;
        let mut header = vec!["hour".to_string(), "k".to_string()];
        header.extend(y_info.iter().map(|c| c.name.clone()));
        w.write_record(&header)?;
        for r in &self.records {
            let Some(pred) = &r.prediction else { continue };
            for k in 0..pred.ncols() {
                let mut row = vec![r.hour.to_string(), k.to_string()];
                row.extend(pred.column(k).iter().map(f64::to_string));
                w.write_record(&row)?;
            }
        }
        w.flush()?;

        let text = toml::to_string(&self.header).map_err(|e| HarnessError::Config(e.to_string()))?;
        std::fs::write(dir.join(HEADER_TOML), text)?;
        Ok(())
    }

    /// Read a log written by [`EpisodeLog::write`]. Plan first inputs are
    /// not stored and come back empty.
    pub fn read(dir: &Path) -> Result<Self, HarnessError> {
        let header: LogHeader = toml::from_str(&std::fs::read_to_string(dir.join(HEADER_TOML))?)
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        let parse = |s: &str| -> Result<f64, HarnessError> {
            s.parse().map_err(|_| HarnessError::Config(format!("bad number {s:?} in episode log")))
        };
        let mut records = Vec::new();
        let mut rd = csv::Reader::from_path(dir.join(EPISODE_CSV))?;
        for row in rd.records() {
            let row = row?;
            let f: Vec<&str> = row.iter().collect();
            if f.len() != 1 + N_HUB_INPUTS + N_HUB_OUTPUTS + TAIL_COLUMNS.len() {
                return Err(HarnessError::Config(format!("episode row with {} fields", f.len())));
            }
            let nums = |a: usize, b: usize| f[a..b].iter().map(|s| parse(s)).collect::<Result<Vec<_>, _>>();
            let o = 1 + N_HUB_INPUTS + N_HUB_OUTPUTS;
            let tail = nums(o, o + 6)?;
            records.push(StepRecord {
                hour: f[0].parse().map_err(|_| HarnessError::Config(format!("bad hour {:?}", f[0])))?,
                inputs: nums(1, 1 + N_HUB_INPUTS)?,
                outputs: nums(1 + N_HUB_INPUTS, o)?,
                soc: tail[0],
                capacity: tail[1],
                cycles: tail[2],
                capacity_loss: tail[3],
                price: tail[4],
                power: tail[5],
                status: f[o + 6].to_string(),
                iterations: f[o + 7].parse().map_err(|_| HarnessError::Config("bad iteration count".into()))?,
                plan_first: None,
                prediction: None,
            });
        }
        let pred_path = dir.join(PREDICTIONS_CSV);
        if pred_path.exists() {
            let first = records.first().map(|r| r.hour).unwrap_or(0);
            let mut rd = csv::Reader::from_path(pred_path)?;
            for row in rd.records() {
                let row = row?;
                let f: Vec<&str> = row.iter().collect();
                let hour: usize = f[0].parse().map_err(|_| HarnessError::Config("bad prediction hour".into()))?;
                let k: usize = f[1].parse().map_err(|_| HarnessError::Config("bad prediction step".into()))?;
                let rec = records
                    .get_mut(hour.wrapping_sub(first))
                    .ok_or_else(|| HarnessError::Config(format!("prediction for unknown hour {hour}")))?;
                let pred = rec.prediction.get_or_insert_with(|| DMatrix::zeros(N_HUB_OUTPUTS, header.t_f));
                for (j, s) in f[2..].iter().enumerate() {
                    pred[(j, k)] = parse(s)?;
                }
            }
        }
        Ok(Self { header, records })
    }

    /// Zone temperatures of record `t`.
    pub fn zone_temperatures(&self, t: usize) -> &[f64] {
        &self.records[t].outputs[..N_ZONES]
    }
}
