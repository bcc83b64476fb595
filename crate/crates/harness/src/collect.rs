//! Rule-based operation of the plant with PRBS excitation, and the data
//! set it produces.

use deepc_core::{
    check_persistent_excitation, comfort_bounds_at, partition_hankel, ChannelInfo, HankelBlocks, PeReport, SignalDims,
    Trajectory,
};
use deepc_sim::building::{N_FACADES, N_ZONES};
use deepc_sim::{rbc_battery_control, rbc_blinds, rbc_building_control, PrbsGenerator, RbcMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::plant::{Actuation, Plant};
use crate::{HarnessError, ScenarioConfig};

/// One dither value per manipulated input.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dither {
    pub radiators: [f64; N_ZONES],
    pub blinds: [f64; N_FACADES],
    pub heat_pump: f64,
    pub battery: f64,
}

/// Register seeds of every PRBS channel, kept for replay.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrbsSeeds {
    pub radiators: Vec<u64>,
    pub blinds: Vec<u64>,
    pub heat_pump: u64,
    pub battery: u64,
}

/// PRBS sources for all manipulated inputs.
#[derive(Debug, Clone)]
pub struct Excitation {
    radiators: Vec<PrbsGenerator>,
    blinds: Vec<PrbsGenerator>,
    heat_pump: PrbsGenerator,
    battery: PrbsGenerator,
    seeds: PrbsSeeds,
}

impl Excitation {
    /// Independent registers seeded from `cfg.seed`.
    pub fn new(cfg: &ScenarioConfig) -> Result<Self, HarnessError> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let order = cfg.prbs_order;
        let mask = (1u64 << order) - 1;
        let mut draw = || rng.random_range(1..=mask);
        let seeds = PrbsSeeds {
            radiators: (0..N_ZONES).map(|_| draw()).collect(),
            blinds: (0..N_FACADES).map(|_| draw()).collect(),
            heat_pump: draw(),
            battery: draw(),
        };
        let (r, hold) = (&cfg.rbc, cfg.prbs_hold);
        let gen = |seed, amp| PrbsGenerator::new(order, seed, amp, hold);
        Ok(Self {
            radiators: seeds.radiators.iter().map(|&s| gen(s, r.prbs_amp_building)).collect::<Result<_, _>>()?,
            blinds: seeds.blinds.iter().map(|&s| gen(s, r.prbs_amp_blinds)).collect::<Result<_, _>>()?,
            heat_pump: gen(seeds.heat_pump, r.prbs_amp_heat_pump)?,
            battery: gen(seeds.battery, r.prbs_amp_battery)?,
            seeds,
        })
    }

    pub fn seeds(&self) -> &PrbsSeeds {
        &self.seeds
    }

    pub fn next(&mut self) -> Dither {
        let mut d = Dither::default();
        for (v, g) in d.radiators.iter_mut().zip(&mut self.radiators) {
            *v = g.next_value();
        }
        for (v, g) in d.blinds.iter_mut().zip(&mut self.blinds) {
            *v = g.next_value();
        }
        d.heat_pump = self.heat_pump.next_value();
        d.battery = self.battery.next_value();
        d
    }
}

/// Rule-based action for the step starting at absolute hour `hour`, given
/// the latest zone temperatures and state of charge.
///
/// The thermostat compares against the band in force at the end of the step.
/// The heat pump supplies the radiators' demand through the hub coupling,
/// plus its dither.
pub fn rbc_actuation(cfg: &ScenarioConfig, hour: usize, temps: &[f64], soc: f64, d: &Dither, mode: RbcMode) -> Actuation {
    let r = &cfg.rbc;
    let band = comfort_bounds_at((hour + 1) as f64, &cfg.comfort);
    let radiators = rbc_building_control(temps, &[band; N_ZONES], &d.radiators, r.radiator_limits);
    let mut act = Actuation::idle();
    act.radiators.copy_from_slice(&radiators);
    for (f, b) in act.blinds.iter_mut().enumerate() {
        *b = rbc_blinds(hour % 24, r, d.blinds[f]);
    }
    let demand: f64 = radiators.iter().zip(&cfg.deepc.alpha).map(|(u, a)| u / a).sum::<f64>() / cfg.deepc.c_h;
    act.heat_pump = (demand + d.heat_pump).max(0.0);
    act.battery = rbc_battery_control(hour % 24, soc, r, d.battery, mode);
    act
}

/// Input and output samples of a run, one entry per hour.
pub type Samples = (Vec<Vec<f64>>, Vec<Vec<f64>>);

/// Run the rule-based controller in baseline mode for `hours` steps.
pub fn warm_up(cfg: &ScenarioConfig, plant: &mut Plant, hours: usize) -> Result<Samples, HarnessError> {
    let mut inputs = Vec::with_capacity(hours);
    let mut outputs = Vec::with_capacity(hours);
    for _ in 0..hours {
        let act =
            rbc_actuation(cfg, plant.hour(), &plant.zone_temperatures(), plant.battery().soc, &Dither::default(), RbcMode::Baseline);
        let s = plant.step(&act)?;
        inputs.push(s.inputs.as_slice().to_vec());
        outputs.push(s.outputs.as_slice().to_vec());
    }
    Ok((inputs, outputs))
}

/// The collected data set.
#[derive(Debug, Clone)]
pub struct CollectedData {
    pub trajectory: Trajectory,
    pub blocks: HankelBlocks,
    pub pe: PeReport,
    pub seeds: Option<PrbsSeeds>,
}

/// Run the data-collection experiment and return the recorded trajectory.
/// With `excite` off the rule-based controller runs without any dither.
pub fn collect_trajectory(cfg: &ScenarioConfig, excite: bool) -> Result<(Trajectory, Option<PrbsSeeds>), HarnessError> {
    cfg.validate()?;
    let start = cfg.collection_start_hour();
    let mut plant = Plant::new(cfg, start - cfg.warmup_hours)?;
    warm_up(cfg, &mut plant, cfg.warmup_hours)?;
    let mut excitation = if excite { Some(Excitation::new(cfg)?) } else { None };
    let mut inputs = Vec::with_capacity(cfg.collection_hours);
    let mut outputs = Vec::with_capacity(cfg.collection_hours);
    for _ in 0..cfg.collection_hours {
        let d = excitation.as_mut().map(Excitation::next).unwrap_or_default();
        let act = rbc_actuation(
            cfg,
            plant.hour(),
            &plant.zone_temperatures(),
            plant.battery().soc,
            &d,
            RbcMode::DataCollection,
        );
        let s = plant.step(&act)?;
        inputs.push(s.inputs.as_slice().to_vec());
        outputs.push(s.outputs.as_slice().to_vec());
    }
    let traj = Trajectory::from_samples(&inputs, &outputs, cfg.sample_time_h)?;
    Ok((traj, excitation.map(|e| e.seeds().clone())))
}

/// Excitation check of order `T_ini + T_f` on the recorded inputs.
pub fn pe_report(cfg: &ScenarioConfig, traj: &Trajectory) -> Result<PeReport, HarnessError> {
    let dims = SignalDims::new(traj.m(), traj.p(), cfg.n_bound)?;
    Ok(check_persistent_excitation(traj.inputs(), cfg.deepc.t_ini + cfg.deepc.t_f, &dims))
}

/// Collect data, check excitation and build the Hankel blocks. Fails with
/// [`HarnessError::NotExciting`] when the data would not support the
/// predictor; a different seed is then needed.
pub fn collect_data(cfg: &ScenarioConfig) -> Result<CollectedData, HarnessError> {
    let (trajectory, seeds) = collect_trajectory(cfg, true)?;
    blocks_from(cfg, trajectory, seeds)
}

/// Check and partition an existing trajectory.
pub fn blocks_from(
    cfg: &ScenarioConfig,
    trajectory: Trajectory,
    seeds: Option<PrbsSeeds>,
) -> Result<CollectedData, HarnessError> {
    let pe = pe_report(cfg, &trajectory)?;
    if !pe.exciting {
        return Err(HarnessError::NotExciting(pe));
    }
    let blocks = partition_hankel(&trajectory, cfg.deepc.t_ini, cfg.deepc.t_f)?;
    Ok(CollectedData { trajectory, blocks, pe, seeds })
}

/// Channel names and units in hub order.
pub fn channel_info() -> (Vec<ChannelInfo>, Vec<ChannelInfo>) {
    let mut u: Vec<ChannelInfo> = (1..=N_ZONES).map(|z| ChannelInfo::new(format!("u_s{z}"), "kW")).collect();
    u.extend((1..=N_FACADES).map(|f| ChannelInfo::new(format!("blind_{f}"), "1")));
    u.push(ChannelInfo::new("u_h", "kW"));
    u.push(ChannelInfo::new("u_b", "A"));
    u.extend((1..=N_ZONES).map(|z| ChannelInfo::new(format!("gains_{z}"), "W/m2")));
    u.push(ChannelInfo::new("ambient", "degC"));
    u.push(ChannelInfo::new("ground", "degC"));
    u.extend((1..=N_FACADES).map(|f| ChannelInfo::new(format!("solar_{f}"), "W/m2")));
    let mut y: Vec<ChannelInfo> = (1..=N_ZONES).map(|z| ChannelInfo::new(format!("y_s{z}"), "degC")).collect();
    y.push(ChannelInfo::new("y_h", "kW"));
    y.push(ChannelInfo::new("y_b", "V"));
    (u, y)
}
