//! Noiseless LTI stand-ins for the hub, where the data predictor is exact.

#[allow(dead_code)]
#[path = "../../core/tests/common/mod.rs"]
mod lti;

use deepc_core::{partition_hankel, ComfortSchedule, DeepcConfig, DeepcController, HubLayout, StepRequest, Trajectory};
use deepc_harness::{compute_prediction_error, EpisodeLog, LogHeader, StepRecord};
use lti::{binary_input, random_lti, toy_hub, toy_hub_inputs};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn header(t_f: usize) -> LogHeader {
    LogHeader {
        controller: "deepc".into(),
        seed: 0,
        scenario: "toy".into(),
        start_hour: 0,
        horizon_hours: t_f,
        t_f,
        runtime_s: 0.0,
        fallbacks: 0,
    }
}

fn record(hour: usize, outputs: Vec<f64>) -> StepRecord {
    StepRecord {
        hour,
        inputs: vec![],
        outputs,
        soc: 0.5,
        capacity: 40.0,
        cycles: 0.0,
        capacity_loss: 0.0,
        price: 0.0,
        power: 0.0,
        status: "optimal".into(),
        iterations: 0,
        plan_first: None,
        prediction: None,
    }
}

#[test]
fn prediction_error_vanishes_on_a_linear_hub() {
    // Seven outputs so the log has the hub's channel count.
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (n, m, p, t_ini, t_f) = (5, 3, 7, 6, 8);
    let sys = random_lti(&mut rng, n, m, p);
    let u = binary_input(&mut rng, m, 300, 1.0);
    let (y, _) = sys.simulate(&DVector::zeros(n), &u);
    let blocks = partition_hankel(&Trajectory::new(u, y, 1.0).unwrap(), t_ini, t_f).unwrap();
    let cfg = DeepcConfig { t_ini, t_f, ..DeepcConfig::default() };
    let ctrl = DeepcController::new(blocks, HubLayout::free(m, 0, p), cfg, ComfortSchedule::default()).unwrap();

    let u_ini = binary_input(&mut rng, m, t_ini, 1.0);
    let (y_ini, x_now) = sys.simulate(&DVector::from_element(n, 0.3), &u_ini);
    let req = StepRequest { u_ini, y_ini, v_forecast: DMatrix::zeros(0, t_f), prices: vec![0.2; t_f], start_hour: 0 };
    let plan = ctrl.step(&req, None).unwrap();

    // Apply the whole plan and log what the system does.
    let (y_sim, _) = sys.simulate(&x_now, &plan.u);
    let mut records: Vec<_> = (0..t_f).map(|k| record(k, y_sim.column(k).iter().copied().collect())).collect();
    records[0].prediction = Some(plan.y_pred.clone());
    let eps = compute_prediction_error(&EpisodeLog { header: header(t_f), records }).unwrap();
    assert!(eps.max_room() <= 1e-6, "room error {:e}", eps.max_room());
    assert!(eps.max_battery() <= 1e-6, "battery error {:e}", eps.max_battery());
    assert!(eps.samples.iter().all(|&s| s == 1));
}

#[test]
fn closed_loop_on_the_toy_hub_keeps_comfort_without_slack() {
    // Zero tariff: comfort costs nothing, so a feasible band is kept exactly.
    let sys = toy_hub(false);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (t_ini, t_f) = (3, 6);
    let u = toy_hub_inputs(&mut rng, 120);
    let (y, _) = sys.simulate(&DVector::from_row_slice(&[20.0, 65.0]), &u);
    let blocks = partition_hankel(&Trajectory::new(u, y, 1.0).unwrap(), t_ini, t_f).unwrap();
    let layout = HubLayout {
        inputs: vec![
            deepc_core::InputRole::Radiator { zone: 0 },
            deepc_core::InputRole::HeatPump,
            deepc_core::InputRole::BatteryCurrent,
        ],
        outputs: vec![deepc_core::OutputRole::ZoneTemperature { zone: 0 }, deepc_core::OutputRole::BatteryVoltage],
    };
    let cfg = DeepcConfig { t_ini, t_f, lambda_g: 0.0, solver_tol: 1e-9, ..DeepcConfig::default() };
    let schedule = ComfortSchedule::default();
    let ctrl = DeepcController::new(blocks, layout, cfg, schedule.clone()).unwrap();

    let u_hold = DMatrix::from_fn(3, t_ini, |i, _| match i {
        0 => 2.2,
        1 => 2.2 / (11.9 * 3.0),
        _ => 0.0,
    });
    let (y_hist, mut x) = sys.simulate(&DVector::from_row_slice(&[22.0, 65.5]), &u_hold);
    let (mut u_ini, mut y_ini) = (u_hold, y_hist);
    for hour in 0..48 {
        let req = StepRequest {
            u_ini: u_ini.clone(),
            y_ini: y_ini.clone(),
            v_forecast: DMatrix::zeros(0, t_f),
            prices: vec![0.0; t_f],
            start_hour: hour,
        };
        let plan = ctrl.step(&req, None).unwrap();
        assert!(plan.rho.amax() <= 1e-6, "hour {hour}: slack {}", plan.rho.amax());
        let u0 = plan.u.columns(0, 1).into_owned();
        let (y0, x_next) = sys.simulate(&x, &u0);
        x = x_next;
        // The toy pairs each input with the output of the same sample, and
        // plan step k is held to the band of hour start + k + 1.
        let (lo, hi) = deepc_core::comfort_bounds_at((hour + 1) as f64, &schedule);
        let temp = y0[(0, 0)];
        assert!(temp >= lo - 1e-6 && temp <= hi + 1e-6, "hour {hour}: {temp} outside [{lo}, {hi}]");
        let shift = |m: &DMatrix<f64>, col: DVector<f64>| {
            let kept = m.clone().remove_column(0);
            let n = kept.ncols();
            let mut next = kept.insert_column(n, 0.0);
            next.set_column(n, &col);
            next
        };
        u_ini = shift(&u_ini, u0.column(0).into_owned());
        y_ini = shift(&y_ini, y0.column(0).into_owned());
    }
}
