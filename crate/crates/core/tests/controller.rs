mod common;

use std::time::Instant;

use common::{binary_input, random_lti, toy_hub, toy_hub_inputs, Lti};
use deepc_core::{
    assemble_deepc_qp, deepc_step, partition_hankel, ComfortSchedule, DeepcConfig, DeepcController, DeepcError,
    HubLayout, InputRole, OutputRole, StepRequest, TariffProfile, Trajectory,
};
use deepc_qp::{solve_qp, QuadraticProgram, SolveStatus};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Setup {
    sys: Lti,
    controller: DeepcController,
    history: Trajectory,
    /// True state after the last history sample.
    x_now: DVector<f64>,
}

fn free_setup(seed: u64) -> Setup {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, m, p) = (4, 2, 2);
    let sys = random_lti(&mut rng, n, m, p);
    let cfg = DeepcConfig { t_ini: 6, t_f: 10, ..DeepcConfig::default() };
    let t_d = 200;
    let u = binary_input(&mut rng, m, t_d, 1.0);
    let (y, _) = sys.simulate(&DVector::zeros(n), &u);
    let data = Trajectory::new(u, y, 1.0).unwrap();
    let blocks = partition_hankel(&data, cfg.t_ini, cfg.t_f).unwrap();
    let controller = DeepcController::new(blocks, HubLayout::free(m, 0, p), cfg, ComfortSchedule::default()).unwrap();

    let u_hist = binary_input(&mut rng, m, 12, 1.0);
    let x0 = DVector::from_fn(n, |i, _| 0.5 - i as f64 * 0.3);
    let (y_hist, x_now) = sys.simulate(&x0, &u_hist);
    let history = Trajectory::new(u_hist, y_hist, 1.0).unwrap();
    Setup { sys, controller, history, x_now }
}

fn no_forecast(t_f: usize) -> DMatrix<f64> {
    DMatrix::zeros(0, t_f)
}

#[test]
fn predictions_match_true_response_on_lti_data() {
    for seed in [1, 2, 3] {
        let s = free_setup(seed);
        let tariff = TariffProfile::two_level(0.27, 0.18, 7, 21).unwrap();
        let start = Instant::now();
        let plan = deepc_step(&s.controller, &s.history, &no_forecast(10), &tariff, 0, None).unwrap();
        assert!(start.elapsed().as_secs_f64() < 1.0);
        let (y_true, _) = s.sys.simulate(&s.x_now, &plan.u);
        let err = (&plan.y_pred - &y_true).amax();
        assert!(err <= 1e-6, "seed {seed}: prediction error {err:e}");
    }
}

#[test]
fn arbitrary_trajectories_are_reproduced_by_the_data() {
    // With λ_g = 0 the only constraint on (u, y) is the data equation, so
    // pinning the future inputs to an arbitrary sequence must return the
    // true system response.
    let s = free_setup(5);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let u_future = binary_input(&mut rng, 2, 10, 0.7);
    let cfg = DeepcConfig { t_ini: 6, t_f: 10, lambda_g: 0.0, ..DeepcConfig::default() };
    let layout = HubLayout { inputs: vec![InputRole::Disturbance; 2], outputs: vec![OutputRole::Free; 2] };
    let ctrl = DeepcController::new(s.controller.blocks().clone(), layout, cfg, ComfortSchedule::default()).unwrap();
    let (u_ini, y_ini) = s.history.tail(6).unwrap();
    let req = StepRequest { u_ini, y_ini, v_forecast: u_future.clone(), prices: vec![0.2; 10], start_hour: 0 };
    let plan = ctrl.step(&req, None).unwrap();
    let (y_true, _) = s.sys.simulate(&s.x_now, &u_future);
    assert!((&plan.y_pred - &y_true).amax() <= 1e-6);
}

#[test]
fn short_history_is_rejected() {
    let s = free_setup(1);
    let (u, y) = s.history.tail(5).unwrap();
    let short = Trajectory::new(u, y, 1.0).unwrap();
    let tariff = TariffProfile::two_level(0.27, 0.18, 7, 21).unwrap();
    let err = deepc_step(&s.controller, &short, &no_forecast(10), &tariff, 0, None).unwrap_err();
    assert!(matches!(err, DeepcError::ShortHistory { needed: 6, got: 5 }));
}

#[test]
fn repeated_steps_are_identical() {
    let s = free_setup(2);
    let tariff = TariffProfile::two_level(0.27, 0.18, 7, 21).unwrap();
    let a = deepc_step(&s.controller, &s.history, &no_forecast(10), &tariff, 3, None).unwrap();
    let b = deepc_step(&s.controller, &s.history, &no_forecast(10), &tariff, 3, None).unwrap();
    assert_eq!(a, b);
}

// --- toy hub: radiator, heat pump, battery ---------------------------------

const TOY_TF: usize = 6;
const TOY_TINI: usize = 3;

fn toy_layout(with_hp_output: bool) -> HubLayout {
    let mut outputs = vec![OutputRole::ZoneTemperature { zone: 0 }];
    if with_hp_output {
        outputs.push(OutputRole::HeatPumpOutput);
    }
    outputs.push(OutputRole::BatteryVoltage);
    HubLayout { inputs: vec![InputRole::Radiator { zone: 0 }, InputRole::HeatPump, InputRole::BatteryCurrent], outputs }
}

fn toy_cfg() -> DeepcConfig {
    DeepcConfig { t_ini: TOY_TINI, t_f: TOY_TF, ..DeepcConfig::default() }
}

struct Toy {
    sys: Lti,
    blocks: deepc_core::HankelBlocks,
    req: StepRequest,
    x_now: DVector<f64>,
}

/// Toy hub whose zone starts at `temp0` °C, battery near 65.5 V.
fn toy(with_hp_output: bool, temp0: f64, start_hour: usize) -> Toy {
    let sys = toy_hub(with_hp_output);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let u = toy_hub_inputs(&mut rng, 120);
    let (y, _) = sys.simulate(&DVector::from_row_slice(&[20.0, 65.0]), &u);
    let blocks = partition_hankel(&Trajectory::new(u, y, 1.0).unwrap(), TOY_TINI, TOY_TF).unwrap();

    // Steady history: radiator holding the zone at temp0, battery idle.
    let u_rad = temp0 * (1.0 - 0.9);
    let u_ini = DMatrix::from_fn(3, TOY_TINI, |i, _| match i {
        0 => u_rad,
        1 => u_rad / (11.9 * 3.0),
        _ => 0.0,
    });
    let x0 = DVector::from_row_slice(&[temp0, 65.5]);
    let (y_ini, x_now) = sys.simulate(&x0, &u_ini);
    let tariff = TariffProfile::two_level(0.27, 0.18, 7, 21).unwrap();
    let req = StepRequest {
        u_ini,
        y_ini,
        v_forecast: DMatrix::zeros(0, TOY_TF),
        prices: tariff.window(start_hour, TOY_TF),
        start_hour,
    };
    Toy { sys, blocks, req, x_now }
}

fn controller(t: &Toy, with_hp_output: bool, cfg: DeepcConfig, schedule: ComfortSchedule) -> DeepcController {
    DeepcController::new(t.blocks.clone(), toy_layout(with_hp_output), cfg, schedule).unwrap()
}

/// Model-based MPC over `(u, y, ρ, p)` with `y = O x + Γ u`, built from the
/// true system matrices and solved with the same QP solver.
fn model_mpc(sys: &Lti, x: &DVector<f64>, req: &StepRequest, cfg: &DeepcConfig, schedule: &ComfortSchedule) -> f64 {
    let (m, p, t_f) = (3, sys.c.nrows(), TOY_TF);
    let nv = t_f * (m + p + 2);
    let iu = |k: usize, i: usize| k * m + i;
    let iy = |k: usize, j: usize| t_f * m + k * p + j;
    let ir = |k: usize| t_f * (m + p) + k;
    let ip = |k: usize| t_f * (m + p + 1) + k;

    let mut eq: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
    // Output prediction rows.
    let n = sys.n();
    let mut a_pow = DMatrix::<f64>::identity(n, n);
    let mut markov = vec![]; // C A^(i) B
    for _ in 0..t_f {
        markov.push(&sys.c * &a_pow * &sys.b);
        a_pow = &sys.a * a_pow;
    }
    let mut a_pow = DMatrix::<f64>::identity(n, n);
    for k in 0..t_f {
        let free = &sys.c * &a_pow * x;
        for j in 0..p {
            let mut row = vec![(iy(k, j), 1.0)];
            for i in 0..m {
                row.push((iu(k, i), -sys.d[(j, i)]));
                for s in 0..k {
                    row.push((iu(s, i), -markov[k - 1 - s][(j, i)]));
                }
            }
            eq.push((row, free[j]));
        }
        a_pow = &sys.a * a_pow;
        // Heat pump coupling and power balance.
        eq.push((vec![(iu(k, 1), cfg.c_h), (iu(k, 0), -1.0 / cfg.alpha[0])], 0.0));
        eq.push((vec![(ip(k), 1.0), (iu(k, 1), -1.0), (iu(k, 2), cfg.kw_per_amp())], 0.0));
    }
    let mut ineq: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
    let yb = p - 1;
    for k in 0..t_f {
        ineq.push((vec![(iu(k, 0), 1.0)], cfg.u_s_bounds[1]));
        ineq.push((vec![(iu(k, 0), -1.0)], -cfg.u_s_bounds[0]));
        ineq.push((vec![(iu(k, 2), 1.0)], cfg.u_b_bounds[1]));
        ineq.push((vec![(iu(k, 2), -1.0)], -cfg.u_b_bounds[0]));
        ineq.push((vec![(iu(k, 1), -1.0)], 0.0));
        ineq.push((vec![(iy(k, yb), 1.0)], cfg.y_b_bounds[1]));
        ineq.push((vec![(iy(k, yb), -1.0)], -cfg.y_b_bounds[0]));
        let (lo, hi) = deepc_core::comfort_bounds_at((req.start_hour + k + 1) as f64, schedule);
        ineq.push((vec![(iy(k, 0), -1.0), (ir(k), -1.0)], -lo));
        ineq.push((vec![(iy(k, 0), 1.0), (ir(k), -1.0)], hi));
        ineq.push((vec![(ir(k), -1.0)], 0.0));
    }
    let dense = |rows: &[(Vec<(usize, f64)>, f64)]| {
        let mut a = DMatrix::zeros(rows.len(), nv);
        let mut b = DVector::zeros(rows.len());
        for (r, (coefs, rhs)) in rows.iter().enumerate() {
            for &(j, w) in coefs {
                a[(r, j)] += w;
            }
            b[r] = *rhs;
        }
        (a, b)
    };
    let (a_eq, b_eq) = dense(&eq);
    let (a_in, b_in) = dense(&ineq);
    let mut h = DMatrix::zeros(nv, nv);
    let mut f = DVector::zeros(nv);
    for k in 0..t_f {
        h[(ir(k), ir(k))] = 2.0 * cfg.lambda_rho;
        h[(ip(k), ip(k))] = 2.0 * cfg.beta * cfg.beta;
        f[ip(k)] = req.prices[k];
    }
    let constant: f64 = req.prices.iter().map(|c| c * c / (4.0 * cfg.beta * cfg.beta)).sum();
    let qp = QuadraticProgram::new(h, f)
        .with_constant(constant)
        .with_equalities(a_eq, b_eq)
        .with_inequalities(a_in, b_in);
    let sol = solve_qp(&qp, 1e-8, 200_000).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    sol.objective
}

#[test]
fn toy_hub_matches_model_based_mpc() {
    for (temp0, hour) in [(22.0, 8), (19.0, 6), (23.0, 20)] {
        let t = toy(false, temp0, hour);
        let cfg = DeepcConfig { lambda_g: 0.0, solver_tol: 1e-8, ..toy_cfg() };
        let schedule = ComfortSchedule::default();
        let ctrl = controller(&t, false, cfg.clone(), schedule.clone());
        let plan = ctrl.step(&t.req, None).unwrap();
        let oracle = model_mpc(&t.sys, &t.x_now, &t.req, &cfg, &schedule);
        let gap = (plan.objective - oracle).abs();
        assert!(gap <= 1e-5 * (1.0 + oracle.abs()), "T0={temp0}: deepc {} vs mpc {oracle}", plan.objective);
        let (y_true, _) = t.sys.simulate(&t.x_now, &plan.u);
        assert!((&plan.y_pred - &y_true).amax() <= 1e-6);
    }
}

#[test]
fn reduced_solution_matches_full_problem() {
    let t = toy(true, 22.5, 9);
    let cfg = DeepcConfig { solver_tol: 1e-8, ..toy_cfg() };
    let schedule = ComfortSchedule::default();
    let ctrl = controller(&t, true, cfg.clone(), schedule.clone());
    let plan = ctrl.step(&t.req, None).unwrap();
    let full = assemble_deepc_qp(&t.blocks, &toy_layout(true), &t.req, &cfg, &schedule).unwrap();
    let sol = solve_qp(&full.qp, 1e-7, 200_000).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!(sol.kkt_residual <= 1e-7);
    let rel = (plan.objective - sol.objective).abs() / (1.0 + sol.objective.abs());
    assert!(rel <= 1e-6, "reduced {} vs full {}", plan.objective, sol.objective);
    // The reduced plan is feasible for the full problem's structure.
    let v = full.vars;
    for k in 0..TOY_TF {
        assert!((plan.p[k] - sol.z[v.power(k)]).abs() <= 1e-3, "p_{k}");
    }
}

#[test]
fn plan_respects_couplings_and_bounds() {
    let t = toy(true, 21.5, 7);
    let cfg = toy_cfg();
    let ctrl = controller(&t, true, cfg.clone(), ComfortSchedule::default());
    let plan = ctrl.step(&t.req, None).unwrap();
    let tol = 1e-5;
    for k in 0..TOY_TF {
        let (us, uh, ub) = (plan.u[(0, k)], plan.u[(1, k)], plan.u[(2, k)]);
        let (yh, yb) = (plan.y_pred[(1, k)], plan.y_pred[(2, k)]);
        assert!((yh - 3.0 * uh).abs() <= tol);
        assert!(yh >= -tol);
        assert!((yh - us / 11.9).abs() <= tol);
        assert_eq!(plan.p[k], uh - 0.066 * ub);
        assert!((-tol..=5.0 + tol).contains(&us));
        assert!((-22.0 - tol..=22.0 + tol).contains(&ub));
        assert!((63.0 - tol..=68.0 + tol).contains(&yb));
        assert!(plan.rho[(0, k)] >= -tol);
    }
}

#[test]
fn zero_tariff_with_slack_comfort_needs_no_slack_or_power() {
    let mut t = toy(false, 23.0, 9);
    t.req.prices = vec![0.0; TOY_TF];
    let cfg = DeepcConfig { lambda_g: 0.0, solver_tol: 1e-9, ..toy_cfg() };
    let ctrl = controller(&t, false, cfg, ComfortSchedule::default());
    let plan = ctrl.step(&t.req, None).unwrap();
    assert!(plan.rho.amax() <= 1e-6);
    assert!(plan.p.amax() <= 1e-4, "p = {}", plan.p.transpose());
}

#[test]
fn higher_slack_penalty_never_grows_slack() {
    // Zone starts far below the band, so the first hours need slack.
    let t = toy(false, 15.0, 7);
    let mut last = f64::INFINITY;
    for lambda_rho in [0.1, 1.0, 10.0, 100.0, 1000.0] {
        let cfg = DeepcConfig { lambda_rho, solver_tol: 1e-9, ..toy_cfg() };
        let plan = controller(&t, false, cfg, ComfortSchedule::default()).step(&t.req, None).unwrap();
        let norm = plan.rho.norm();
        assert!(norm > 0.0);
        assert!(norm <= last + 1e-6, "lambda_rho {lambda_rho}: {norm} > {last}");
        last = norm;
    }
}

#[test]
fn tighter_comfort_band_never_lowers_cost() {
    let t = toy(false, 21.5, 8);
    let cfg = DeepcConfig { solver_tol: 1e-9, ..toy_cfg() };
    let mut last = f64::NEG_INFINITY;
    for (lo, hi) in [(20.0, 26.0), (21.0, 25.0), (22.0, 24.0), (22.8, 23.2)] {
        let schedule = ComfortSchedule { occupied_band: (lo, hi), ..ComfortSchedule::default() };
        let obj = controller(&t, false, cfg.clone(), schedule).step(&t.req, None).unwrap().objective;
        assert!(obj >= last - 1e-6 * (1.0 + last.abs()), "band ({lo}, {hi}): {obj} < {last}");
        last = obj;
    }
}

#[test]
fn warm_start_reaches_the_same_plan() {
    let t = toy(true, 22.0, 10);
    let cfg = DeepcConfig { solver_tol: 1e-9, ..toy_cfg() };
    let ctrl = controller(&t, true, cfg, ComfortSchedule::default());
    let cold = ctrl.step(&t.req, None).unwrap();
    let warm = ctrl.step(&t.req, Some(&ctrl.shift(&cold))).unwrap();
    assert!((&cold.u - &warm.u).amax() <= 1e-5);
    assert!((cold.objective - warm.objective).abs() <= 1e-6 * (1.0 + cold.objective.abs()));
}

#[test]
fn layout_mismatch_is_reported() {
    let t = toy(false, 22.0, 8);
    let err = DeepcController::new(t.blocks.clone(), HubLayout::energy_hub(), toy_cfg(), ComfortSchedule::default())
        .unwrap_err();
    assert!(matches!(err, DeepcError::DimensionMismatch(_)));
    let ctrl = controller(&t, false, toy_cfg(), ComfortSchedule::default());
    let mut bad = t.req.clone();
    bad.prices.pop();
    assert!(matches!(ctrl.step(&bad, None), Err(DeepcError::DimensionMismatch(_))));
}

#[test]
fn plan_csv_has_one_row_per_step() {
    let t = toy(true, 22.0, 8);
    let plan = controller(&t, true, toy_cfg(), ComfortSchedule::default()).step(&t.req, None).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("plan.csv");
    plan.write_csv(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), TOY_TF + 1);
    assert!(text.starts_with("k,u_1,u_2,u_3,y_1,y_2,y_3,rho_1,p\n"));
}
