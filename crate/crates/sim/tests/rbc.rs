use deepc_sim::rbc::supported_orders;
use deepc_sim::{prbs_next, rbc_battery_control, rbc_blinds, rbc_building_control, PrbsGenerator, RbcConfig, RbcMode, SimError};
use proptest::prelude::*;

#[test]
fn thermostat_examples() {
    let b = [(21.0, 25.0)];
    assert_eq!(rbc_building_control(&[20.0], &b, &[0.5], (0.0, 5.0)), vec![5.0]);
    assert_eq!(rbc_building_control(&[26.0], &b, &[-0.5], (0.0, 5.0)), vec![0.0]);
    assert_eq!(rbc_building_control(&[23.0], &b, &[1.0], (0.0, 5.0)), vec![1.0]);
}

#[test]
fn battery_rule_examples() {
    let cfg = RbcConfig::default();
    assert_eq!(rbc_battery_control(2, 0.5, &cfg, 0.0, RbcMode::Baseline), -15.0);
    assert_eq!(rbc_battery_control(10, 0.19, &cfg, 0.0, RbcMode::Baseline), 0.0);
    assert_eq!(rbc_battery_control(10, 0.5, &cfg, 15.0, RbcMode::Baseline), 22.0);
    // Full pack at night, idle hour, and the end of the discharge window.
    assert_eq!(rbc_battery_control(1, 0.95, &cfg, 0.0, RbcMode::Baseline), 0.0);
    assert_eq!(rbc_battery_control(4, 0.5, &cfg, 0.0, RbcMode::Baseline), 0.0);
    assert_eq!(rbc_battery_control(23, 0.5, &cfg, 0.0, RbcMode::Baseline), 0.0);
    assert_eq!(rbc_battery_control(22, 0.5, &cfg, 0.0, RbcMode::Baseline), 15.0);
    assert_eq!(rbc_battery_control(4, 0.5, &cfg, -15.0, RbcMode::DataCollection), -15.0);
    assert_eq!(rbc_battery_control(4, 0.5, &cfg, -15.0, RbcMode::Baseline), 0.0);
}

#[test]
fn blind_schedule() {
    let cfg = RbcConfig::default();
    assert_eq!(rbc_blinds(12, &cfg, 0.0), cfg.blinds_day);
    assert_eq!(rbc_blinds(2, &cfg, 0.0), cfg.blinds_night);
    assert_eq!(rbc_blinds(12, &cfg, 0.5), 1.0);
    assert_eq!(rbc_blinds(2, &cfg, -0.5), 0.0);
}

#[test]
fn config_validation() {
    assert!(RbcConfig::default().validate().is_ok());
    let bad = RbcConfig { soc_low: 0.9, soc_high: 0.2, ..RbcConfig::default() };
    assert!(matches!(bad.validate(), Err(SimError::InvalidConfig(_))));
    let bad = RbcConfig { charge_window: (3, 25), ..RbcConfig::default() };
    assert!(bad.validate().is_err());
}

#[test]
fn prbs_construction_errors() {
    assert_eq!(PrbsGenerator::new(10, 0, 1.0, 1).unwrap_err(), SimError::ZeroRegister);
    assert_eq!(PrbsGenerator::new(10, 1 << 10, 1.0, 1).unwrap_err(), SimError::ZeroRegister);
    assert_eq!(PrbsGenerator::new(2, 1, 1.0, 1).unwrap_err(), SimError::UnsupportedOrder(2));
    assert_eq!(PrbsGenerator::new(25, 1, 1.0, 1).unwrap_err(), SimError::UnsupportedOrder(25));
}

fn bits(order: u8, seed: u64, len: usize) -> Vec<f64> {
    let mut g = PrbsGenerator::new(order, seed, 1.0, 1).unwrap();
    (0..len).map(|_| g.next_value()).collect()
}

#[test]
fn every_order_has_maximal_period() {
    for order in supported_orders().filter(|o| *o <= 16) {
        let n = (1usize << order) - 1;
        let s = bits(order, 1, 2 * n);
        assert_eq!(s[..n], s[n..], "order {order} repeats with period n");
        let ones = s[..n].iter().filter(|v| **v > 0.0).count();
        assert_eq!(ones, (n + 1) / 2, "order {order} balance");
        // No shorter period dividing n.
        for d in (1..n).filter(|d| n % d == 0) {
            assert_ne!(s[..n - d], s[d..n], "order {order} has period {d}");
        }
    }
}

#[test]
fn order_ten_autocorrelation_is_flat() {
    let n = 1023;
    let s = bits(10, 0x2A5, n);
    for lag in 1..n {
        let r: f64 = (0..n).map(|k| s[k] * s[(k + lag) % n]).sum::<f64>() / n as f64;
        assert!(r.abs() <= 1.0 / 1023.0 + 1e-12, "lag {lag}: {r}");
    }
}

#[test]
fn hold_repeats_each_chip() {
    let mut g = PrbsGenerator::new(5, 3, 2.0, 3).unwrap();
    let s: Vec<f64> = (0..30).map(|_| g.next_value()).collect();
    for chunk in s.chunks(3) {
        assert!(chunk.iter().all(|v| *v == chunk[0]));
    }
    assert_eq!(g.period(), 31 * 3);
}

#[test]
fn functional_step_matches_mutating_step() {
    let mut g = PrbsGenerator::new(12, 77, 5.0, 1).unwrap();
    let mut f = g.clone();
    for _ in 0..100 {
        let (v, next) = prbs_next(&f);
        assert_eq!(v, g.next_value());
        f = next;
    }
    assert_eq!(f, g);
}

proptest! {
    #[test]
    fn prbs_is_two_level_and_reproducible(seed in 1u64..(1 << 20), amp in 0.1..20.0f64) {
        let mut a = PrbsGenerator::new(20, seed, amp, 1).unwrap();
        let mut b = PrbsGenerator::new(20, seed, amp, 1).unwrap();
        for _ in 0..200 {
            let v = a.next_value();
            prop_assert!(v == amp || v == -amp);
            prop_assert_eq!(v, b.next_value());
        }
    }

    #[test]
    fn rbc_respects_actuator_clamps(
        y in prop::collection::vec(10.0..35.0f64, 5),
        delta in prop::collection::vec(-10.0..10.0f64, 5),
        hour in 0usize..48,
        soc in 0.0..=1.0f64,
        d_b in -40.0..40.0f64,
        d_bl in -1.0..1.0f64,
    ) {
        let bounds = vec![(21.0, 25.0); 5];
        for u in rbc_building_control(&y, &bounds, &delta, (0.0, 5.0)) {
            prop_assert!((0.0..=5.0).contains(&u));
        }
        let cfg = RbcConfig::default();
        for mode in [RbcMode::Baseline, RbcMode::DataCollection] {
            let i = rbc_battery_control(hour, soc, &cfg, d_b, mode);
            prop_assert!((-22.0..=22.0).contains(&i));
        }
        prop_assert!((0.0..=1.0).contains(&rbc_blinds(hour, &cfg, d_bl)));
    }
}
