use deepc_harness::compare::{REFERENCE_DEEPC, REFERENCE_NOTE, REFERENCE_RBC};
use deepc_harness::{compare_report, HarnessError, MetricsReport};

fn report(controller: &str) -> MetricsReport {
    MetricsReport {
        controller: controller.into(),
        seed: 3,
        scenario: "abc".into(),
        hours: 240,
        lbv_per_room_hour: 0.4,
        ubv_per_room_hour: 0.0,
        pct_lbv: 2.5,
        pct_ubv: 0.0,
        cost: 16.0,
        cycles: 4.0,
        capacity_loss: 0.01,
        fallbacks: 0,
    }
}

#[test]
fn identical_reports_give_unit_ratios() {
    let c = compare_report(&report("deepc"), &report("rbc")).unwrap();
    assert_eq!(c.rows.len(), 7);
    assert!(c.rows.iter().all(|r| r.ratio == 1.0));
}

#[test]
fn ratios_are_deepc_over_rbc() {
    let mut d = report("deepc");
    d.cycles = 2.0;
    let c = compare_report(&d, &report("rbc")).unwrap();
    assert_eq!(c.row("cycles").unwrap().ratio, 0.5);
    assert_eq!(c.row("cost_chf").unwrap().ratio, 1.0);
}

#[test]
fn reports_from_different_scenarios_are_refused() {
    let base = report("rbc");
    for other in [
        MetricsReport { seed: 4, ..report("deepc") },
        MetricsReport { scenario: "xyz".into(), ..report("deepc") },
        MetricsReport { hours: 24, ..report("deepc") },
    ] {
        assert!(matches!(compare_report(&other, &base), Err(HarnessError::ScenarioMismatch(_))));
    }
}

#[test]
fn reference_rows_are_rendered_verbatim() {
    assert_eq!(REFERENCE_DEEPC, [0.4, 0.0, 2.8, 0.2, 5909.8]);
    assert_eq!(REFERENCE_RBC, [0.8, 0.2, 5.5, 3.5, 5961.7]);
    let c = compare_report(&report("deepc"), &report("rbc")).unwrap();
    let text = c.to_text();
    assert!(text.contains(REFERENCE_NOTE));
    assert!(text.contains("not directly comparable"));
    assert!(text.contains("5909.8") && text.contains("5961.7"));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("compare.csv");
    c.write_csv(&path).unwrap();
    let mut rd = csv::Reader::from_path(&path).unwrap();
    let rows: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 7 + 5);
    let cost = rows.iter().find(|r| &r[0] == "reference_cost_chf").unwrap();
    assert_eq!((&cost[1], &cost[2], &cost[4]), ("5909.8", "5961.7", REFERENCE_NOTE));
    assert!(rows[..7].iter().all(|r| r[4].is_empty()));
}
