//! Side-by-side comparison of a DeePC and a rule-based episode.

use std::fmt::Write as _;
use std::path::Path;

use crate::metrics::MetricsReport;
use crate::HarnessError;

/// Published full-scale results: LBV, UBV (°C per violated room-hour),
/// %LBV, %UBV, cost (CHF). Different plant and weather, so only shown for
/// orientation.
pub const REFERENCE_DEEPC: [f64; 5] = [0.4, 0.0, 2.8, 0.2, 5909.8];
pub const REFERENCE_RBC: [f64; 5] = [0.8, 0.2, 5.5, 3.5, 5961.7];
pub const REFERENCE_NOTE: &str = "full-scale reference, not directly comparable";

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub metric: &'static str,
    pub deepc: f64,
    pub rbc: f64,
    /// `deepc / rbc`; 1 when both are zero.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub scenario: String,
    pub seed: u64,
    pub rows: Vec<ComparisonRow>,
}

fn ratio(a: f64, b: f64) -> f64 {
    if a == b {
        1.0
    } else {
        a / b
    }
}

/// Pair two reports from the same scenario.
pub fn compare_report(deepc: &MetricsReport, rbc: &MetricsReport) -> Result<Comparison, HarnessError> {
    if deepc.scenario != rbc.scenario || deepc.seed != rbc.seed || deepc.hours != rbc.hours {
        return Err(HarnessError::ScenarioMismatch(format!(
            "scenario {} seed {} ({} h) vs scenario {} seed {} ({} h)",
            deepc.scenario, deepc.seed, deepc.hours, rbc.scenario, rbc.seed, rbc.hours
        )));
    }
    let fields: [(&'static str, fn(&MetricsReport) -> f64); 7] = [
        ("lbv_per_room_hour_c", |r| r.lbv_per_room_hour),
        ("ubv_per_room_hour_c", |r| r.ubv_per_room_hour),
        ("pct_lbv", |r| r.pct_lbv),
        ("pct_ubv", |r| r.pct_ubv),
        ("cost_chf", |r| r.cost),
        ("cycles", |r| r.cycles),
        ("capacity_loss_pct", |r| r.capacity_loss),
    ];
    let rows = fields
        .iter()
        .map(|&(metric, get)| ComparisonRow { metric, deepc: get(deepc), rbc: get(rbc), ratio: ratio(get(deepc), get(rbc)) })
        .collect();
    Ok(Comparison { scenario: deepc.scenario.clone(), seed: deepc.seed, rows })
}

impl Comparison {
    pub fn row(&self, metric: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.metric == metric)
    }

    /// `metric,deepc,rbc,ratio,note` with the reference rows at the end.
    pub fn write_csv(&self, path: &Path) -> Result<(), HarnessError> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["metric", "deepc", "rbc", "ratio", "note"])?;
        for r in &self.rows {
            w.write_record([r.metric, &r.deepc.to_string(), &r.rbc.to_string(), &r.ratio.to_string(), ""])?;
        }
        for (i, name) in ["lbv_per_room_hour_c", "ubv_per_room_hour_c", "pct_lbv", "pct_ubv", "cost_chf"].iter().enumerate() {
            let (d, b) = (REFERENCE_DEEPC[i], REFERENCE_RBC[i]);
            w.write_record([
                &format!("reference_{name}"),
                &d.to_string(),
                &b.to_string(),
                &ratio(d, b).to_string(),
                REFERENCE_NOTE,
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "scenario {} seed {}", self.scenario, self.seed);
        let _ = writeln!(s, "{:<22} {:>12} {:>12} {:>8}", "metric", "deepc", "rbc", "ratio");
        for r in &self.rows {
            let _ = writeln!(s, "{:<22} {:>12.4} {:>12.4} {:>8.3}", r.metric, r.deepc, r.rbc, r.ratio);
        }
        let _ = writeln!(s, "\n{REFERENCE_NOTE}:");
        let _ = writeln!(s, "{:<8} {:>6} {:>6} {:>6} {:>6} {:>9}", "", "LBV", "UBV", "%LBV", "%UBV", "cost");
        for (name, v) in [("DeePC", REFERENCE_DEEPC), ("RBC", REFERENCE_RBC)] {
            let _ = writeln!(s, "{name:<8} {:>6} {:>6} {:>6} {:>6} {:>9}", v[0], v[1], v[2], v[3], v[4]);
        }
        s
    }
}
