use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use deepc_harness::collect::channel_info;
use deepc_harness::{
    build_controller, collect_data, collect_trajectory, compare_report, compute_prediction_error,
    compute_violation_metrics, pe_report, run_episode, Controller, EpisodeLog, HarnessError, MetricsReport,
    ScenarioConfig,
};

/// Energy-hub experiments: data collection, closed-loop runs and reports.
#[derive(Parser)]
#[command(name = "deepc-hub", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Scenario {
    /// Scenario TOML; keys left out take the full-scale defaults. Without
    /// this flag the desk-scale scenario is used.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Episode length in days.
    #[arg(long)]
    days: Option<usize>,
}

impl Scenario {
    fn load(&self) -> Result<ScenarioConfig, HarnessError> {
        let mut cfg = match &self.config {
            Some(path) => ScenarioConfig::load(path)?,
            None => ScenarioConfig::desk_scale(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(days) = self.days {
            cfg.horizon_days = days;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Deepc,
    Rbc,
}

#[derive(Subcommand)]
enum Command {
    /// Record the excitation experiment and write the trajectory.
    Collect {
        #[command(flatten)]
        scenario: Scenario,
        #[arg(long, default_value = "out/data")]
        out: PathBuf,
    },
    /// Run one closed-loop episode.
    Run {
        #[arg(long, value_enum)]
        controller: Kind,
        #[command(flatten)]
        scenario: Scenario,
        #[arg(long, default_value = "out/run")]
        out: PathBuf,
    },
    /// Comfort, cost and ageing metrics of an episode directory.
    Metrics {
        /// Directory written by `run`.
        #[arg(long)]
        log: PathBuf,
        /// Scenario of the run; defaults to the copy stored next to the log.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory; defaults to the log directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pair a DeePC and a rule-based metrics file.
    Compare {
        #[arg(long)]
        deepc: PathBuf,
        #[arg(long)]
        rbc: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Collect data and report the persistency-of-excitation check.
    ValidatePe {
        #[command(flatten)]
        scenario: Scenario,
    },
}

const SCENARIO_TOML: &str = "scenario.toml";

fn collect(cfg: &ScenarioConfig, out: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(out)?;
    let (traj, seeds) = collect_trajectory(cfg, true)?;
    let pe = pe_report(cfg, &traj)?;
    let (u, y) = channel_info();
    traj.write_csv(&out.join("trajectory.csv"), &u, &y)?;
    fs::write(out.join(SCENARIO_TOML), cfg.to_toml())?;
    if let Some(seeds) = seeds {
        let text = toml::to_string(&seeds).map_err(|e| HarnessError::Config(e.to_string()))?;
        fs::write(out.join("prbs_seeds.toml"), text)?;
    }
    println!("{} samples written to {}", traj.len(), out.display());
    println!("persistent excitation {pe}");
    if !pe.exciting {
        return Err(HarnessError::NotExciting(pe));
    }
    Ok(())
}

fn run(kind: Kind, cfg: &ScenarioConfig, out: &Path) -> Result<(), HarnessError> {
    let controller = match kind {
        Kind::Rbc => Controller::Rbc,
        Kind::Deepc => {
            let data = collect_data(cfg)?;
            println!("data: {}", data.pe);
            Controller::Deepc(Box::new(build_controller(cfg, &data)?))
        }
    };
    let log = run_episode(cfg, &controller)?;
    fs::create_dir_all(out)?;
    log.write(out)?;
    fs::write(out.join(SCENARIO_TOML), cfg.to_toml())?;
    println!(
        "{} h of {} in {:.1} s, {} fallbacks, written to {}",
        log.records.len(),
        log.header.controller,
        log.header.runtime_s,
        log.header.fallbacks,
        out.display()
    );
    Ok(())
}

fn metrics(log_dir: &Path, config: Option<&Path>, out: Option<&Path>) -> Result<(), HarnessError> {
    let cfg = ScenarioConfig::load(&config.map_or_else(|| log_dir.join(SCENARIO_TOML), Path::to_path_buf))?;
    let log = EpisodeLog::read(log_dir)?;
    let out = out.unwrap_or(log_dir);
    fs::create_dir_all(out)?;
    let report = compute_violation_metrics(&log, &cfg.comfort, &cfg.tariff_profile()?);
    report.write_csv(&out.join("metrics.csv"))?;
    println!(
        "{}: %LBV {:.2} %UBV {:.2} LBV {:.3} UBV {:.3} cost {:.3} CHF cycles {:.3} capacity loss {:.4}%",
        report.controller,
        report.pct_lbv,
        report.pct_ubv,
        report.lbv_per_room_hour,
        report.ubv_per_room_hour,
        report.cost,
        report.cycles,
        report.capacity_loss
    );
    match compute_prediction_error(&log) {
        Ok(eps) => {
            eps.write_csv(&out.join("prediction_error.csv"))?;
            println!("prediction error: room max {:.3} degC, battery max {:.3} V", eps.max_room(), eps.max_battery());
        }
        Err(HarnessError::MissingPredictions) => {}
        Err(e) => return Err(e),
    }
    Ok(())
}

fn compare(deepc: &Path, rbc: &Path, out: &Path) -> Result<(), HarnessError> {
    let c = compare_report(&MetricsReport::read_csv(deepc)?, &MetricsReport::read_csv(rbc)?)?;
    fs::create_dir_all(out)?;
    c.write_csv(&out.join("compare.csv"))?;
    print!("{}", c.to_text());
    Ok(())
}

fn validate_pe(cfg: &ScenarioConfig) -> Result<(), HarnessError> {
    let (traj, _) = collect_trajectory(cfg, true)?;
    let pe = pe_report(cfg, &traj)?;
    println!("{pe}");
    if pe.exciting {
        Ok(())
    } else {
        Err(HarnessError::NotExciting(pe))
    }
}

fn dispatch(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Collect { scenario, out } => collect(&scenario.load()?, &out),
        Command::Run { controller, scenario, out } => run(controller, &scenario.load()?, &out),
        Command::Metrics { log, config, out } => metrics(&log, config.as_deref(), out.as_deref()),
        Command::Compare { deepc, rbc, out } => compare(&deepc, &rbc, &out),
        Command::ValidatePe { scenario } => validate_pe(&scenario.load()?),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
