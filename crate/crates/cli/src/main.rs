//! `hetsim` command-line front end.
//!
//! `run` simulates one strategy, `compare` runs several strategies on the
//! same seed and tabulates them against a baseline, `dump-scenario` writes
//! the generated deployment as an explicit scenario file.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::builder::{PossibleValuesParser, TypedValueParser};
use clap::{Args, Parser, Subcommand};

use hetsim::engine::{self, compare, run_label, MetricsReport, RunSpec};
use hetsim::link::McsTable;
use hetsim::par::Execution;
use hetsim::power::PowerPresets;
use hetsim::scenario::{drop_users, load_scenario, save_scenario, ScenarioFile, SixGConfig, Strategy};

#[derive(Parser)]
#[command(name = "hetsim", version, about = "Downlink system-level simulator for 4G/5G/6G networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one deployment strategy.
    Run {
        #[command(flatten)]
        common: Common,
        /// Deployment strategy; defaults to the scenario file's.
        #[arg(long)]
        strategy: Option<Strategy>,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run several strategies and tabulate them against a baseline.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Strategies to run (repeatable); all five by default.
        #[arg(long)]
        strategy: Vec<Strategy>,
        /// Baseline strategy for the ratio columns.
        #[arg(long, default_value = "FourG_FiveG")]
        baseline: Strategy,
        /// Output directory; one subdirectory per run plus `comparison.csv`.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Write the generated deployment as an explicit scenario file.
    DumpScenario {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        strategy: Option<Strategy>,
        /// Also list the UEs dropped in snapshot 0.
        #[arg(long)]
        with_ues: bool,
        /// Output file.
        #[arg(long, default_value = "scenario.toml")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    /// Scenario TOML file; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    snapshots: Option<usize>,
    /// 6G channel bandwidth in MHz.
    #[arg(long, value_parser = PossibleValuesParser::new(["200", "400"]).map(|s| s.parse::<u32>().unwrap()))]
    sixg_bw: Option<u32>,
    /// 6G transceiver count.
    #[arg(long, value_parser = PossibleValuesParser::new(["128", "256"]).map(|s| s.parse::<u32>().unwrap()))]
    sixg_trx: Option<u32>,
    /// Replacement SINR-to-MCS table (TOML).
    #[arg(long)]
    mcs_table: Option<PathBuf>,
    /// Replacement power presets (TOML).
    #[arg(long)]
    power_presets: Option<PathBuf>,
    /// Disable the thread pool.
    #[arg(long)]
    sequential: bool,
}

impl Common {
    fn scenario(&self) -> Result<ScenarioFile> {
        let mut file = match &self.config {
            Some(p) => load_scenario(p).context("stage scenario: loading config")?,
            None => ScenarioFile::default(),
        };
        if let Some(p) = &self.mcs_table {
            file.model.link.mcs_table = McsTable::load(p).context("stage link: loading MCS table")?;
        }
        if let Some(p) = &self.power_presets {
            file.model.power = PowerPresets::load(p).context("stage power: loading power presets")?;
        }
        Ok(file)
    }

    fn spec(&self, strategy: Option<Strategy>) -> Result<RunSpec> {
        let file = self.scenario()?;
        let base = file.scenario.sixg;
        let sixg = SixGConfig::new(
            self.sixg_bw.unwrap_or(base.bandwidth_mhz),
            self.sixg_trx.unwrap_or(base.n_trx),
        )
        .context("stage scenario: 6G configuration")?;
        let strategy = strategy.unwrap_or(file.scenario.strategy);
        let mut spec = RunSpec::new(file).with_strategy(strategy, sixg);
        if let Some(seed) = self.seed {
            spec = spec.with_seed(seed);
        }
        if let Some(n) = self.snapshots {
            spec = spec.with_snapshots(n);
        }
        if self.sequential {
            spec = spec.with_execution(Execution::Sequential);
        }
        Ok(spec)
    }
}

fn run_one(spec: &RunSpec, out: &Path) -> Result<MetricsReport> {
    let label = run_label(spec.strategy, spec.sixg);
    let t0 = Instant::now();
    let output = engine::run(spec).with_context(|| format!("run {label} failed"))?;
    output
        .write(out)
        .with_context(|| format!("stage report: writing {}", out.display()))?;
    let t = &output.report.throughput_mbps;
    eprintln!(
        "{label}: mean {:.1} Mbps, p5 {:.1}, p50 {:.1}, p95 {:.1}, power {:.1} kW ({:.1?})",
        t.mean,
        t.p5,
        t.p50,
        t.p95,
        output.report.power.total_kw,
        t0.elapsed()
    );
    Ok(output.report)
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { common, strategy, out } => {
            let spec = common.spec(strategy)?;
            run_one(&spec, &out)?;
        }
        Command::Compare {
            common,
            strategy,
            baseline,
            out,
        } => {
            let strategies = if strategy.is_empty() { Strategy::ALL.to_vec() } else { strategy };
            let mut reports = Vec::new();
            for s in &strategies {
                let spec = common.spec(Some(*s))?;
                reports.push(run_one(&spec, &out.join(run_label(spec.strategy, spec.sixg)))?);
            }
            let sixg = reports[0].sixg;
            let table = compare(&reports, &run_label(baseline, sixg)).context("stage report: comparison")?;
            for w in &table.warnings {
                eprintln!("warning: {w}");
            }
            fs::create_dir_all(&out)?;
            let path = out.join("comparison.csv");
            table
                .write_csv(fs::File::create(&path)?)
                .with_context(|| format!("stage report: writing {}", path.display()))?;
        }
        Command::DumpScenario {
            common,
            strategy,
            with_ues,
            out,
        } => {
            let spec = common.spec(strategy)?;
            let (deployment, net) = engine::prepare(&spec)?;
            let ues = if with_ues {
                Some(drop_users(&deployment, 0).context("stage scenario: dropping UEs")?)
            } else {
                None
            };
            let file = spec.effective_scenario();
            let dump = ScenarioFile::from_topology(
                file.scenario,
                file.model,
                &net.topology.sites,
                &net.topology.cells,
                ues.as_deref(),
            );
            save_scenario(&out, &dump).with_context(|| format!("stage scenario: writing {}", out.display()))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
