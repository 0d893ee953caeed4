//! Command-line front end: `scenario` emits a built-in network as a TOML
//! file, `run` simulates one episode, `sweep` runs a controller comparison
//! matrix. All of the logic lives in the library; this file only parses
//! arguments and routes bytes.

use clap::{Parser, Subcommand};
use std::error::Error;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;
use stopline::experiment::{
    build_scenario, load_scenario, run_sweep, save_scenario, scenario_to_toml, ControllerKind,
    Scenario, SweepSpec, SCENARIO_NAMES,
};
use stopline::sim::{run_episode, summarize, write_vehicle_csv, SimConfig};

#[derive(Parser)]
#[command(name = "stopline", version, about = "Schedule-driven traffic signal control testbed")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a built-in scenario as a TOML file.
    Scenario {
        /// One of: isolated, arterial_1x5, grid_5x5.
        #[arg(long)]
        scenario: String,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one episode and write its per-vehicle delay table.
    Run {
        /// Built-in scenario name or path to a scenario TOML file.
        #[arg(long)]
        scenario: String,
        /// UTuS, CTuS, USUR, or CSUR.
        #[arg(long, default_value = "UTuS")]
        controller: String,
        /// Demand in vehicles/hour; the scenario's first level when omitted.
        #[arg(long)]
        level: Option<f64>,
        /// Turn scenarios per decision (TuS controllers only).
        #[arg(long, default_value_t = 10)]
        samples: usize,
        /// Episode seed.
        #[arg(long, default_value_t = 0)]
        seeds: u64,
        /// Seed each solve with the previous decision's shifted plan.
        #[arg(long)]
        guided_search: bool,
        /// Solver budget per decision, seconds.
        #[arg(long, default_value_t = 5.0)]
        time_limit: f64,
        /// Simulation step, seconds; must divide one second.
        #[arg(long, default_value_t = 0.5)]
        tick: f64,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run the full controller-by-demand matrix and write summary tables.
    Sweep {
        /// Built-in scenario name or path to a scenario TOML file.
        #[arg(long)]
        scenario: String,
        /// Comma-separated subset of UTuS, CTuS, USUR, CSUR.
        #[arg(long, default_value = "UTuS,CTuS,USUR,CSUR")]
        controller: String,
        /// Comma-separated demand levels; the scenario's own when omitted.
        #[arg(long)]
        level: Option<String>,
        /// Comma-separated sample counts for the TuS controllers.
        #[arg(long, default_value = "10")]
        samples: String,
        /// Comma-separated seeds, or a start..end range (end exclusive).
        #[arg(long, default_value = "0..20")]
        seeds: String,
        /// Seed each solve with the previous decision's shifted plan.
        #[arg(long)]
        guided_search: bool,
        /// Solver budget per decision, seconds.
        #[arg(long, default_value_t = 5.0)]
        time_limit: f64,
        /// Simulation step, seconds; must divide one second.
        #[arg(long, default_value_t = 0.5)]
        tick: f64,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
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

fn dispatch(cli: Cli) -> Result<(), Box<dyn Error>> {
    match cli.cmd {
        Cmd::Scenario { scenario, out } => {
            let s = build_scenario(&scenario)?;
            match out {
                Some(path) => save_scenario(&s, path)?,
                None => print!("{}", scenario_to_toml(&s)?),
            }
            Ok(())
        }
        Cmd::Run {
            scenario,
            controller,
            level,
            samples,
            seeds,
            guided_search,
            time_limit,
            tick,
            out,
        } => {
            let s = resolve_scenario(&scenario)?;
            let kind: ControllerKind = controller.parse()?;
            let level = level.unwrap_or(s.demand_levels[0]);
            let sim = SimConfig { tick, ..SimConfig::default() };
            let planner = kind.planner(&s, &sim, samples, guided_search, time_limit);
            let started = Instant::now();
            let ep = run_episode(&s.topology, &planner, &s.demand_at(level), &sim, seeds)?;
            let wall = started.elapsed().as_secs_f64();

            fs::create_dir_all(&out)?;
            save_scenario(&s, out.join("scenario.toml"))?;
            let mut csv = Vec::new();
            write_vehicle_csv(&mut csv, &ep.finished)?;
            fs::write(out.join("vehicles.csv"), csv)?;
            let d = summarize(&ep.finished);
            let line = format!(
                "{} on {} at {level} vph, seed {seeds}: {} vehicles, \
                 mean delay {:.3}s, max {:.3}s, drained at {:.1}s",
                kind.label(samples),
                s.name,
                d.vehicles,
                d.mean_delay,
                d.max_delay,
                ep.end_time,
            );
            let mut log = fs::File::create(out.join("run.log"))?;
            writeln!(
                log,
                "run scenario={} controller={} level={level} seed={seeds} guided={guided_search} \
                 time_limit={time_limit}s tick={tick}",
                s.name,
                kind.label(samples),
            )?;
            writeln!(log, "{line}")?;
            writeln!(
                log,
                "decisions={} solver_nodes={} budget_exhausted={} warm_accepted={} wall={wall:.2}s",
                ep.totals.decisions,
                ep.totals.solver_nodes,
                ep.totals.budget_exhausted,
                ep.totals.warm_accepted,
            )?;
            println!("{line}");
            println!("wrote {}", out.join("vehicles.csv").display());
            Ok(())
        }
        Cmd::Sweep {
            scenario,
            controller,
            level,
            samples,
            seeds,
            guided_search,
            time_limit,
            tick,
            out,
        } => {
            let spec = SweepSpec {
                scenario: resolve_scenario(&scenario)?,
                controllers: controller
                    .split(',')
                    .map(|t| t.trim().parse())
                    .collect::<Result<_, _>>()?,
                sample_counts: parse_list(&samples)?,
                guided: guided_search,
                seeds: parse_seeds(&seeds)?,
                time_limit,
                levels: match level {
                    Some(text) => parse_list(&text)?,
                    None => Vec::new(),
                },
                sim: SimConfig { tick, ..SimConfig::default() },
            };
            let output = run_sweep(&spec, &out)?;
            let failed = output.cells.iter().filter(|c| c.outcome.is_err()).count();
            println!(
                "{} cells ({failed} failed); tables in {}",
                output.cells.len(),
                out.display()
            );
            for row in &output.summary {
                let delay = match row.delay {
                    Some((m, s)) => format!("mean delay {m:.3} +- {s:.3}s"),
                    None => "all cells failed".to_string(),
                };
                let pct = match (row.baseline, row.pct_vs_baseline) {
                    (Some(b), Some((m, s))) => format!(", {m:+.1}% +- {s:.1}% vs {b}"),
                    (Some(b), None) => format!(", no completed pair vs {b}"),
                    (None, _) => String::new(),
                };
                println!(
                    "  {} at {} vph over {} seeds: {delay}{pct}",
                    row.controller.label(row.samples),
                    row.level,
                    row.seeds,
                );
            }
            Ok(())
        }
    }
}

/// A `--scenario` argument is a built-in name first, a file path second.
fn resolve_scenario(arg: &str) -> Result<Scenario, Box<dyn Error>> {
    if SCENARIO_NAMES.contains(&arg) {
        return Ok(build_scenario(arg)?);
    }
    if Path::new(arg).exists() {
        return Ok(load_scenario(arg)?);
    }
    Err(format!(
        "{arg:?} is neither a built-in scenario ({}) nor an existing file",
        SCENARIO_NAMES.join(", ")
    )
    .into())
}

fn parse_list<T: std::str::FromStr>(text: &str) -> Result<Vec<T>, Box<dyn Error>>
where
    T::Err: Error + 'static,
{
    text.split(',')
        .map(|t| t.trim().parse::<T>().map_err(|e| format!("{t:?}: {e}").into()))
        .collect()
}

fn parse_seeds(text: &str) -> Result<Vec<u64>, Box<dyn Error>> {
    if let Some((a, b)) = text.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse()?, b.trim().parse()?);
        if b <= a {
            return Err(format!("seed range {text:?} is empty").into());
        }
        return Ok((a..b).collect());
    }
    parse_list(text)
}
