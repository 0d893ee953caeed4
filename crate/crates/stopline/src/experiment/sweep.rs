//! Controller comparison sweeps: run every (demand level, controller,
//! sample count, seed) cell of a spec, write one vehicle table per cell plus
//! `cells.csv` and `summary.csv`, and report percentage changes against the
//! matching expected-inflow baseline.
//!
//! Cells are independent of one another; this runner executes them in a
//! fixed order so the log reads chronologically. All CSV output is
//! deterministic for a given spec: floats are rendered in their shortest
//! exact decimal form and wall-clock times go only to the run log.

use super::scenario::Scenario;
use super::ExperimentError;
use crate::sampler::SamplerConfig;
use crate::scheduler::SolverParams;
use crate::sim::{
    run_episode, summarize, write_vehicle_csv, DecisionTotals, DelaySummary, PlannerConfig,
    SimConfig, TrafficModel,
};
use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

/// The four controller variants under comparison: scheduling against turn
/// samples (TuS) or against the single expected inflow (SUR), each either
/// uncoordinated (U) or coordinated with its neighbors (C).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum ControllerKind {
    UTuS,
    CTuS,
    USUR,
    CSUR,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 4] = [
        ControllerKind::UTuS,
        ControllerKind::CTuS,
        ControllerKind::USUR,
        ControllerKind::CSUR,
    ];

    /// Exchanges outflow projections with neighboring intersections.
    pub fn coordinated(self) -> bool {
        matches!(self, ControllerKind::CTuS | ControllerKind::CSUR)
    }

    /// Schedules against sampled turn realizations rather than the expected
    /// inflow.
    pub fn sampled(self) -> bool {
        matches!(self, ControllerKind::UTuS | ControllerKind::CTuS)
    }

    /// The expected-inflow variant this one is measured against.
    pub fn baseline(self) -> Option<ControllerKind> {
        match self {
            ControllerKind::UTuS => Some(ControllerKind::USUR),
            ControllerKind::CTuS => Some(ControllerKind::CSUR),
            _ => None,
        }
    }

    /// `UTuS10`, `CTuS5`, `USUR`, ... the conventional short form of a
    /// controller plus its sample count (dropped for the SUR variants).
    pub fn label(self, samples: usize) -> String {
        if self.sampled() {
            format!("{self}{samples}")
        } else {
            self.to_string()
        }
    }

    /// Planner settings for one cell, carrying the scenario's horizon and
    /// clustering defaults. `samples` is ignored by the SUR variants.
    pub fn planner(
        self,
        scenario: &Scenario,
        sim: &SimConfig,
        samples: usize,
        guided: bool,
        time_limit: f64,
    ) -> PlannerConfig {
        PlannerConfig {
            model: if self.sampled() {
                TrafficModel::Sampled { count: samples }
            } else {
                TrafficModel::Expected
            },
            coordinated: self.coordinated(),
            guided,
            horizon_cycles: scenario.defaults.horizon_cycles,
            solver: SolverParams { time_limit, ..SolverParams::default() },
            sampler: SamplerConfig {
                discharge_headway: sim.saturation_headway,
                merge_threshold: scenario.defaults.merge_threshold,
            },
            projection_extension: scenario.defaults.horizon_extension,
            resolution: 1,
        }
    }
}

impl fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ControllerKind::UTuS => "UTuS",
            ControllerKind::CTuS => "CTuS",
            ControllerKind::USUR => "USUR",
            ControllerKind::CSUR => "CSUR",
        })
    }
}

impl FromStr for ControllerKind {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "utus" => Ok(ControllerKind::UTuS),
            "ctus" => Ok(ControllerKind::CTuS),
            "usur" => Ok(ControllerKind::USUR),
            "csur" => Ok(ControllerKind::CSUR),
            _ => Err(ExperimentError::UnknownController(s.to_string())),
        }
    }
}

/// One experiment matrix over a scenario.
#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub scenario: Scenario,
    pub controllers: Vec<ControllerKind>,
    /// Scenario counts for the TuS variants; SUR variants always run the
    /// single expected scenario.
    pub sample_counts: Vec<usize>,
    /// Seed every solve with the previous decision's shifted plan.
    pub guided: bool,
    /// One episode per seed; the seed drives demand, turns, and samplers.
    pub seeds: Vec<u64>,
    /// Solver budget per decision, seconds.
    pub time_limit: f64,
    /// Demand levels to run; empty means every level of the scenario.
    pub levels: Vec<f64>,
    pub sim: SimConfig,
}

impl SweepSpec {
    /// The full matrix for a scenario: all four controllers, ten samples,
    /// twenty seeds, every demand level, five-second solves.
    pub fn new(scenario: Scenario) -> Self {
        SweepSpec {
            scenario,
            controllers: ControllerKind::ALL.to_vec(),
            sample_counts: vec![10],
            guided: false,
            seeds: (0..20).collect(),
            time_limit: 5.0,
            levels: Vec::new(),
            sim: SimConfig::default(),
        }
    }

    fn check(&self) -> Result<(), ExperimentError> {
        let bad = |msg: String| Err(ExperimentError::BadSweep(msg));
        if self.controllers.is_empty() {
            return bad("no controllers listed".into());
        }
        if self.seeds.is_empty() {
            return bad("no seeds listed".into());
        }
        if !(self.time_limit > 0.0) {
            return bad(format!("solver time limit {} must be positive", self.time_limit));
        }
        if self.controllers.iter().any(|c| c.sampled()) {
            if self.sample_counts.is_empty() {
                return bad("sampled controllers listed but no sample counts".into());
            }
            if let Some(zero) = self.sample_counts.iter().find(|&&n| n == 0) {
                return bad(format!("sample count {zero} must be at least 1"));
            }
        }
        self.scenario.defaults.check()
    }

    /// Demand levels this sweep will run.
    fn levels(&self) -> &[f64] {
        if self.levels.is_empty() {
            &self.scenario.demand_levels
        } else {
            &self.levels
        }
    }
}

/// What one successful cell measured.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct CellMetrics {
    pub delay: DelaySummary,
    pub totals: DecisionTotals,
    pub generated: usize,
}

/// One cell of the matrix and its outcome. A failed cell carries the error
/// text instead of aborting the sweep.
#[derive(Clone, PartialEq, Debug)]
pub struct CellResult {
    pub level: f64,
    pub controller: ControllerKind,
    pub samples: usize,
    pub seed: u64,
    pub outcome: Result<CellMetrics, String>,
}

impl CellResult {
    pub fn label(&self) -> String {
        self.controller.label(self.samples)
    }
}

/// One row of `summary.csv`: a (level, controller, samples) group over all
/// its seeds.
#[derive(Clone, PartialEq, Debug)]
pub struct SummaryRow {
    pub level: f64,
    pub controller: ControllerKind,
    pub samples: usize,
    pub seeds: usize,
    pub failed: usize,
    /// Mean and sample standard deviation of per-episode mean delay over
    /// the successful seeds; absent when every cell failed.
    pub delay: Option<(f64, f64)>,
    /// Percentage change in mean delay against the matching baseline
    /// controller, paired per seed: mean and sample standard deviation.
    /// Absent for baselines themselves and when no pair completed.
    pub pct_vs_baseline: Option<(f64, f64)>,
    pub baseline: Option<ControllerKind>,
}

/// Everything a sweep produced, in cell execution order.
#[derive(Clone, PartialEq, Debug)]
pub struct SweepOutput {
    pub cells: Vec<CellResult>,
    pub summary: Vec<SummaryRow>,
}

fn mean_and_sample_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Aggregates cells into summary rows, in group first-appearance order.
/// Pure over the cell values, so the summary can be recomputed exactly from
/// a parsed `cells.csv`.
pub fn summarize_cells(cells: &[CellResult]) -> Vec<SummaryRow> {
    let mut rows: Vec<SummaryRow> = Vec::new();
    let mut groups: Vec<(f64, ControllerKind, usize, Vec<&CellResult>)> = Vec::new();
    for cell in cells {
        match groups.iter_mut().find(|(level, ctrl, samples, _)| {
            *level == cell.level && *ctrl == cell.controller && *samples == cell.samples
        }) {
            Some((_, _, _, members)) => members.push(cell),
            None => groups.push((cell.level, cell.controller, cell.samples, vec![cell])),
        }
    }
    let paired_delay = |level: f64, kind: ControllerKind, seed: u64| -> Option<f64> {
        cells
            .iter()
            .find(|c| c.level == level && c.controller == kind && c.seed == seed)
            .and_then(|c| c.outcome.as_ref().ok())
            .map(|m| m.delay.mean_delay)
    };
    for (level, controller, samples, members) in groups {
        let ok: Vec<f64> = members
            .iter()
            .filter_map(|c| c.outcome.as_ref().ok())
            .map(|m| m.delay.mean_delay)
            .collect();
        let baseline = controller.baseline();
        let pcts: Vec<f64> = baseline
            .map(|base| {
                members
                    .iter()
                    .filter_map(|c| {
                        let own = c.outcome.as_ref().ok()?.delay.mean_delay;
                        let other = paired_delay(level, base, c.seed)?;
                        Some(100.0 * (own - other) / other)
                    })
                    .collect()
            })
            .unwrap_or_default();
        rows.push(SummaryRow {
            level,
            controller,
            samples,
            seeds: members.len(),
            failed: members.iter().filter(|c| c.outcome.is_err()).count(),
            delay: (!ok.is_empty()).then(|| mean_and_sample_std(&ok)),
            pct_vs_baseline: (!pcts.is_empty()).then(|| mean_and_sample_std(&pcts)),
            baseline,
        });
    }
    rows
}

/// Renders `cells.csv`. Failed cells keep their key columns and leave the
/// measurements empty; the error text lives in the run log.
pub fn render_cells_csv(scenario: &str, cells: &[CellResult]) -> String {
    let mut out = String::from(
        "scenario,level,controller,samples,seed,status,vehicles,mean_delay,max_delay,makespan,\
         decisions,solver_nodes,budget_exhausted,warm_accepted\n",
    );
    for c in cells {
        let key = format!("{scenario},{},{},{},{}", c.level, c.controller, c.samples, c.seed);
        match &c.outcome {
            Ok(m) => out.push_str(&format!(
                "{key},ok,{},{},{},{},{},{},{},{}\n",
                m.delay.vehicles,
                m.delay.mean_delay,
                m.delay.max_delay,
                m.delay.makespan,
                m.totals.decisions,
                m.totals.solver_nodes,
                m.totals.budget_exhausted,
                m.totals.warm_accepted,
            )),
            Err(_) => out.push_str(&format!("{key},failed,,,,,,,\n")),
        }
    }
    out
}

/// Renders `summary.csv` from [`summarize_cells`] rows.
pub fn render_summary_csv(scenario: &str, rows: &[SummaryRow]) -> String {
    let mut out = String::from(
        "scenario,level,controller,samples,seeds,failed,mean_delay,std_delay,baseline,\
         pct_vs_baseline_mean,pct_vs_baseline_std\n",
    );
    for r in rows {
        let (mean, std) = match r.delay {
            Some((m, s)) => (m.to_string(), s.to_string()),
            None => (String::new(), String::new()),
        };
        let base = r.baseline.map(|b| b.to_string()).unwrap_or_default();
        let (pm, ps) = match r.pct_vs_baseline {
            Some((m, s)) => (m.to_string(), s.to_string()),
            None => (String::new(), String::new()),
        };
        out.push_str(&format!(
            "{scenario},{},{},{},{},{},{mean},{std},{base},{pm},{ps}\n",
            r.level, r.controller, r.samples, r.seeds, r.failed
        ));
    }
    out
}

/// Writes a file through a temporary sibling and a rename, so readers never
/// observe a half-written table.
fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = Path::new(&tmp);
    fs::write(tmp, bytes)?;
    fs::rename(tmp, path)
}

/// Runs the full matrix, writing into `out_dir`:
///
/// - `scenario.toml`: the exact scenario the sweep ran;
/// - `vehicles_{label}_{level}_s{seed}.csv`: per-vehicle delays per cell;
/// - `cells.csv`: one row per cell;
/// - `summary.csv`: per-group statistics and baseline comparisons;
/// - `run.log`: progress, errors, and wall-clock times.
///
/// A failing cell is recorded and the sweep continues.
pub fn run_sweep(spec: &SweepSpec, out_dir: impl AsRef<Path>) -> Result<SweepOutput, ExperimentError> {
    let out_dir = out_dir.as_ref();
    spec.check()?;
    fs::create_dir_all(out_dir)?;
    super::config::save_scenario(&spec.scenario, out_dir.join("scenario.toml"))?;

    let mut log = fs::File::create(out_dir.join("run.log"))?;
    writeln!(
        log,
        "sweep scenario={} levels={:?} controllers={} sample_counts={:?} guided={} \
         time_limit={}s seeds={:?}",
        spec.scenario.name,
        spec.levels(),
        spec.controllers.iter().map(ToString::to_string).collect::<Vec<_>>().join("+"),
        spec.sample_counts,
        spec.guided,
        spec.time_limit,
        spec.seeds,
    )?;

    let mut cells = Vec::new();
    for &level in spec.levels() {
        for &controller in &spec.controllers {
            let counts: &[usize] = if controller.sampled() { &spec.sample_counts } else { &[1] };
            for &samples in counts {
                for &seed in &spec.seeds {
                    let planner =
                        controller.planner(&spec.scenario, &spec.sim, samples, spec.guided, spec.time_limit);
                    let demand = spec.scenario.demand_at(level);
                    let name = controller.label(samples);
                    let started = Instant::now();
                    let outcome = run_episode(
                        &spec.scenario.topology,
                        &planner,
                        &demand,
                        &spec.sim,
                        seed,
                    );
                    let wall = started.elapsed().as_secs_f64();
                    let outcome = match outcome {
                        Ok(ep) => {
                            let mut csv = Vec::new();
                            write_vehicle_csv(&mut csv, &ep.finished)?;
                            write_atomic(
                                &out_dir.join(format!("vehicles_{name}_{level}_s{seed}.csv")),
                                &csv,
                            )?;
                            let metrics = CellMetrics {
                                delay: summarize(&ep.finished),
                                totals: ep.totals,
                                generated: ep.generated,
                            };
                            writeln!(
                                log,
                                "cell {name} level={level} seed={seed}: ok \
                                 vehicles={} mean_delay={:.3} end={:.1} decisions={} wall={wall:.2}s",
                                metrics.delay.vehicles,
                                metrics.delay.mean_delay,
                                ep.end_time,
                                metrics.totals.decisions,
                            )?;
                            Ok(metrics)
                        }
                        Err(e) => {
                            writeln!(
                                log,
                                "cell {name} level={level} seed={seed}: FAILED after {wall:.2}s: {e}"
                            )?;
                            Err(e.to_string())
                        }
                    };
                    cells.push(CellResult { level, controller, samples, seed, outcome });
                }
            }
        }
    }

    let summary = summarize_cells(&cells);
    write_atomic(&out_dir.join("cells.csv"), render_cells_csv(&spec.scenario.name, &cells).as_bytes())?;
    write_atomic(
        &out_dir.join("summary.csv"),
        render_summary_csv(&spec.scenario.name, &summary).as_bytes(),
    )?;
    let failed = cells.iter().filter(|c| c.outcome.is_err()).count();
    writeln!(log, "done: {} cells, {failed} failed", cells.len())?;
    Ok(SweepOutput { cells, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::build_scenario;

    #[test]
    fn controller_tokens_parse_case_insensitively() {
        for kind in ControllerKind::ALL {
            assert_eq!(kind.to_string().parse::<ControllerKind>().unwrap(), kind);
            assert_eq!(kind.to_string().to_lowercase().parse::<ControllerKind>().unwrap(), kind);
        }
        assert!("surtrac".parse::<ControllerKind>().is_err());
        assert_eq!(ControllerKind::UTuS.label(10), "UTuS10");
        assert_eq!(ControllerKind::CSUR.label(10), "CSUR");
    }

    #[test]
    fn baselines_pair_sampled_with_expected() {
        assert_eq!(ControllerKind::UTuS.baseline(), Some(ControllerKind::USUR));
        assert_eq!(ControllerKind::CTuS.baseline(), Some(ControllerKind::CSUR));
        assert_eq!(ControllerKind::USUR.baseline(), None);
        assert!(ControllerKind::CTuS.coordinated() && ControllerKind::CTuS.sampled());
        assert!(!ControllerKind::USUR.coordinated() && !ControllerKind::USUR.sampled());
    }

    fn cell(
        controller: ControllerKind,
        samples: usize,
        seed: u64,
        mean_delay: f64,
    ) -> CellResult {
        CellResult {
            level: 900.0,
            controller,
            samples,
            seed,
            outcome: Ok(CellMetrics {
                delay: DelaySummary { vehicles: 10, mean_delay, max_delay: 0.0, makespan: 0.0 },
                totals: DecisionTotals::default(),
                generated: 10,
            }),
        }
    }

    #[test]
    fn percentage_change_is_paired_per_seed() {
        let cells = vec![
            cell(ControllerKind::UTuS, 10, 0, 10.0),
            cell(ControllerKind::UTuS, 10, 1, 20.0),
            cell(ControllerKind::USUR, 1, 0, 20.0),
            cell(ControllerKind::USUR, 1, 1, 25.0),
        ];
        let rows = summarize_cells(&cells);
        assert_eq!(rows.len(), 2);
        let utus = &rows[0];
        // Seed 0: (10-20)/20 = -50%; seed 1: (20-25)/25 = -20%.
        let (pm, ps) = utus.pct_vs_baseline.unwrap();
        assert_eq!(pm, -35.0);
        assert_eq!(ps, 450.0_f64.sqrt());
        assert_eq!(utus.delay.unwrap().0, 15.0);
        assert_eq!(rows[1].pct_vs_baseline, None);
        assert_eq!(rows[1].baseline, None);
    }

    #[test]
    fn failed_and_unpaired_cells_drop_out_of_the_statistics() {
        let mut broken = cell(ControllerKind::USUR, 1, 1, 0.0);
        broken.outcome = Err("gridlock".into());
        let cells = vec![
            cell(ControllerKind::UTuS, 10, 0, 10.0),
            cell(ControllerKind::UTuS, 10, 1, 20.0),
            cell(ControllerKind::USUR, 1, 0, 20.0),
            broken,
        ];
        let rows = summarize_cells(&cells);
        // Only seed 0 has both sides: -50% with zero spread.
        assert_eq!(rows[0].pct_vs_baseline, Some((-50.0, 0.0)));
        assert_eq!(rows[1].failed, 1);
        assert_eq!(rows[1].delay, Some((20.0, 0.0)));
    }

    #[test]
    fn bad_specs_are_rejected_before_running() {
        let scenario = build_scenario("isolated").unwrap();
        let dir = tempfile::tempdir().unwrap();
        let mut spec = SweepSpec::new(scenario);
        spec.controllers.clear();
        assert!(run_sweep(&spec, dir.path()).is_err());
        let mut spec = SweepSpec::new(build_scenario("isolated").unwrap());
        spec.sample_counts = vec![0];
        assert!(run_sweep(&spec, dir.path()).is_err());
    }

    #[test]
    fn a_small_sweep_writes_every_table() {
        let mut scenario = build_scenario("isolated").unwrap();
        scenario.demand.duration = 60.0;
        let mut spec = SweepSpec::new(scenario);
        spec.controllers = vec![ControllerKind::UTuS, ControllerKind::USUR];
        spec.sample_counts = vec![2];
        spec.seeds = vec![0, 1];
        spec.levels = vec![360.0];
        spec.time_limit = 0.02;
        let dir = tempfile::tempdir().unwrap();
        let out = run_sweep(&spec, dir.path()).unwrap();
        assert_eq!(out.cells.len(), 4);
        assert!(out.cells.iter().all(|c| c.outcome.is_ok()));
        for file in ["scenario.toml", "cells.csv", "summary.csv", "run.log"] {
            assert!(dir.path().join(file).exists(), "{file} missing");
        }
        for c in &out.cells {
            let name = format!("vehicles_{}_360_s{}.csv", c.label(), c.seed);
            assert!(dir.path().join(&name).exists(), "{name} missing");
        }
        assert_eq!(out.summary.len(), 2);
        assert!(out.summary[0].pct_vs_baseline.is_some());
        assert_eq!(out.summary[1].baseline, None);
        // The summary is recomputable from the cells alone.
        assert_eq!(summarize_cells(&out.cells), out.summary);
    }
}
