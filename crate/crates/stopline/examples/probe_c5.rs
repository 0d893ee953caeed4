// Temporary diagnostic: per-phase delay and green allocation, UTuS10 vs USUR.

use std::collections::BTreeMap;

use stopline::experiment::build_scenario;
use stopline::sim::{
    generate_traffic, summarize, Engine, PlannerConfig, ShareBand,
    SignalEventKind, TrafficModel,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sc = build_scenario("isolated")?;
    let mut demand = sc.demand_at(900.0);
    let topo = &sc.topology;
    let pm = &topo.intersections[0].phase_model;
    let profile = std::env::args().nth(3).unwrap_or_else(|| "uniform".into());
    let rid = |n: &str| topo.road_by_name(n).unwrap();
    let band = |from: f64, sh: [f64; 4]| ShareBand {
        from,
        shares: vec![
            (rid("n>x"), sh[0]),
            (rid("e>x"), sh[1]),
            (rid("s>x"), sh[2]),
            (rid("w>x"), sh[3]),
        ],
    };
    demand.bands = match profile.as_str() {
        "uniform" => vec![],
        "peaks" => vec![
            band(0.0, [0.40, 0.15, 0.30, 0.15]),
            band(300.0, [0.15, 0.40, 0.15, 0.30]),
            band(600.0, [0.25, 0.25, 0.25, 0.25]),
        ],
        "hard" => vec![
            band(0.0, [0.45, 0.05, 0.45, 0.05]),
            band(450.0, [0.05, 0.45, 0.05, 0.45]),
        ],
        "surge" => vec![
            band(0.0, [0.25, 0.25, 0.25, 0.25]),
            band(300.0, [0.55, 0.10, 0.25, 0.10]),
            band(600.0, [0.25, 0.25, 0.25, 0.25]),
        ],
        other => panic!("unknown profile {other}"),
    };
    let demand = demand;
    eprintln!("profile {profile}");

    let tl: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(0.5);
    let seeds: u64 = std::env::args().nth(2).and_then(|a| a.parse().ok()).unwrap_or(3);
    for seed in 0..seeds {
        let traffic = generate_traffic(topo, &demand, seed)?;
        // Phase serving each vehicle's first movement, keyed by id.
        let mut phase_of: BTreeMap<u64, usize> = BTreeMap::new();
        for v in &traffic {
            let (e, x) = (v.route[0], v.route[1]);
            let k = (0..pm.len())
                .find(|&k| pm.phase(k).turns.iter().any(|t| t.entry == e && t.exit == x))
                .unwrap();
            phase_of.insert(v.id.0, k);
        }

        for (label, model) in [
            ("UTuS10", TrafficModel::Sampled { count: 10 }),
            ("USUR  ", TrafficModel::Expected),
        ] {
            let planner = PlannerConfig {
                model,
                solver: stopline::scheduler::SolverParams {
                    time_limit: tl,
                    nodes_per_second: 200_000,
                },
                ..PlannerConfig::default()
            };
            let traffic = generate_traffic(topo, &demand, seed)?;
            let cfg = stopline::sim::SimConfig::default();
            let res = Engine::new(topo, cfg, planner, traffic, seed)?.run()?;

            let mut delay_by_phase: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
            for f in &res.finished {
                let k = phase_of[&f.id.0];
                let e = delay_by_phase.entry(k).or_insert((0.0, 0));
                e.0 += f.delay;
                e.1 += 1;
            }
            let mut green: BTreeMap<usize, (i64, usize)> = BTreeMap::new();
            let mut open: BTreeMap<usize, i64> = BTreeMap::new();
            for ev in &res.trace {
                match ev.kind {
                    SignalEventKind::GreenStart(k) => {
                        open.insert(k, ev.t);
                    }
                    SignalEventKind::GreenEnd(k) => {
                        let s = open.remove(&k).unwrap();
                        let e = green.entry(k).or_insert((0, 0));
                        e.0 += ev.t - s;
                        e.1 += 1;
                    }
                }
            }
            let s = summarize(&res.finished);
            let t0 = std::time::Instant::now();
            print!("seed {seed} {label} mean {:7.2}  ", s.mean_delay);
            let _ = t0;
            for k in 0..pm.len() {
                let (d, n) = delay_by_phase.get(&k).copied().unwrap_or((0.0, 0));
                let (g, c) = green.get(&k).copied().unwrap_or((0, 0));
                print!(
                    "| p{k}: n={n:3} d={:6.1} g={:4}s/{c:3}x ",
                    d / (n.max(1) as f64),
                    g
                );
            }
            println!("| budget {}/{}", res.totals.budget_exhausted, res.totals.decisions);
        }
    }
    Ok(())
}
