//! Schedule-driven traffic signal control under vehicle-turn uncertainty.
//!
//! An intersection controller is modeled as a single-machine scheduler: the
//! vehicles approaching on each entry road are aggregated into clusters, and
//! the controller picks a phase timing plan that minimizes the cumulative
//! delay of dispatching every cluster through its green windows. Where the
//! next turn of a vehicle is uncertain, the controller can either schedule
//! against a single expected inflow (fractional vehicle copies weighted by
//! turn probability) or against a set of sampled turn realizations whose
//! average delay is minimized. Neighboring controllers may exchange
//! per-sample projections of their outflows so that each sees beyond its own
//! entry roads.
//!
//! The crate bundles everything needed to compare those strategies end to
//! end: the cluster/plan model, the samplers, an exact branch-and-bound
//! scheduler with a brute-force cross-check, sample-based neighbor
//! coordination, a deterministic mesoscopic network simulator, and an
//! experiment harness with three built-in scenarios.
//!
//! # Examples
//!
//! Each major capability has a runnable example:
//!
//! ```text
//! cargo run --release -p stopline --example validate_topology   # scenario networks + validation
//! cargo run --release -p stopline --example sample_inflows      # turn sampling and clustering
//! cargo run --release -p stopline --example solve_plan          # one scheduling problem end to end
//! cargo run --release -p stopline --example oracle_crosscheck   # solver vs. exhaustive enumeration
//! cargo run --release -p stopline --example guided_search       # warm starts from the previous plan
//! cargo run --release -p stopline --example coordination_round  # neighbor outflow exchange
//! cargo run --release -p stopline --example single_episode      # one simulated episode
//! cargo run --release -p stopline --example mini_sweep          # a small controller comparison
//! ```
//!
//! The `stopline` binary exposes the same machinery as a small CLI with
//! `scenario`, `run`, and `sweep` subcommands.

pub mod coordination;
pub mod experiment;
pub mod model;
pub mod rng;
pub mod sampler;
pub mod scheduler;
pub mod sim;
