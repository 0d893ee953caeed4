//! Episode outcome records and their CSV rendering.

use crate::model::VehicleId;
use std::io::{self, Write};

/// One vehicle's episode outcome. `delay` is the time lost against an
/// unimpeded drive over the same route at free-flow speed.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct FinishedVehicle {
    pub id: VehicleId,
    pub spawn: f64,
    pub exit: f64,
    pub delay: f64,
}

/// Aggregate delay statistics of one episode.
#[derive(Clone, Copy, PartialEq, Debug, Default)]
pub struct DelaySummary {
    pub vehicles: usize,
    pub mean_delay: f64,
    pub max_delay: f64,
    /// Exit instant of the last vehicle.
    pub makespan: f64,
}

pub fn summarize(finished: &[FinishedVehicle]) -> DelaySummary {
    if finished.is_empty() {
        return DelaySummary::default();
    }
    let n = finished.len();
    DelaySummary {
        vehicles: n,
        mean_delay: finished.iter().map(|v| v.delay).sum::<f64>() / n as f64,
        max_delay: finished.iter().map(|v| v.delay).fold(f64::MIN, f64::max),
        makespan: finished.iter().map(|v| v.exit).fold(f64::MIN, f64::max),
    }
}

/// Writes one row per vehicle, in id order. Floats use the shortest exact
/// decimal form, so identical episodes produce byte-identical files.
pub fn write_vehicle_csv(mut w: impl Write, finished: &[FinishedVehicle]) -> io::Result<()> {
    let mut rows: Vec<&FinishedVehicle> = finished.iter().collect();
    rows.sort_by_key(|v| v.id);
    writeln!(w, "id,spawn,exit,delay")?;
    for v in rows {
        writeln!(w, "{},{},{},{}", v.id.0, v.spawn, v.exit, v.delay)?;
    }
    Ok(())
}
