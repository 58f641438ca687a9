//! Whole-run driver.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Policy, SimConfig, UeSpec};
use super::metrics::{Accumulator, Aggregates, MetricsRecord};
use super::world::World;
use crate::error::Result;
use crate::radio::Point;

/// Static description of a cellular experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellularScenario {
    pub base_stations: Vec<Point>,
    pub ues: Vec<UeSpec>,
    pub config: SimConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub policy: Policy,
    pub seed: u64,
    pub aggregates: Aggregates,
    pub stale_frames: u64,
    /// Per-frame records, kept only when requested.
    #[serde(skip)]
    pub records: Option<Vec<MetricsRecord>>,
}

/// Runs `scenario` for its configured duration under `policy`.
pub fn run(scenario: &CellularScenario, policy: Policy, keep_records: bool) -> Result<RunReport> {
    let mut world = World::new(scenario.config.clone(), policy, &scenario.base_stations, &scenario.ues)?;
    let mut acc = Accumulator::new(scenario.ues.len(), scenario.config.frame_ms);
    let mut kept = Vec::new();
    let mut frame = Vec::with_capacity(scenario.ues.len());
    while !world.finished() {
        frame.clear();
        world.step_frame(&mut frame)?;
        for r in &frame {
            acc.push(r);
        }
        if keep_records {
            kept.extend_from_slice(&frame);
        }
    }
    Ok(RunReport {
        policy,
        seed: scenario.config.rng_seed,
        aggregates: acc.finish(),
        stale_frames: world.stale_frames,
        records: keep_records.then_some(kept),
    })
}

/// Runs every `(scenario, policy)` pair in parallel; results keep input order.
pub fn run_many(jobs: &[(CellularScenario, Policy)], keep_records: bool) -> Result<Vec<RunReport>> {
    jobs.par_iter()
        .map(|(s, p)| run(s, *p, keep_records))
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}
