//! Frame-level cellular simulation: mobility, nearest-cell handoff, FTP and
//! CBR traffic, per-cell round-robin scheduling and closed-loop power control
//! carrying the beam policy.

pub mod config;
pub mod metrics;
pub mod mobility;
pub mod run;
pub mod world;

pub use config::{CbrParams, GainDecayStep, MobilityConfig, Policy, SimConfig, TrafficKind, UeSpec};
pub use metrics::{aggregate, Accumulator, Aggregates, MetricsRecord, UeAggregate};
pub use run::{run, run_many, CellularScenario, RunReport};
pub use world::{NodeB, Ue, World};
