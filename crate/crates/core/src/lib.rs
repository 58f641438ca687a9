//! Uplink beamsteering for mobile clients.
//!
//! * [`radio`]: array gain, propagation, noise and the client power model.
//! * [`network`]: multi-link geometry and the aggregate-interference SINR.
//! * [`beamadapt`]: the distributed per-client optimizer and its
//!   single-link and fixed-size special cases.
//! * [`oracle`]: exact solvers used as ground truth.
//! * [`sim`]: a frame-level cellular simulation with mobility, handoff,
//!   traffic and closed-loop power control.
//! * [`scenario`] and [`emit`]: scenario files, canned topologies and
//!   metrics serialization.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod beamadapt;
pub mod emit;
mod error;
pub mod network;
pub mod oracle;
pub mod radio;
pub mod scenario;
pub mod sim;

pub use beamadapt::{
    beamadapt_run, beamadapt_solve, beamadapt_step, foschini_miljanic_solve, single_link_opt,
    single_link_opt_for_power, BeamSetting, ClientState, IterationTrace, SolveOptions,
};
pub use error::{Error, Infeasibility, Result};
pub use network::{sinr_vector, Link, NetworkSnapshot};
pub use oracle::{check_feasibility, max_feasible_links, solve_exact, solve_power_for_sizes, Solution};
pub use radio::{beam_gain, capacity, client_power, noise_power, path_gain, BeamPattern, Point, RadioParams};
pub use scenario::{load_scenario, ScenarioFile};
pub use sim::{run, CellularScenario, MetricsRecord, Policy, SimConfig, TrafficKind};
