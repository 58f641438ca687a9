//! Shared fixtures for the criterion benches.

use beamadapt_core::network::NetworkSnapshot;
use beamadapt_core::scenario::{cellular_7x30, seven_link};
use beamadapt_core::sim::{CellularScenario, TrafficKind};

/// The bundled seven-link network, or a random placement of it.
pub fn seven_link_snapshot(placement_seed: Option<u64>) -> NetworkSnapshot {
    let sc = seven_link();
    let sc = match placement_seed {
        Some(s) => sc.with_random_placement(s).expect("bundled asset has a placement"),
        None => sc,
    };
    sc.snapshot().expect("bundled asset is valid")
}

/// The 7-cell, 30-UE scenario cut to `seconds` of simulated time.
pub fn short_cellular(seed: u64, traffic: TrafficKind, seconds: f64) -> CellularScenario {
    let mut sc = cellular_7x30(seed, traffic)
        .cellular()
        .expect("canned scenario has sim settings");
    sc.config.duration_s = seconds;
    sc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_build() {
        assert_eq!(seven_link_snapshot(None).len(), 7);
        assert_eq!(seven_link_snapshot(Some(3)).len(), 7);
        assert_eq!(short_cellular(1, TrafficKind::Ftp, 1.0).config.frames(), 100);
    }
}
