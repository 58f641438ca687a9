//! BeamAdapt: each client picks its transmit power and beamsteering size from
//! its own measured SINR, never shrinking its size within one solve.
//!
//! One step keeps the received signal strength `p_tx * n` scaled by
//! `rho / measured_sinr` and, among the sizes it may move to, chooses the one
//! with the lowest client power. With `n_max = 1` this is the classic
//! `p <- p * rho / S` power-control update.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Infeasibility, Result};
use crate::network::{GainTable, NetworkSnapshot};
use crate::oracle::Solution;
use crate::radio::{client_power_mw, noise_power, path_gain, sinr_for_capacity, RadioParams};

/// Per-client optimizer state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClientState {
    pub p_tx: f64,
    pub n: u32,
    pub n_max: u32,
    pub rho: f64,
    pub last_sinr: f64,
}

/// A transmit power and beamsteering size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamSetting {
    pub p_tx: f64,
    pub n: u32,
}

/// Omnidirectional power that would have met `rho`, given that `(p_tx, n)`
/// produced `measured_sinr` and interference stays put.
#[inline]
pub fn required_omni_power(p_tx: f64, n: u32, rho: f64, measured_sinr: f64) -> f64 {
    p_tx * n as f64 * rho / measured_sinr
}

/// Cheapest size in `[min_n, n_max]` delivering the same received power as an
/// omnidirectional transmission at `required_omni_mw`. Candidates over the
/// power cap are skipped; ties go to the smaller size.
pub fn select_pattern(required_omni_mw: f64, min_n: u32, n_max: u32, params: &RadioParams) -> Result<BeamSetting> {
    if min_n == 0 || min_n > n_max {
        return Err(Error::param("n", format!("size range [{min_n}, {n_max}] is empty")));
    }
    let mut best: Option<(f64, BeamSetting)> = None;
    for n in min_n..=n_max {
        let p_tx = required_omni_mw / n as f64;
        if p_tx > params.p_tx_max {
            continue;
        }
        let cost = client_power_mw(p_tx, n, params);
        if best.is_none_or(|(c, _)| cost < c) {
            best = Some((cost, BeamSetting { p_tx, n }));
        }
    }
    best.map(|(_, s)| s)
        .ok_or(Error::Infeasible(Infeasibility::NoCandidate {
            link: None,
            required_omni_mw,
        }))
}

/// One BeamAdapt update for a single client.
pub fn beamadapt_step(state: &ClientState, measured_sinr: f64, params: &RadioParams) -> Result<BeamSetting> {
    if !(measured_sinr > 0.0) {
        return Err(Error::param(
            "measured_sinr",
            format!("must be > 0, got {measured_sinr}"),
        ));
    }
    if state.n == 0 || state.n > state.n_max {
        return Err(Error::param("n", format!("{} outside [1, {}]", state.n, state.n_max)));
    }
    let p_omni = required_omni_power(state.p_tx, state.n, state.rho, measured_sinr);
    select_pattern(p_omni, state.n, state.n_max, params)
}

/// Single-link optimum for an omnidirectional power requirement `p_omni`,
/// from the continuous optimum `sqrt((1 + alpha) p_omni / p_circuit)`.
pub fn single_link_opt_for_power(p_omni: f64, n_max: u32, params: &RadioParams) -> Result<BeamSetting> {
    if n_max == 0 {
        return Err(Error::param("n_max", "must be >= 1"));
    }
    if !(p_omni > 0.0) {
        return Err(Error::param("p_omni", format!("must be > 0, got {p_omni}")));
    }
    // smallest size whose per-size power fits under the cap
    let Some(n_min) = (1..=n_max).find(|&n| p_omni / n as f64 <= params.p_tx_max) else {
        return Err(Error::Infeasible(Infeasibility::NoCandidate {
            link: None,
            required_omni_mw: p_omni,
        }));
    };
    let n_opt = ((1.0 + params.alpha) * p_omni / params.p_circuit).sqrt();
    let clamp = |x: f64| (x.max(n_min as f64).min(n_max as f64)) as u32;
    let (lo, hi) = (clamp(n_opt.floor()), clamp(n_opt.ceil()));
    let cost = |n: u32| client_power_mw(p_omni / n as f64, n, params);
    let n = if cost(hi) < cost(lo) { hi } else { lo };
    Ok(BeamSetting {
        p_tx: p_omni / n as f64,
        n,
    })
}

/// Most power-efficient `(p_tx, n)` for one interference-free link that must
/// carry `required_capacity` b/s/Hz over `distance` meters.
pub fn single_link_opt(required_capacity: f64, distance: f64, n_max: u32, params: &RadioParams) -> Result<BeamSetting> {
    let p_omni = omni_power_for_capacity(required_capacity, distance, params)?;
    single_link_opt_for_power(p_omni, n_max, params)
}

/// Omnidirectional transmit power that reaches `capacity` over `distance` with no interference.
pub fn omni_power_for_capacity(capacity: f64, distance: f64, params: &RadioParams) -> Result<f64> {
    if !(capacity > 0.0) {
        return Err(Error::param("capacity", format!("must be > 0, got {capacity}")));
    }
    Ok(sinr_for_capacity(capacity) * noise_power(params) / path_gain(distance, params)?)
}

/// How the solvers pick their starting transmit powers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialPower {
    /// Power that meets the target with no interference.
    #[default]
    NoiseLimited,
    /// The `p_tx` already stored in the snapshot.
    FromSnapshot,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Stop when every `|S_i - rho_i| <= rel_tol * rho_i`.
    pub rel_tol: f64,
    pub max_iters: usize,
    pub init: InitialPower,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            rel_tol: 1e-3,
            max_iters: 100,
            init: InitialPower::NoiseLimited,
        }
    }
}

/// Everything every client did in one synchronous round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub p_tx: Vec<f64>,
    pub n: Vec<u32>,
    pub sinr: Vec<f64>,
    pub client_power: Vec<f64>,
}

/// Round-by-round history; record 0 is the starting point.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
    pub converged: bool,
}

impl IterationTrace {
    /// Number of update rounds performed.
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    /// Distinct size vectors in order of appearance.
    pub fn stages(&self) -> Vec<Vec<u32>> {
        let mut out: Vec<Vec<u32>> = Vec::new();
        for r in &self.records {
            if out.last() != Some(&r.n) {
                out.push(r.n.clone());
            }
        }
        out
    }
}

/// Result of [`beamadapt_run`]: the final point whether or not it converged.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamAdaptRun {
    pub solution: Solution,
    pub trace: IterationTrace,
}

fn worst_gap(sinrs: &[f64], rhos: &[f64]) -> f64 {
    sinrs
        .iter()
        .zip(rhos)
        .map(|(s, r)| (s - r).abs() / r)
        .fold(0.0, f64::max)
}

fn record(table: &GainTable, sizes: &[u32], powers: &[f64], params: &RadioParams) -> IterationRecord {
    IterationRecord {
        p_tx: powers.to_vec(),
        n: sizes.to_vec(),
        sinr: table.sinrs(sizes, powers),
        client_power: powers
            .iter()
            .zip(sizes)
            .map(|(&p, &n)| client_power_mw(p, n, params))
            .collect(),
    }
}

fn initial_powers(
    snapshot: &NetworkSnapshot,
    table: &GainTable,
    sizes: &[u32],
    init: InitialPower,
) -> Result<Vec<f64>> {
    match init {
        InitialPower::NoiseLimited => Ok(snapshot
            .links
            .iter()
            .enumerate()
            .map(|(i, l)| l.rho * table.noise() / table.gain(i, i, sizes[i]))
            .collect()),
        InitialPower::FromSnapshot => {
            let p = snapshot.powers();
            if let Some(bad) = p.iter().position(|&x| !(x > 0.0)) {
                return Err(Error::param("p_tx", format!("link {bad}: initial power must be > 0")));
            }
            Ok(p)
        }
    }
}

fn check_targets(snapshot: &NetworkSnapshot) -> Result<Vec<f64>> {
    snapshot
        .links
        .iter()
        .enumerate()
        .map(|(i, l)| {
            if l.rho > 0.0 {
                Ok(l.rho)
            } else {
                Err(Error::param("rho", format!("link {i}: target must be > 0")))
            }
        })
        .collect()
}

fn finish(snapshot: &NetworkSnapshot, sizes: &[u32], powers: &[f64], params: &RadioParams) -> Result<Solution> {
    let mut s = snapshot.clone();
    s.point_beams();
    s.set_sizes(sizes);
    s.set_powers(powers);
    Solution::evaluate(&s, params)
}

/// Runs synchronous BeamAdapt rounds: every client steps against the SINR
/// produced by the previous round's patterns. Every client starts
/// omnidirectional and at least one round is always performed.
pub fn beamadapt_run(snapshot: &NetworkSnapshot, params: &RadioParams, opts: &SolveOptions) -> Result<BeamAdaptRun> {
    params.validate()?;
    let rhos = check_targets(snapshot)?;
    let table = GainTable::new(snapshot, params)?;
    let m = snapshot.len();
    let mut sizes = vec![1u32; m];
    let mut powers = initial_powers(snapshot, &table, &sizes, opts.init)?;
    let mut trace = IterationTrace {
        records: vec![record(&table, &sizes, &powers, params)],
        converged: false,
    };
    for _ in 0..opts.max_iters {
        let last = trace.records.last().expect("trace starts non-empty");
        let mut next_sizes = Vec::with_capacity(m);
        let mut next_powers = Vec::with_capacity(m);
        for i in 0..m {
            let state = ClientState {
                p_tx: powers[i],
                n: sizes[i],
                n_max: snapshot.links[i].n_max,
                rho: rhos[i],
                last_sinr: last.sinr[i],
            };
            let chosen = beamadapt_step(&state, last.sinr[i], params).map_err(|e| match e {
                Error::Infeasible(Infeasibility::NoCandidate { required_omni_mw, .. }) => {
                    Error::Infeasible(Infeasibility::NoCandidate {
                        link: Some(i),
                        required_omni_mw,
                    })
                }
                other => other,
            })?;
            next_sizes.push(chosen.n);
            next_powers.push(chosen.p_tx);
        }
        sizes = next_sizes;
        powers = next_powers;
        let rec = record(&table, &sizes, &powers, params);
        let done = worst_gap(&rec.sinr, &rhos) <= opts.rel_tol;
        trace.records.push(rec);
        if done {
            trace.converged = true;
            break;
        }
    }
    Ok(BeamAdaptRun {
        solution: finish(snapshot, &sizes, &powers, params)?,
        trace,
    })
}

/// [`beamadapt_run`], failing with [`Error::NonConverged`] when the
/// tolerance is not met within `max_iters` rounds.
pub fn beamadapt_solve(
    snapshot: &NetworkSnapshot,
    params: &RadioParams,
    opts: &SolveOptions,
) -> Result<(Solution, IterationTrace)> {
    let run = beamadapt_run(snapshot, params, opts)?;
    if !run.trace.converged {
        let rhos: Vec<f64> = snapshot.links.iter().map(|l| l.rho).collect();
        return Err(Error::NonConverged {
            iterations: run.trace.iterations(),
            worst_gap: worst_gap(&run.solution.sinrs, &rhos),
        });
    }
    Ok((run.solution, run.trace))
}

/// Distributed power control with the sizes in `snapshot` held fixed:
/// `p_i <- p_i * rho_i / S_i` until every SINR is within tolerance.
pub fn foschini_miljanic_solve(
    snapshot: &NetworkSnapshot,
    params: &RadioParams,
    opts: &SolveOptions,
) -> Result<Solution> {
    params.validate()?;
    let rhos = check_targets(snapshot)?;
    let table = GainTable::new(snapshot, params)?;
    let sizes = snapshot.sizes();
    let mut powers = initial_powers(snapshot, &table, &sizes, opts.init)?;
    let mut sinrs = table.sinrs(&sizes, &powers);
    for k in 1..=opts.max_iters {
        for i in 0..powers.len() {
            powers[i] = powers[i] * rhos[i] / sinrs[i];
        }
        sinrs = table.sinrs(&sizes, &powers);
        if powers.iter().any(|&p| p > params.p_tx_max) {
            return Err(Error::NonConverged {
                iterations: k,
                worst_gap: worst_gap(&sinrs, &rhos),
            });
        }
        if worst_gap(&sinrs, &rhos) <= opts.rel_tol {
            return finish(snapshot, &sizes, &powers, params);
        }
    }
    Err(Error::NonConverged {
        iterations: opts.max_iters,
        worst_gap: worst_gap(&sinrs, &rhos),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{solve_exact, solve_power_for_sizes};
    use crate::radio::{client_power_mw, Point};
    use approx::assert_relative_eq;

    fn brute_force(p_omni: f64, lo: u32, hi: u32, params: &RadioParams) -> Option<u32> {
        let mut best: Option<(f64, u32)> = None;
        for n in lo..=hi {
            let p = p_omni / n as f64;
            if p > params.p_tx_max {
                continue;
            }
            let c = (1.0 + params.alpha) * p + n as f64 * params.p_circuit + params.p_shared;
            if best.is_none_or(|(bc, _)| c < bc) {
                best = Some((c, n));
            }
        }
        best.map(|(_, n)| n)
    }

    #[test]
    fn step_fixed_point_when_on_target() {
        let params = RadioParams::default();
        let st = ClientState {
            p_tx: 5.0,
            n: 2,
            n_max: 4,
            rho: 3.0,
            last_sinr: 3.0,
        };
        let out = beamadapt_step(&st, 3.0, &params).unwrap();
        assert_eq!(out, BeamSetting { p_tx: 5.0, n: 2 });
    }

    #[test]
    fn step_enumerates_candidates_on_deficit() {
        let params = RadioParams::default();
        for p in [1.0, 10.0, 20.0, 40.0, 80.0, 120.0] {
            let st = ClientState {
                p_tx: p,
                n: 1,
                n_max: 4,
                rho: 4.0,
                last_sinr: 2.0,
            };
            let out = beamadapt_step(&st, 2.0, &params).unwrap();
            assert_eq!(Some(out.n), brute_force(2.0 * p, 1, 4, &params), "p={p}");
            assert_relative_eq!(out.p_tx * out.n as f64, 2.0 * p, max_relative = 1e-12);
        }
        // Large powers must move off omni.
        let st = ClientState {
            p_tx: 120.0,
            n: 1,
            n_max: 4,
            rho: 4.0,
            last_sinr: 2.0,
        };
        assert!(beamadapt_step(&st, 2.0, &params).unwrap().n > 1);
    }

    #[test]
    fn step_never_shrinks() {
        let params = RadioParams::default();
        let st = ClientState {
            p_tx: 0.01,
            n: 3,
            n_max: 4,
            rho: 1.0,
            last_sinr: 10.0,
        };
        assert_eq!(beamadapt_step(&st, 10.0, &params).unwrap().n, 3);
    }

    #[test]
    fn step_reduces_to_power_control() {
        let params = RadioParams::default();
        let st = ClientState {
            p_tx: 7.0,
            n: 1,
            n_max: 1,
            rho: 5.0,
            last_sinr: 2.0,
        };
        let out = beamadapt_step(&st, 2.0, &params).unwrap();
        assert_eq!(
            out,
            BeamSetting {
                p_tx: 7.0 * 5.0 / 2.0,
                n: 1
            }
        );
    }

    #[test]
    fn step_reports_cap_overflow() {
        let params = RadioParams::default();
        let st = ClientState {
            p_tx: 200.0,
            n: 1,
            n_max: 2,
            rho: 10.0,
            last_sinr: 1.0,
        };
        assert!(matches!(
            beamadapt_step(&st, 1.0, &params),
            Err(Error::Infeasible(Infeasibility::NoCandidate { .. }))
        ));
        assert!(beamadapt_step(&st, 0.0, &params).is_err());
    }

    #[test]
    fn single_link_boundary_and_midpoint() {
        let params = RadioParams::default();
        let p0 = params.p_circuit / (1.0 + params.alpha);
        assert_eq!(single_link_opt_for_power(p0, 4, &params).unwrap().n, 1);

        // sqrt(287.5 / 48.2) ~ 2.44: compare the client power at 2 and 3 by hand.
        let c2 = 2.875 * 50.0 + 2.0 * 48.2 + 50.0;
        let c3 = 2.875 * 100.0 / 3.0 + 3.0 * 48.2 + 50.0;
        let expect = if c3 < c2 { 3 } else { 2 };
        assert_eq!(single_link_opt_for_power(100.0, 4, &params).unwrap().n, expect);
        assert_eq!(expect, 2);
    }

    #[test]
    fn single_link_at_crossover_capacity() {
        let params = RadioParams::default();
        let best = single_link_opt(3.6, 500.0, 4, &params).unwrap();
        let p_omni = omni_power_for_capacity(3.6, 500.0, &params).unwrap();
        assert!(best.n >= 2);
        assert!(client_power_mw(best.p_tx, best.n, &params) <= client_power_mw(p_omni, 1, &params));
    }

    #[test]
    fn single_link_respects_cap() {
        let params = RadioParams::default();
        // 600 mW omni requirement: sizes 1 and 2 overflow the 250 mW cap.
        let out = single_link_opt_for_power(600.0, 4, &params).unwrap();
        assert!(out.n >= 3);
        assert!(single_link_opt_for_power(1200.0, 4, &params).is_err());
    }

    fn one_link(d: f64, rho: f64) -> NetworkSnapshot {
        NetworkSnapshot::new(vec![Point::new(0.0, 0.0)], [(Point::new(d, 0.0), 0, 4, rho)]).unwrap()
    }

    #[test]
    fn solve_single_link_one_round() {
        let params = RadioParams::default();
        for (d, rho) in [(300.0, 2.0), (500.0, 11.13), (700.0, 8.0), (650.0, 12.0)] {
            let s = one_link(d, rho);
            let (sol, trace) = beamadapt_solve(&s, &params, &SolveOptions::default()).unwrap();
            assert_eq!(trace.iterations(), 1);
            let exact = solve_exact(&s, &params).unwrap();
            assert_eq!(sol.patterns[0].n, exact.patterns[0].n);
            assert_relative_eq!(sol.network_power, exact.network_power, max_relative = 1e-9);
            let closed =
                single_link_opt_for_power(exact.patterns[0].p_tx * exact.patterns[0].n as f64, 4, &params).unwrap();
            assert_eq!(closed.n, sol.patterns[0].n);
        }
    }

    fn pair(n_max: u32) -> NetworkSnapshot {
        NetworkSnapshot::new(
            vec![Point::new(0.0, 0.0), Point::new(1800.0, 0.0)],
            [
                (Point::new(100.0, -450.0), 0, n_max, 6.0),
                (Point::new(1700.0, -600.0), 1, n_max, 9.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn omni_beamadapt_matches_power_control() {
        let params = RadioParams::default();
        let opts = SolveOptions {
            rel_tol: 1e-6,
            max_iters: 1000,
            ..SolveOptions::default()
        };
        let s = pair(1);
        let (ba, _) = beamadapt_solve(&s, &params, &opts).unwrap();
        let fm = foschini_miljanic_solve(&s, &params, &opts).unwrap();
        for (a, b) in ba.patterns.iter().zip(&fm.patterns) {
            assert_relative_eq!(a.p_tx, b.p_tx, max_relative = 1e-9);
            assert_eq!(a.n, b.n);
        }
    }

    #[test]
    fn power_control_matches_linear_solve() {
        let params = RadioParams::default();
        let opts = SolveOptions {
            rel_tol: 1e-13,
            max_iters: 10_000,
            ..SolveOptions::default()
        };
        let s = pair(4).with_sizes(&[2, 3]);
        let fm = foschini_miljanic_solve(&s, &params, &opts).unwrap();
        let lin = solve_power_for_sizes(&s, &params).unwrap();
        for (a, b) in fm.patterns.iter().zip(&lin.patterns) {
            assert_relative_eq!(a.p_tx, b.p_tx, max_relative = 1e-9);
        }
    }

    #[test]
    fn power_control_single_link_closed_form() {
        let params = RadioParams::default();
        let s = one_link(400.0, 3.0).with_sizes(&[2]);
        let fm = foschini_miljanic_solve(&s, &params, &SolveOptions::default()).unwrap();
        let expected = 3.0 * noise_power(&params) / (2.0 * path_gain(400.0, &params).unwrap());
        assert_relative_eq!(fm.patterns[0].p_tx, expected, max_relative = 1e-12);
    }

    #[test]
    fn power_control_diverges_on_infeasible() {
        let params = RadioParams::default();
        let s = NetworkSnapshot::new(
            vec![Point::new(0.0, 0.0), Point::new(300.0, 0.0)],
            [
                (Point::new(0.0, -400.0), 0, 1, 40.0),
                (Point::new(300.0, -400.0), 1, 1, 40.0),
            ],
        )
        .unwrap();
        assert!(matches!(
            foschini_miljanic_solve(&s, &params, &SolveOptions::default()),
            Err(Error::NonConverged { .. })
        ));
    }

    #[test]
    fn trace_is_deterministic() {
        let params = RadioParams::default();
        let a = beamadapt_run(&pair(4), &params, &SolveOptions::default()).unwrap();
        let b = beamadapt_run(&pair(4), &params, &SolveOptions::default()).unwrap();
        assert_eq!(a, b);
    }
}
