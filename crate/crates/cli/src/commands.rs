use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, ensure, Context};
use beamadapt_core::beamadapt::{beamadapt_run, beamadapt_solve, single_link_opt, SolveOptions};
use beamadapt_core::emit::{write_records_csv, Format, Summary};
use beamadapt_core::oracle::{max_feasible_links, solve_exact, solve_power_for_sizes};
use beamadapt_core::radio::{capacity, client_power_mw, noise_power, path_gain, sinr_for_capacity, RadioParams};
use beamadapt_core::scenario::{
    cellular_7x30, cellular_with_probes, load_scenario, lone_link_power, random_candidate_links, seven_link, two_link,
    ScenarioFile, CANDIDATE_CAPACITY, CANDIDATE_DISC_RADIUS_M, CANDIDATE_LINK_RANGE_M, CANDIDATE_MARGIN_DB,
};
use beamadapt_core::sim::{run_many, Policy, RunReport, TrafficKind};
use clap::Args;
use rayon::prelude::*;
use serde::Serialize;

use crate::output::{json_bytes, OutputArgs};

/// Raised after output is written when nothing in the run was feasible.
#[derive(Debug)]
pub struct Infeasible(pub String);

impl std::fmt::Display for Infeasible {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "infeasible: {}", self.0)
    }
}

impl std::error::Error for Infeasible {}

/// `start:stop:step`, inclusive of `stop`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    start: f64,
    stop: f64,
    step: f64,
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=count).map(|k| self.start + k as f64 * self.step).collect()
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
        let (start, stop, step) = match parts[..] {
            [a] => (num(a)?, num(a)?, 1.0),
            [a, b, c] => (num(a)?, num(b)?, num(c)?),
            _ => return Err(format!("expected START:STOP:STEP or a single value, got `{s}`")),
        };
        if !(start.is_finite() && stop.is_finite() && step > 0.0 && step.is_finite() && stop >= start) {
            return Err(format!("need finite START <= STOP and STEP > 0, got `{s}`"));
        }
        if (stop - start) / step > 1e6 {
            return Err(format!("`{s}` has more than a million points"));
        }
        Ok(Grid { start, stop, step })
    }
}

fn load_or(path: &Option<PathBuf>, canned: impl FnOnce() -> ScenarioFile) -> anyhow::Result<ScenarioFile> {
    match path {
        Some(p) => Ok(load_scenario(p)?),
        None => Ok(canned()),
    }
}

fn sizes_label(sizes: &[u32]) -> String {
    sizes.iter().map(u32::to_string).collect::<Vec<_>>().join("/")
}

// single-link

#[derive(Debug, Clone, Args)]
pub struct SingleLinkArgs {
    /// Required capacities in b/s/Hz, as START:STOP:STEP.
    #[arg(long, default_value = "0.25:6:0.25")]
    pub capacity_range: Grid,
    /// Client to base station distance, m.
    #[arg(long, default_value_t = 500.0)]
    pub distance: f64,
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u32).range(1..=64))]
    pub n_max: u32,
}

#[derive(Debug, Serialize)]
struct SingleLinkRow {
    capacity: f64,
    n: u32,
    p_tx_mw: f64,
    total_power_mw: f64,
    within_cap: bool,
    minimizer: bool,
}

#[derive(Debug, Serialize)]
struct SingleLinkDoc<'a> {
    distance_m: f64,
    n_max: u32,
    /// Lowest capacity at which some size above one needs less power than omni.
    crossover_capacity: Option<f64>,
    rows: &'a [SingleLinkRow],
}

/// Capacity above which a size of two or more wins: the cheaper of the
/// point where size two overtakes omni and the point where omni hits the cap.
fn crossover_capacity(distance: f64, n_max: u32, params: &RadioParams) -> anyhow::Result<Option<f64>> {
    if n_max < 2 {
        return Ok(None);
    }
    let p_omni = (2.0 * params.p_circuit / (1.0 + params.alpha)).min(params.p_tx_max);
    Ok(Some(capacity(
        p_omni * path_gain(distance, params)? / noise_power(params),
    )))
}

pub fn single_link(args: &SingleLinkArgs, out: &OutputArgs) -> anyhow::Result<()> {
    let params = RadioParams::default();
    ensure!(args.distance > 0.0, "--distance must be > 0");
    ensure!(args.capacity_range.start > 0.0, "--capacity-range must start above 0");
    let g = path_gain(args.distance, &params)?;
    let mut rows = Vec::new();
    let mut any_feasible = false;
    for c in args.capacity_range.values() {
        let p_omni = sinr_for_capacity(c) * noise_power(&params) / g;
        let best = match single_link_opt(c, args.distance, args.n_max, &params) {
            Ok(s) => Some(s.n),
            Err(e) if e.is_infeasible() => None,
            Err(e) => return Err(e.into()),
        };
        any_feasible |= best.is_some();
        for n in 1..=args.n_max {
            let p = p_omni / n as f64;
            rows.push(SingleLinkRow {
                capacity: c,
                n,
                p_tx_mw: p,
                total_power_mw: client_power_mw(p, n, &params),
                within_cap: p <= params.p_tx_max,
                minimizer: best == Some(n),
            });
        }
    }
    let crossover = crossover_capacity(args.distance, args.n_max, &params)?;
    if let Some(x) = crossover {
        eprintln!("crossover capacity: {x:.4} b/s/Hz");
    }
    let doc = SingleLinkDoc {
        distance_m: args.distance,
        n_max: args.n_max,
        crossover_capacity: crossover,
        rows: &rows,
    };
    out.emit(&rows, &doc)?;
    if !any_feasible {
        bail!(Infeasible(
            "no capacity in range fits under the transmit power cap".into()
        ));
    }
    Ok(())
}

// two-link-sweep

#[derive(Debug, Clone, Args)]
pub struct TwoLinkArgs {
    /// d11 / d22.
    #[arg(long, default_value_t = 2.0)]
    pub d_ratio: f64,
    /// C1 / C2.
    #[arg(long, default_value_t = 1.0)]
    pub c_ratio: f64,
    /// Distance from client 2 to its base station, m.
    #[arg(long, default_value_t = 200.0)]
    pub d22: f64,
    /// Distances from client 1 to base station 2, m, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1000,2000,4000")]
    pub d12: Vec<f64>,
    /// Network capacity C1 + C2 in b/s/Hz, as START:STOP:STEP.
    #[arg(long, default_value = "0.5:8:0.5")]
    pub capacity_range: Grid,
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u32).range(1..=16))]
    pub n_max: u32,
}

#[derive(Debug, Serialize)]
struct TwoLinkRow {
    d12: f64,
    c_network: f64,
    /// `n<k>` for both clients at size k, or `opt` for the joint optimum.
    strategy: String,
    network_power_mw: Option<f64>,
    sizes: Option<String>,
}

pub fn two_link_sweep(args: &TwoLinkArgs, out: &OutputArgs) -> anyhow::Result<()> {
    ensure!(args.d_ratio > 0.0 && args.d22 > 0.0, "--d-ratio and --d22 must be > 0");
    let params = RadioParams::default();
    let d11 = args.d_ratio * args.d22;
    let mut rows = Vec::new();
    for &d12 in &args.d12 {
        for c in args.capacity_range.values() {
            let mut sc = two_link(d11, args.d22, d12, args.c_ratio, c)?;
            for l in &mut sc.links {
                l.n_max = args.n_max;
            }
            let snap = sc.snapshot()?;
            let mut push =
                |strategy: String, r: beamadapt_core::Result<beamadapt_core::Solution>| -> anyhow::Result<()> {
                    let (p, s) = match r {
                        Ok(sol) => (Some(sol.network_power), Some(sizes_label(&sol.sizes()))),
                        Err(e) if e.is_infeasible() => (None, None),
                        Err(e) => return Err(e.into()),
                    };
                    rows.push(TwoLinkRow {
                        d12,
                        c_network: c,
                        strategy,
                        network_power_mw: p,
                        sizes: s,
                    });
                    Ok(())
                };
            for n in 1..=args.n_max {
                push(
                    format!("n{n}"),
                    solve_power_for_sizes(&snap.with_sizes(&[n, n]), &params),
                )?;
            }
            push("opt".into(), solve_exact(&snap, &params))?;
        }
    }
    out.emit(&rows, &rows)
}

// converge

#[derive(Debug, Clone, Args)]
pub struct ConvergeArgs {
    /// Scenario file; the bundled seven-link network when omitted.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-3)]
    pub rel_tol: f64,
    #[arg(long, default_value_t = 100)]
    pub max_iters: usize,
}

#[derive(Debug, Serialize)]
struct ConvergeRow {
    iteration: usize,
    link: usize,
    n: u32,
    p_tx_mw: f64,
    sinr: f64,
    sinr_target: f64,
    client_power_mw: f64,
}

#[derive(Debug, Serialize)]
struct ConvergeDoc<'a> {
    converged: bool,
    iterations: usize,
    network_power_mw: f64,
    stages: Vec<Vec<u32>>,
    rows: &'a [ConvergeRow],
}

pub fn converge(args: &ConvergeArgs, out: &OutputArgs) -> anyhow::Result<()> {
    ensure!(args.rel_tol > 0.0, "--rel-tol must be > 0");
    let sc = load_or(&args.scenario, seven_link)?;
    let snap = sc.snapshot()?;
    let opts = SolveOptions {
        rel_tol: args.rel_tol,
        max_iters: args.max_iters,
        ..SolveOptions::default()
    };
    let run = beamadapt_run(&snap, &sc.radio, &opts)?;
    let mut rows = Vec::new();
    for (k, r) in run.trace.records.iter().enumerate() {
        for i in 0..snap.len() {
            rows.push(ConvergeRow {
                iteration: k,
                link: i,
                n: r.n[i],
                p_tx_mw: r.p_tx[i],
                sinr: r.sinr[i],
                sinr_target: snap.links[i].rho,
                client_power_mw: r.client_power[i],
            });
        }
    }
    let doc = ConvergeDoc {
        converged: run.trace.converged,
        iterations: run.trace.iterations(),
        network_power_mw: run.solution.network_power,
        stages: run.trace.stages(),
        rows: &rows,
    };
    out.emit(&rows, &doc)?;
    if !run.trace.converged {
        bail!(Infeasible(format!(
            "no convergence within {} iterations",
            args.max_iters
        )));
    }
    Ok(())
}

// opt-gap

#[derive(Debug, Clone, Args)]
pub struct OptGapArgs {
    /// Scenario with a placement distribution; the bundled seven-link network when omitted.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    pub trials: u64,
    /// Trial k uses placement seed `seed + k`.
    #[arg(long, default_value_t = 1000)]
    pub seed: u64,
}

#[derive(Debug, Serialize)]
struct OptGapRow {
    trial: u64,
    seed: u64,
    iterations: Option<usize>,
    beamadapt_mw: Option<f64>,
    oracle_mw: Option<f64>,
    omni_mw: Option<f64>,
    /// BeamAdapt over oracle, minus one.
    gap: Option<f64>,
    beamadapt_sizes: Option<String>,
    oracle_sizes: Option<String>,
}

#[derive(Debug, Serialize)]
struct OptGapDoc<'a> {
    trials: u64,
    feasible: usize,
    mean_gap: Option<f64>,
    rows: &'a [OptGapRow],
}

fn feasible_or_none<T>(r: beamadapt_core::Result<T>) -> anyhow::Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(e) if e.is_infeasible() => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn opt_gap_trial(sc: &ScenarioFile, trial: u64, seed: u64) -> anyhow::Result<OptGapRow> {
    let placed = sc.with_random_placement(seed)?;
    let snap = placed.snapshot()?;
    let params = &placed.radio;
    let ba = feasible_or_none(beamadapt_solve(&snap, params, &SolveOptions::default()))?;
    let exact = feasible_or_none(solve_exact(&snap, params))?;
    let omni = feasible_or_none(solve_power_for_sizes(&snap.with_sizes(&vec![1; snap.len()]), params))?;
    let gap = match (&ba, &exact) {
        (Some((b, _)), Some(x)) => Some(b.network_power / x.network_power - 1.0),
        _ => None,
    };
    Ok(OptGapRow {
        trial,
        seed,
        iterations: ba.as_ref().map(|(_, t)| t.iterations()),
        beamadapt_mw: ba.as_ref().map(|(s, _)| s.network_power),
        oracle_mw: exact.as_ref().map(|s| s.network_power),
        omni_mw: omni.map(|s| s.network_power),
        gap,
        beamadapt_sizes: ba.as_ref().map(|(s, _)| sizes_label(&s.sizes())),
        oracle_sizes: exact.as_ref().map(|s| sizes_label(&s.sizes())),
    })
}

pub fn opt_gap(args: &OptGapArgs, out: &OutputArgs) -> anyhow::Result<()> {
    let sc = load_or(&args.scenario, seven_link)?;
    ensure!(
        sc.placement.is_some(),
        "scenario has no `placement` to randomize clients from"
    );
    let rows: Vec<OptGapRow> = (0..args.trials)
        .into_par_iter()
        .map(|k| opt_gap_trial(&sc, k, args.seed.wrapping_add(k)))
        .collect::<anyhow::Result<_>>()?;
    let gaps: Vec<f64> = rows.iter().filter_map(|r| r.gap).collect();
    let mean_gap = (!gaps.is_empty()).then(|| gaps.iter().sum::<f64>() / gaps.len() as f64);
    if let Some(m) = mean_gap {
        eprintln!("mean gap: {:.3}% over {} feasible trials", m * 100.0, gaps.len());
    }
    let doc = OptGapDoc {
        trials: args.trials,
        feasible: gaps.len(),
        mean_gap,
        rows: &rows,
    };
    out.emit(&rows, &doc)?;
    if gaps.is_empty() && args.trials > 0 {
        bail!(Infeasible("no trial placement was feasible".into()));
    }
    Ok(())
}

// feasible-set

#[derive(Debug, Clone, Args)]
pub struct FeasibleSetArgs {
    /// Beamsteering sizes to compare, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,2,4")]
    pub n_list: Vec<u32>,
    #[arg(long, default_value_t = 50)]
    pub trials: u64,
    /// Trial k uses seed `seed + k`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Candidate links per trial, at most 20.
    #[arg(long, default_value_t = 10)]
    pub links: usize,
    /// Per-link capacity target, b/s/Hz.
    #[arg(long, default_value_t = CANDIDATE_CAPACITY)]
    pub capacity: f64,
    /// SNR margin of the weakest lone link at the common transmit power, dB.
    #[arg(long, default_value_t = CANDIDATE_MARGIN_DB)]
    pub margin_db: f64,
}

#[derive(Debug, Serialize)]
struct FeasibleSetRow {
    trial: u64,
    seed: u64,
    n: u32,
    p_tx_mw: f64,
    max_links: usize,
}

pub fn feasible_set(args: &FeasibleSetArgs, out: &OutputArgs) -> anyhow::Result<()> {
    ensure!(
        !args.n_list.is_empty() && !args.n_list.contains(&0),
        "--n-list needs sizes >= 1"
    );
    ensure!((1..=20).contains(&args.links), "--links must be in [1, 20]");
    ensure!(args.capacity > 0.0, "--capacity must be > 0");
    let params = RadioParams::default();
    let rho = sinr_for_capacity(args.capacity);
    let (lo, hi) = CANDIDATE_LINK_RANGE_M;
    let per_trial: Vec<Vec<FeasibleSetRow>> = (0..args.trials)
        .into_par_iter()
        .map(|k| -> anyhow::Result<Vec<FeasibleSetRow>> {
            let seed = args.seed.wrapping_add(k);
            let c = random_candidate_links(seed, args.links, CANDIDATE_DISC_RADIUS_M, lo, hi, rho)?;
            let p = lone_link_power(&c, rho, args.margin_db, &params)?;
            args.n_list
                .iter()
                .map(|&n| {
                    Ok(FeasibleSetRow {
                        trial: k,
                        seed,
                        n,
                        p_tx_mw: p,
                        max_links: max_feasible_links(&c, rho, n, p, &params)?,
                    })
                })
                .collect()
        })
        .collect::<anyhow::Result<_>>()?;
    let rows: Vec<FeasibleSetRow> = per_trial.into_iter().flatten().collect();
    out.emit(&rows, &rows)
}

// cellular

#[derive(Debug, Clone, Args)]
pub struct CellularArgs {
    /// Policies to run, comma separated: omni, bsN, baN.
    #[arg(long, value_delimiter = ',', default_value = "ba4")]
    pub policy: Vec<Policy>,
    /// Simulation seed; overrides the scenario file's seed when given.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Simulated seconds; overrides the scenario file when given.
    #[arg(long)]
    pub duration: Option<f64>,
    /// Traffic for the bundled 7-cell, 30-UE scenario.
    #[arg(long, default_value = "ftp")]
    pub traffic: TrafficKind,
    /// Add four pinned FTP probe UEs at increasing distance from their cells.
    #[arg(long, conflicts_with = "scenario")]
    pub probes: bool,
    /// Scenario file with `sim` settings and UEs, instead of the bundled one.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Emit one record per UE per frame instead of run totals (single policy only).
    #[arg(long, conflicts_with = "per_ue")]
    pub records: bool,
    /// Emit one row per UE and policy instead of run totals.
    #[arg(long)]
    pub per_ue: bool,
}

#[derive(Debug, Serialize)]
struct CellularRow {
    policy: Policy,
    seed: u64,
    frames: u64,
    transmit_frames: u64,
    stale_frames: u64,
    mean_tx_power_mw: f64,
    energy_mj: f64,
    total_bits: f64,
    throughput_bps: f64,
    /// Transmitting frames per size, `n=1;n=2;...`.
    size_histogram: String,
}

#[derive(Debug, Serialize)]
struct PerUeRow {
    policy: Policy,
    seed: u64,
    ue_id: u32,
    transmit_frames: u64,
    bits: f64,
    energy_mj: f64,
    mean_power_mw: Option<f64>,
    size_mode: Option<u32>,
    size_histogram: String,
}

fn histogram_label(h: &[u64]) -> String {
    h.iter().map(u64::to_string).collect::<Vec<_>>().join(";")
}

pub fn cellular(args: &CellularArgs, out: &OutputArgs) -> anyhow::Result<()> {
    ensure!(!args.policy.is_empty(), "--policy needs at least one policy");
    ensure!(
        !args.records || args.policy.len() == 1,
        "--records takes exactly one policy"
    );
    let file = match &args.scenario {
        Some(p) => load_scenario(p)?,
        None => {
            let seed = args.seed.unwrap_or(1);
            if args.probes {
                cellular_with_probes(seed, args.traffic)
            } else {
                cellular_7x30(seed, args.traffic)
            }
        }
    };
    let mut sc = file
        .cellular()
        .context("scenario has no cellular simulation settings")?;
    if let Some(seed) = args.seed {
        sc.config.rng_seed = seed;
    }
    if let Some(d) = args.duration {
        ensure!(d > 0.0 && d.is_finite(), "--duration must be > 0");
        sc.config.duration_s = d;
    }
    sc.config.validate()?;
    let jobs: Vec<_> = args.policy.iter().map(|&p| (sc.clone(), p)).collect();
    let reports = run_many(&jobs, args.records)?;
    let frame_ms = sc.config.frame_ms;

    if args.records {
        let records = reports[0].records.as_deref().unwrap_or_default();
        let bytes = match out.format() {
            Format::Csv => {
                let mut buf = Vec::new();
                write_records_csv(records, &mut buf)?;
                buf
            }
            Format::Json => json_bytes(&records)?,
        };
        return out.write(&bytes);
    }
    if args.per_ue {
        let rows: Vec<PerUeRow> = reports
            .iter()
            .flat_map(|r| {
                r.aggregates.per_ue.iter().map(move |u| PerUeRow {
                    policy: r.policy,
                    seed: r.seed,
                    ue_id: u.ue_id,
                    transmit_frames: u.transmit_frames,
                    bits: u.bits,
                    energy_mj: u.energy_mj,
                    mean_power_mw: (u.transmit_frames > 0).then(|| u.mean_power_mw(frame_ms)),
                    size_mode: u.size_mode(),
                    size_histogram: histogram_label(&u.size_histogram),
                })
            })
            .collect();
        return out.emit(&rows, &rows);
    }
    let rows: Vec<CellularRow> = reports.iter().map(summary_row).collect();
    out.emit(&rows, &Summary { runs: reports })
}

fn summary_row(r: &RunReport) -> CellularRow {
    let a = &r.aggregates;
    CellularRow {
        policy: r.policy,
        seed: r.seed,
        frames: a.frames,
        transmit_frames: a.transmit_frames,
        stale_frames: r.stale_frames,
        mean_tx_power_mw: a.mean_tx_power_mw,
        energy_mj: a.energy_mj,
        total_bits: a.total_bits,
        throughput_bps: a.throughput_bps,
        size_histogram: histogram_label(&a.size_histogram),
    }
}
