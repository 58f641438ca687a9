//! Ground-truth solvers.
//!
//! For a fixed vector of beamsteering sizes the minimum-power allocation puts
//! every SINR constraint at equality, which is a linear system in the
//! transmit powers. [`solve_exact`] enumerates every size vector on top of
//! that and keeps the cheapest feasible one.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Infeasibility, Result};
use crate::network::{GainTable, NetworkSnapshot};
use crate::radio::{client_power, BeamPattern, RadioParams};

/// Per-link patterns with the SINRs they produce and the total client power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub patterns: Vec<BeamPattern>,
    pub sinrs: Vec<f64>,
    /// Sum of the client power model over all links, mW.
    pub network_power: f64,
}

impl Solution {
    /// Assembles a solution for `snapshot` with the given sizes and powers,
    /// recomputing SINRs and network power.
    pub fn evaluate(snapshot: &NetworkSnapshot, params: &RadioParams) -> Result<Self> {
        let sinrs = crate::network::sinr_vector(snapshot, params)?;
        let patterns: Vec<BeamPattern> = snapshot.links.iter().map(|l| l.pattern).collect();
        let network_power = patterns.iter().map(|p| client_power(p, params)).sum();
        Ok(Solution {
            patterns,
            sinrs,
            network_power,
        })
    }

    pub fn sizes(&self) -> Vec<u32> {
        self.patterns.iter().map(|p| p.n).collect()
    }

    pub fn powers(&self) -> Vec<f64> {
        self.patterns.iter().map(|p| p.p_tx).collect()
    }

    /// Writes the patterns back into a copy of `snapshot`.
    pub fn apply_to(&self, snapshot: &NetworkSnapshot) -> NetworkSnapshot {
        let mut s = snapshot.clone();
        for (link, pat) in s.links.iter_mut().zip(&self.patterns) {
            link.pattern = *pat;
        }
        s
    }
}

/// Outcome of the spectral-radius feasibility test.
#[derive(Debug, Clone, PartialEq)]
pub struct Feasibility {
    pub feasible: bool,
    pub spectral_radius: f64,
    /// The equality-constraint powers, when the linear system is solvable.
    pub powers: Option<Vec<f64>>,
}

/// Normalized cross-gain matrix `D F` and right-hand side `D u` for the
/// given sizes: `D = diag(rho_i / g_ii)`, `F_ij = g_ij` off the diagonal.
fn normalized_system(table: &GainTable, rhos: &[f64], sizes: &[u32]) -> (DMatrix<f64>, DVector<f64>) {
    let m = table.len();
    let mut a = DMatrix::zeros(m, m);
    let mut b = DVector::zeros(m);
    for i in 0..m {
        let d = rhos[i] / table.gain(i, i, sizes[i]);
        b[i] = d * table.noise();
        for j in (0..m).filter(|&j| j != i) {
            a[(i, j)] = d * table.gain(i, j, sizes[j]);
        }
    }
    (a, b)
}

/// Solves `(I - A) p = b`, returning `None` if the matrix is singular.
fn solve_equalities(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let m = a.nrows();
    let lhs = DMatrix::identity(m, m) - a;
    let lu = lhs.clone().lu();
    let mut p = lu.solve(b)?;
    // one round of iterative refinement
    let residual = b - &lhs * &p;
    if let Some(delta) = lu.solve(&residual) {
        p += delta;
    }
    Some(p)
}

/// Perron root of a nonnegative square matrix by power iteration on
/// `A + I`, stopping when the Collatz-Wielandt bounds meet.
pub fn spectral_radius_nonneg(a: &DMatrix<f64>) -> f64 {
    let m = a.nrows();
    if m == 0 {
        return 0.0;
    }
    let shifted = a + DMatrix::identity(m, m);
    let mut x = DVector::from_element(m, 1.0);
    let (mut lo, mut hi) = (0.0, f64::INFINITY);
    for _ in 0..100_000 {
        let y = &shifted * &x;
        lo = f64::INFINITY;
        hi = 0.0;
        for i in 0..m {
            let r = y[i] / x[i];
            lo = f64::min(lo, r);
            hi = f64::max(hi, r);
        }
        if hi - lo <= 1e-13 * hi {
            break;
        }
        let scale = y.max();
        x = y / scale;
    }
    (0.5 * (lo + hi) - 1.0).max(0.0)
}

fn rhos(snapshot: &NetworkSnapshot) -> Vec<f64> {
    snapshot.links.iter().map(|l| l.rho).collect()
}

/// Spectral-radius feasibility verdict for the sizes currently in `snapshot`.
///
/// Feasible means radius below one and a componentwise-positive equality
/// solution within the power cap.
pub fn check_feasibility(snapshot: &NetworkSnapshot, params: &RadioParams) -> Result<Feasibility> {
    let table = GainTable::new(snapshot, params)?;
    let (a, b) = normalized_system(&table, &rhos(snapshot), &snapshot.sizes());
    let spectral_radius = spectral_radius_nonneg(&a);
    let powers = if spectral_radius < 1.0 {
        solve_equalities(&a, &b).map(|p| p.iter().copied().collect::<Vec<_>>())
    } else {
        None
    };
    let feasible = spectral_radius < 1.0
        && powers
            .as_ref()
            .is_some_and(|p| powers_admissible(p, &rhos(snapshot), params.p_tx_max).is_ok());
    Ok(Feasibility {
        feasible,
        spectral_radius,
        powers,
    })
}

fn powers_admissible(p: &[f64], rhos: &[f64], cap: f64) -> std::result::Result<(), Infeasibility> {
    for (i, (&pi, &rho)) in p.iter().zip(rhos).enumerate() {
        let positive = if rho > 0.0 { pi > 0.0 } else { pi >= 0.0 };
        if !positive || pi > cap || !pi.is_finite() {
            return Err(Infeasibility::PowerCap {
                link: i,
                required_mw: pi,
            });
        }
    }
    Ok(())
}

/// Minimum-power allocation for the fixed sizes in `snapshot`: every SINR
/// constraint at equality.
pub fn solve_power_for_sizes(snapshot: &NetworkSnapshot, params: &RadioParams) -> Result<Solution> {
    let verdict = check_feasibility(snapshot, params)?;
    if verdict.spectral_radius >= 1.0 {
        return Err(Error::Infeasible(Infeasibility::SpectralRadius(
            verdict.spectral_radius,
        )));
    }
    let powers = verdict.powers.ok_or(Error::Infeasible(Infeasibility::SpectralRadius(
        verdict.spectral_radius,
    )))?;
    powers_admissible(&powers, &rhos(snapshot), params.p_tx_max).map_err(Error::Infeasible)?;
    let mut solved = snapshot.clone();
    solved.set_powers(&powers);
    Solution::evaluate(&solved, params)
}

/// Iterates every size vector in lexicographic order (last link fastest).
struct SizeVectors {
    maxes: Vec<u32>,
    current: Option<Vec<u32>>,
}

impl SizeVectors {
    fn new(maxes: Vec<u32>) -> Self {
        let first = vec![1; maxes.len()];
        SizeVectors {
            maxes,
            current: Some(first),
        }
    }
}

impl Iterator for SizeVectors {
    type Item = Vec<u32>;

    fn next(&mut self) -> Option<Vec<u32>> {
        let out = self.current.clone()?;
        let mut next = out.clone();
        let mut k = next.len();
        loop {
            if k == 0 {
                self.current = None;
                break;
            }
            k -= 1;
            if next[k] < self.maxes[k] {
                next[k] += 1;
                self.current = Some(next);
                break;
            }
            next[k] = 1;
        }
        Some(out)
    }
}

/// Exhaustive joint optimum over all size vectors (`prod n_max` linear solves).
///
/// Ties in network power go to the lexicographically smallest size vector.
pub fn solve_exact(snapshot: &NetworkSnapshot, params: &RadioParams) -> Result<Solution> {
    let table = GainTable::new(snapshot, params)?;
    let rho = rhos(snapshot);
    let maxes: Vec<u32> = snapshot.links.iter().map(|l| l.n_max).collect();
    let mut best: Option<(f64, Vec<u32>)> = None;
    for sizes in SizeVectors::new(maxes) {
        let (a, b) = normalized_system(&table, &rho, &sizes);
        let Some(p) = solve_equalities(&a, &b) else {
            continue;
        };
        let p: Vec<f64> = p.iter().copied().collect();
        // A positive solution of (I - A) p = b with b > 0 already implies a
        // spectral radius below one.
        if powers_admissible(&p, &rho, params.p_tx_max).is_err() {
            continue;
        }
        let total: f64 = p
            .iter()
            .zip(&sizes)
            .map(|(&pi, &n)| crate::radio::client_power_mw(pi, n, params))
            .sum();
        if best.as_ref().is_none_or(|(b, _)| total < *b) {
            best = Some((total, sizes));
        }
    }
    let (_, sizes) = best.ok_or(Error::Infeasible(Infeasibility::NoSizeVector))?;
    solve_power_for_sizes(&snapshot.with_sizes(&sizes), params)
}

/// Size of the largest subset of `candidates` whose links all reach
/// `sinr_target` when every client transmits with size `n` at the same
/// fixed power `p_tx`.
pub fn max_feasible_links(
    candidates: &NetworkSnapshot,
    sinr_target: f64,
    n: u32,
    p_tx: f64,
    params: &RadioParams,
) -> Result<usize> {
    let m = candidates.len();
    if m > 20 {
        return Err(Error::param(
            "candidates",
            format!("at most 20 links supported, got {m}"),
        ));
    }
    if m == 0 {
        return Ok(0);
    }
    let mut links = candidates.clone();
    for link in &mut links.links {
        link.n_max = link.n_max.max(n);
        link.pattern.n = n;
        link.pattern.p_tx = p_tx;
    }
    let table = GainTable::new(&links, params)?;
    let mut by_size: Vec<u32> = (1u32..(1u32 << m)).collect();
    by_size.sort_by_key(|mask| std::cmp::Reverse(mask.count_ones()));
    for mask in by_size {
        let members: Vec<usize> = (0..m).filter(|&i| mask & (1 << i) != 0).collect();
        let ok = members.iter().all(|&i| {
            let interference: f64 = members
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| table.gain(i, j, n) * p_tx)
                .sum();
            table.gain(i, i, n) * p_tx / (table.noise() + interference) >= sinr_target
        });
        if ok {
            return Ok(members.len());
        }
    }
    Ok(0)
}
