//! Network geometry at one instant and the aggregate-interference SINR model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radio::{beam_gain, noise_power, path_gain, wrap_angle, BeamPattern, Point, RadioParams};

/// One uplink: a client, its serving base station, and its current pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub client: Point,
    pub serving_bs: usize,
    /// Number of antennas on the client.
    pub n_max: u32,
    /// SINR target at the serving base station.
    pub rho: f64,
    pub pattern: BeamPattern,
}

/// Geometry plus per-link state at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSnapshot {
    pub base_stations: Vec<Point>,
    pub links: Vec<Link>,
}

impl NetworkSnapshot {
    /// Builds a snapshot with every client omnidirectional at zero power and
    /// looking at its serving base station.
    pub fn new(base_stations: Vec<Point>, links: impl IntoIterator<Item = (Point, usize, u32, f64)>) -> Result<Self> {
        let mut snapshot = NetworkSnapshot {
            base_stations,
            links: Vec::new(),
        };
        for (client, serving_bs, n_max, rho) in links {
            snapshot.links.push(Link {
                client,
                serving_bs,
                n_max,
                rho,
                pattern: BeamPattern::omni(0.0, 0.0),
            });
        }
        snapshot.point_beams();
        snapshot.validate()?;
        Ok(snapshot)
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    /// Serving base station position of link `i`.
    pub fn serving_pos(&self, i: usize) -> Point {
        self.base_stations[self.links[i].serving_bs]
    }

    /// Points every client's look direction at its serving base station.
    pub fn point_beams(&mut self) {
        for i in 0..self.links.len() {
            if let Some(bs) = self.base_stations.get(self.links[i].serving_bs) {
                let dir = self.links[i].client.azimuth_to(bs);
                self.links[i].pattern.look_dir = dir;
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (i, link) in self.links.iter().enumerate() {
            if link.serving_bs >= self.base_stations.len() {
                return Err(Error::Geometry(format!(
                    "link {i} serves base station {} but only {} exist",
                    link.serving_bs,
                    self.base_stations.len()
                )));
            }
            if link.n_max == 0 {
                return Err(Error::param("n_max", format!("link {i}: must be >= 1")));
            }
            if link.pattern.n == 0 || link.pattern.n > link.n_max {
                return Err(Error::param(
                    "n",
                    format!("link {i}: size {} outside [1, {}]", link.pattern.n, link.n_max),
                ));
            }
            if !(link.rho >= 0.0 && link.rho.is_finite()) {
                return Err(Error::param(
                    "rho",
                    format!("link {i}: must be finite and >= 0, got {}", link.rho),
                ));
            }
            for (b, bs) in self.base_stations.iter().enumerate() {
                if !(link.client.distance_to(bs) > 0.0) {
                    return Err(Error::Geometry(format!(
                        "client of link {i} is co-located with base station {b}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn sizes(&self) -> Vec<u32> {
        self.links.iter().map(|l| l.pattern.n).collect()
    }

    pub fn powers(&self) -> Vec<f64> {
        self.links.iter().map(|l| l.pattern.p_tx).collect()
    }

    pub fn set_sizes(&mut self, sizes: &[u32]) {
        for (link, &n) in self.links.iter_mut().zip(sizes) {
            link.pattern.n = n;
        }
    }

    pub fn set_powers(&mut self, powers: &[f64]) {
        for (link, &p) in self.links.iter_mut().zip(powers) {
            link.pattern.p_tx = p;
        }
    }

    /// Copy with the given sizes.
    pub fn with_sizes(&self, sizes: &[u32]) -> Self {
        let mut s = self.clone();
        s.set_sizes(sizes);
        s
    }
}

/// Per-link SINR at the serving base stations under aggregate interference.
pub fn sinr_vector(snapshot: &NetworkSnapshot, params: &RadioParams) -> Result<Vec<f64>> {
    sinr_vector_scaled(snapshot, params, None)
}

/// [`sinr_vector`] with an optional per-link multiplier on the intended
/// signal's array gain (models beamsteering loss from stale CSI).
pub fn sinr_vector_scaled(
    snapshot: &NetworkSnapshot,
    params: &RadioParams,
    signal_scale: Option<&[f64]>,
) -> Result<Vec<f64>> {
    snapshot.validate()?;
    let noise = noise_power(params);
    let m = snapshot.len();
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        let rx = snapshot.serving_pos(i);
        let mut interference = 0.0;
        let mut signal = 0.0;
        for j in 0..m {
            let link = &snapshot.links[j];
            let received = link_gain(link, &rx, params)? * link.pattern.p_tx;
            if i == j {
                signal = received * signal_scale.map_or(1.0, |s| s[i]);
            } else {
                interference += received;
            }
        }
        out.push(signal / (noise + interference));
    }
    Ok(out)
}

/// Array gain times path gain from `link`'s client toward a receiver at `rx`.
fn link_gain(link: &Link, rx: &Point, params: &RadioParams) -> Result<f64> {
    let offset = wrap_angle(link.client.azimuth_to(rx) - link.pattern.look_dir);
    Ok(beam_gain(link.pattern.n, offset)? * path_gain(link.client.distance_to(rx), params)?)
}

/// Cached channel gains for a fixed geometry with beams pointed at the
/// serving base stations. `gain(i, j, n)` is the power gain from client `j`
/// using size `n` into the receiver of link `i`.
#[derive(Debug, Clone)]
pub struct GainTable {
    m: usize,
    n_cap: usize,
    // [i][j][n - 1], flattened
    gains: Vec<f64>,
    noise: f64,
}

impl GainTable {
    pub fn new(snapshot: &NetworkSnapshot, params: &RadioParams) -> Result<Self> {
        snapshot.validate()?;
        let m = snapshot.len();
        let n_cap = snapshot.links.iter().map(|l| l.n_max).max().unwrap_or(1) as usize;
        let mut gains = vec![0.0; m * m * n_cap];
        for i in 0..m {
            let rx = snapshot.serving_pos(i);
            for j in 0..m {
                let link = &snapshot.links[j];
                let look = link.client.azimuth_to(&snapshot.serving_pos(j));
                let offset = wrap_angle(link.client.azimuth_to(&rx) - look);
                let pg = path_gain(link.client.distance_to(&rx), params)?;
                for n in 1..=link.n_max {
                    gains[(i * m + j) * n_cap + (n as usize - 1)] = beam_gain(n, offset)? * pg;
                }
            }
        }
        Ok(GainTable {
            m,
            n_cap,
            gains,
            noise: noise_power(params),
        })
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    #[inline]
    pub fn gain(&self, i: usize, j: usize, n: u32) -> f64 {
        self.gains[(i * self.m + j) * self.n_cap + (n as usize - 1)]
    }

    /// SINR of every link for the given sizes and powers.
    pub fn sinrs(&self, sizes: &[u32], powers: &[f64]) -> Vec<f64> {
        (0..self.m)
            .map(|i| {
                let mut interference = 0.0;
                for j in (0..self.m).filter(|&j| j != i) {
                    interference += self.gain(i, j, sizes[j]) * powers[j];
                }
                self.gain(i, i, sizes[i]) * powers[i] / (self.noise + interference)
            })
            .collect()
    }
}
