//! Scenario files and canned topologies.
//!
//! A scenario is one JSON document with a `version` field. Unknown fields are
//! rejected and every omitted field takes its default. Static scenarios list
//! `links`; dynamic (cellular) scenarios carry `sim` and `ues`.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::NetworkSnapshot;
use crate::radio::{path_gain, sinr_for_capacity, Point, RadioParams};
use crate::sim::{CbrParams, CellularScenario, Policy, SimConfig, TrafficKind, UeSpec};

pub const SCENARIO_VERSION: u32 = 1;

const SEVEN_LINK_ASSET: &str = include_str!("../assets/seven_link.json");

/// One static uplink. Exactly one of `rho` and `capacity` must be given.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub client: Point,
    pub serving_bs: usize,
    #[serde(default = "default_n_max")]
    pub n_max: u32,
    /// SINR target, linear.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    /// Capacity target, b/s/Hz.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity: Option<f64>,
}

fn default_n_max() -> u32 {
    4
}

impl LinkSpec {
    pub fn target_sinr(&self) -> f64 {
        match (self.rho, self.capacity) {
            (Some(r), _) => r,
            (None, Some(c)) => sinr_for_capacity(c),
            (None, None) => f64::NAN,
        }
    }
}

/// Distribution used to redraw client positions: each client lands uniformly
/// in the annulus `[min_distance_m, max_distance_m]` around its serving base
/// station.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Placement {
    pub min_distance_m: f64,
    pub max_distance_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default)]
    pub radio: RadioParams,
    #[serde(default)]
    pub base_stations: Vec<Point>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub links: Vec<LinkSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub placement: Option<Placement>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<Policy>,
    /// Dynamic simulation settings. Its radio parameters always mirror `radio`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ues: Vec<UeSpec>,
    #[serde(default)]
    pub seed: u64,
}

impl ScenarioFile {
    pub fn new(radio: RadioParams, base_stations: Vec<Point>) -> Self {
        ScenarioFile {
            version: SCENARIO_VERSION,
            description: None,
            radio,
            base_stations,
            links: Vec::new(),
            placement: None,
            policy: None,
            sim: None,
            ues: Vec::new(),
            seed: 0,
        }
    }

    /// Parses and validates a scenario; `origin` names the source in errors.
    pub fn from_json_str(text: &str, origin: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let mut s: ScenarioFile = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            Error::Scenario {
                path: format!("{origin}: {path}"),
                line: Some(inner.line()),
                message: inner.to_string(),
            }
        })?;
        s.sync_radio();
        s.validate().map_err(|e| match e {
            Error::Scenario { path, line, message } => Error::Scenario {
                path: format!("{origin}: {path}"),
                line,
                message,
            },
            other => other,
        })?;
        Ok(s)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json_string()?)?;
        Ok(())
    }

    fn sync_radio(&mut self) {
        if let Some(sim) = &mut self.sim {
            sim.radio = self.radio;
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |path: String, message: String| Error::Scenario {
            path,
            line: None,
            message,
        };
        if self.version != SCENARIO_VERSION {
            return Err(bad(
                "version".into(),
                format!("unsupported version {}, expected {SCENARIO_VERSION}", self.version),
            ));
        }
        self.radio.validate().map_err(|e| bad("radio".into(), e.to_string()))?;
        for (i, l) in self.links.iter().enumerate() {
            let at = |field: &str| format!("links[{i}].{field}");
            if l.serving_bs >= self.base_stations.len() {
                return Err(bad(
                    at("serving_bs"),
                    format!(
                        "link {i} refers to base station {} of {}",
                        l.serving_bs,
                        self.base_stations.len()
                    ),
                ));
            }
            if l.n_max == 0 {
                return Err(bad(at("n_max"), format!("link {i}: n_max must be >= 1")));
            }
            match (l.rho, l.capacity) {
                (Some(_), Some(_)) | (None, None) => {
                    return Err(bad(
                        at("rho"),
                        format!("link {i}: give exactly one of rho and capacity"),
                    ));
                }
                (Some(r), None) if !(r >= 0.0 && r.is_finite()) => {
                    return Err(bad(
                        at("rho"),
                        format!("link {i}: rho must be finite and >= 0, got {r}"),
                    ));
                }
                (None, Some(c)) if !(c >= 0.0 && c.is_finite()) => {
                    return Err(bad(
                        at("capacity"),
                        format!("link {i}: capacity must be finite and >= 0, got {c}"),
                    ));
                }
                _ => {}
            }
        }
        if let Some(p) = &self.placement {
            if !(p.min_distance_m > 0.0 && p.max_distance_m >= p.min_distance_m) {
                return Err(bad(
                    "placement".into(),
                    "need 0 < min_distance_m <= max_distance_m".into(),
                ));
            }
        }
        if let Some(sim) = &self.sim {
            sim.validate().map_err(|e| bad("sim".into(), e.to_string()))?;
        }
        if !self.links.is_empty() {
            self.snapshot().map_err(|e| bad("links".into(), e.to_string()))?;
        }
        Ok(())
    }

    /// The static links as a snapshot: omnidirectional, zero power, beams on
    /// their serving base stations.
    pub fn snapshot(&self) -> Result<NetworkSnapshot> {
        NetworkSnapshot::new(
            self.base_stations.clone(),
            self.links
                .iter()
                .map(|l| (l.client, l.serving_bs, l.n_max, l.target_sinr())),
        )
    }

    /// Copy with every client redrawn from `placement` using `seed`.
    pub fn with_random_placement(&self, seed: u64) -> Result<Self> {
        let p = self
            .placement
            .ok_or_else(|| Error::param("placement", "scenario has no placement distribution"))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = self.clone();
        for link in &mut out.links {
            let bs = self.base_stations[link.serving_bs];
            link.client = annulus_point(&mut rng, bs, p.min_distance_m, p.max_distance_m);
        }
        out.seed = seed;
        Ok(out)
    }

    /// The dynamic part, if any.
    pub fn cellular(&self) -> Result<CellularScenario> {
        let mut config = self
            .sim
            .clone()
            .ok_or_else(|| Error::param("sim", "scenario has no simulation settings"))?;
        config.radio = self.radio;
        Ok(CellularScenario {
            base_stations: self.base_stations.clone(),
            ues: self.ues.clone(),
            config,
        })
    }
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioFile> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    ScenarioFile::from_json_str(&text, &path.display().to_string())
}

fn annulus_point<R: Rng>(rng: &mut R, center: Point, r_min: f64, r_max: f64) -> Point {
    // area-uniform radius
    let u: f64 = rng.random();
    let r = (r_min * r_min + u * (r_max * r_max - r_min * r_min)).sqrt();
    let a = rng.random_range(0.0..2.0 * PI);
    Point::new(center.x + r * a.cos(), center.y + r * a.sin())
}

/// Two base stations and two clients side by side: client `i` sits `d_ii`
/// straight below base station `i`, and the base stations are spread so that
/// client 1 is `d12` from base station 2. The network capacity `c_network` is
/// split as `C1 / C2 = c1_over_c2`.
pub fn two_link(d11: f64, d22: f64, d12: f64, c1_over_c2: f64, c_network: f64) -> Result<ScenarioFile> {
    if !(d11 > 0.0 && d22 > 0.0) {
        return Err(Error::param("d11/d22", "must be > 0"));
    }
    if !(d12 > d11) {
        return Err(Error::param("d12", format!("must exceed d11 = {d11}, got {d12}")));
    }
    if !(c1_over_c2 > 0.0 && c_network > 0.0) {
        return Err(Error::param("capacity", "c1_over_c2 and c_network must be > 0"));
    }
    let s = if d12.is_infinite() {
        1e12
    } else {
        (d12 * d12 - d11 * d11).sqrt()
    };
    let c1 = c_network * c1_over_c2 / (1.0 + c1_over_c2);
    let c2 = c_network / (1.0 + c1_over_c2);
    let mut sc = ScenarioFile::new(RadioParams::default(), vec![Point::new(0.0, 0.0), Point::new(s, 0.0)]);
    sc.description = Some(format!("two links, d11={d11} d22={d22} d12={d12}"));
    sc.links = vec![
        LinkSpec {
            client: Point::new(0.0, -d11),
            serving_bs: 0,
            n_max: 4,
            rho: None,
            capacity: Some(c1),
        },
        LinkSpec {
            client: Point::new(s, -d22),
            serving_bs: 1,
            n_max: 4,
            rho: None,
            capacity: Some(c2),
        },
    ];
    Ok(sc)
}

/// The canned seven-link network; coordinates are approximate.
pub fn seven_link() -> ScenarioFile {
    ScenarioFile::from_json_str(SEVEN_LINK_ASSET, "assets/seven_link.json").expect("bundled asset is valid")
}

/// Seven base stations: one at the center of the 4 km square and six around
/// it at `spacing` meters.
pub fn hex_layout(center: Point, spacing: f64) -> Vec<Point> {
    let mut out = vec![center];
    for k in 0..6 {
        let a = PI / 6.0 + k as f64 * PI / 3.0;
        out.push(Point::new(center.x + spacing * a.cos(), center.y + spacing * a.sin()));
    }
    out
}

/// Simulation settings of the canned cellular scenario. Differs from
/// [`SimConfig::default`] in the calibrated constants: receiver noise,
/// per-class capacity targets, power cap and CBR packet pattern.
pub fn cellular_config(seed: u64) -> SimConfig {
    let mut config = SimConfig {
        rng_seed: seed,
        ftp_capacity: 1.6,
        cbr_capacity: 1.25,
        cbr: CbrParams {
            packet_bytes: 65536,
            interval_ms: 400.0,
        },
        ..SimConfig::default()
    };
    // 10 dB receiver noise figure
    config.radio.noise_density = -160.0;
    config.radio.p_tx_max = 1000.0;
    config
}

/// Seven Node-Bs 1.5 km apart and thirty UEs uniform over a 4 km square,
/// all with the given traffic, using [`cellular_config`].
pub fn cellular_7x30(seed: u64, traffic: TrafficKind) -> ScenarioFile {
    let config = cellular_config(seed);
    let [w, h] = config.area;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7e57_ce11);
    let ues = (0..30)
        .map(|_| UeSpec {
            position: Point::new(rng.random_range(0.0..w), rng.random_range(0.0..h)),
            traffic,
            pinned: false,
        })
        .collect();
    let mut sc = ScenarioFile::new(config.radio, hex_layout(Point::new(w / 2.0, h / 2.0), 1500.0));
    sc.description = Some(format!("7 Node-Bs, 30 {traffic} UEs"));
    sc.sim = Some(config);
    sc.ues = ues;
    sc.seed = seed;
    sc
}

/// Distances of the probe UEs added by [`cellular_with_probes`], meters.
pub const PROBE_DISTANCES_M: [f64; 4] = [360.0, 500.0, 600.0, 760.0];

/// [`cellular_7x30`] plus four pinned FTP probes (UE ids 30..34), each placed
/// radially outward from a different outer Node-B at [`PROBE_DISTANCES_M`].
pub fn cellular_with_probes(seed: u64, traffic: TrafficKind) -> ScenarioFile {
    let mut sc = cellular_7x30(seed, traffic);
    let center = sc.base_stations[0];
    // outer Node-Bs facing the corners of the square
    for (&d, bs) in PROBE_DISTANCES_M.iter().zip([1usize, 3, 4, 6]) {
        let b = sc.base_stations[bs];
        let a = center.azimuth_to(&b);
        sc.ues.push(UeSpec {
            position: Point::new(b.x + d * a.cos(), b.y + d * a.sin()),
            traffic: TrafficKind::Ftp,
            pinned: true,
        });
    }
    sc.description = Some(format!("7 Node-Bs, 30 {traffic} UEs, 4 pinned probes"));
    sc
}

/// Defaults of the concurrent-links experiment: disc radius, client
/// distance range (meters), capacity target (b/s/Hz) and lone-link margin (dB).
pub const CANDIDATE_DISC_RADIUS_M: f64 = 1000.0;
pub const CANDIDATE_LINK_RANGE_M: (f64, f64) = (100.0, 300.0);
pub const CANDIDATE_CAPACITY: f64 = 3.0;
pub const CANDIDATE_MARGIN_DB: f64 = 10.0;

/// Independent candidate links for the concurrent-links experiment:
/// base stations uniform in a disc of `radius_m`, each client a uniform
/// distance in `[link_min_m, link_max_m]` from its base station in a
/// uniform direction.
pub fn random_candidate_links(
    seed: u64,
    count: usize,
    radius_m: f64,
    link_min_m: f64,
    link_max_m: f64,
    sinr_target: f64,
) -> Result<NetworkSnapshot> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bs = Vec::with_capacity(count);
    let mut links = Vec::with_capacity(count);
    for i in 0..count {
        let b = annulus_point(&mut rng, Point::new(0.0, 0.0), 0.0, radius_m);
        let len = rng.random_range(link_min_m..=link_max_m);
        let a = rng.random_range(0.0..2.0 * PI);
        bs.push(b);
        links.push((Point::new(b.x + len * a.cos(), b.y + len * a.sin()), i, 4, sinr_target));
    }
    NetworkSnapshot::new(bs, links)
}

/// Common transmit power at which the weakest link, alone and omnidirectional,
/// beats `sinr_target` by `margin_db`.
pub fn lone_link_power(
    candidates: &NetworkSnapshot,
    sinr_target: f64,
    margin_db: f64,
    params: &RadioParams,
) -> Result<f64> {
    let mut worst = f64::INFINITY;
    for i in 0..candidates.len() {
        let d = candidates.links[i].client.distance_to(&candidates.serving_pos(i));
        worst = worst.min(path_gain(d, params)?);
    }
    if !worst.is_finite() {
        return Err(Error::param("candidates", "no links"));
    }
    Ok(sinr_target * 10f64.powf(margin_db / 10.0) * params.noise_power() / worst)
}
