use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radio::{Point, RadioParams};

/// Client beam policy for a whole run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Policy {
    Omni,
    /// Always beamsteer with exactly this many antennas.
    BeamSteerFixed(u32),
    /// BeamAdapt choosing among `1..=n_max` antennas.
    BeamAdapt(u32),
}

impl Policy {
    /// Antennas a client needs to carry for this policy.
    pub fn n_max(&self) -> u32 {
        match *self {
            Policy::Omni => 1,
            Policy::BeamSteerFixed(n) | Policy::BeamAdapt(n) => n,
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::Omni => f.write_str("omni"),
            Policy::BeamSteerFixed(n) => write!(f, "bs{n}"),
            Policy::BeamAdapt(n) => write!(f, "ba{n}"),
        }
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::param("policy", format!("expected omni, bsN or baN, got `{s}`"));
        if s == "omni" {
            return Ok(Policy::Omni);
        }
        let (kind, n) = s.split_at(s.len().min(2));
        let n: u32 = n.parse().map_err(|_| bad())?;
        if n == 0 {
            return Err(bad());
        }
        match kind {
            "bs" => Ok(Policy::BeamSteerFixed(n)),
            "ba" => Ok(Policy::BeamAdapt(n)),
            _ => Err(bad()),
        }
    }
}

impl From<Policy> for String {
    fn from(p: Policy) -> String {
        p.to_string()
    }
}

impl TryFrom<String> for Policy {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrafficKind {
    /// Unlimited backlog.
    Ftp,
    /// Fixed-size packets at a fixed interval.
    Cbr,
}

impl FromStr for TrafficKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ftp" => Ok(TrafficKind::Ftp),
            "cbr" => Ok(TrafficKind::Cbr),
            _ => Err(Error::param("traffic", format!("expected ftp or cbr, got `{s}`"))),
        }
    }
}

impl fmt::Display for TrafficKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrafficKind::Ftp => "ftp",
            TrafficKind::Cbr => "cbr",
        })
    }
}

/// Placement and behaviour of one UE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UeSpec {
    pub position: Point,
    pub traffic: TrafficKind,
    /// Pinned UEs never move.
    #[serde(default)]
    pub pinned: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MobilityConfig {
    pub speed_min_mph: f64,
    pub speed_max_mph: f64,
    /// Pause at each waypoint, seconds.
    pub pause_s: f64,
}

impl Default for MobilityConfig {
    fn default() -> Self {
        MobilityConfig {
            speed_min_mph: 0.0,
            speed_max_mph: 70.0,
            pause_s: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CbrParams {
    pub packet_bytes: u32,
    pub interval_ms: f64,
}

impl Default for CbrParams {
    fn default() -> Self {
        CbrParams {
            packet_bytes: 1024,
            interval_ms: 100.0,
        }
    }
}

/// Multiplier on the intended signal's array gain once CSI is at least
/// `age_ms` old. Entries are matched by the largest `age_ms` not above the
/// current age.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainDecayStep {
    pub age_ms: f64,
    pub factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Width and height of the simulated area, meters. Origin at the lower-left corner.
    pub area: [f64; 2],
    pub frame_ms: f64,
    /// CSI staleness threshold; `null` means CSI never goes stale.
    pub t_th_ms: Option<f64>,
    pub duration_s: f64,
    pub rng_seed: u64,
    pub radio: RadioParams,
    pub mobility: MobilityConfig,
    /// Cells `i` and `j` share spectrum when `i % reuse == j % reuse`.
    pub frequency_reuse: u32,
    /// Node-B coverage radius, meters.
    pub bs_range_m: f64,
    /// Capacity target for FTP UEs, b/s/Hz.
    pub ftp_capacity: f64,
    /// Capacity target for CBR UEs, b/s/Hz.
    pub cbr_capacity: f64,
    pub cbr: CbrParams,
    /// Consecutive frames a scheduled UE keeps its cell's uplink while backlogged.
    pub schedule_quantum_frames: u32,
    /// Optional gradual beamsteering loss with CSI age; empty disables it.
    pub gain_decay: Vec<GainDecayStep>,
    /// Standard deviation of SINR measurement error, dB; zero disables it.
    pub sinr_meas_noise_db: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            area: [4000.0, 4000.0],
            frame_ms: 10.0,
            t_th_ms: Some(20.0),
            duration_s: 60.0,
            rng_seed: 1,
            radio: RadioParams::default(),
            mobility: MobilityConfig::default(),
            frequency_reuse: 1,
            bs_range_m: 1000.0,
            ftp_capacity: 3.6,
            cbr_capacity: 1.0,
            cbr: CbrParams::default(),
            schedule_quantum_frames: 10,
            gain_decay: Vec::new(),
            sinr_meas_noise_db: 0.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.radio.validate()?;
        let check = |ok: bool, name: &'static str, reason: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::param(name, reason))
            }
        };
        check(
            self.area.iter().all(|&a| a > 0.0 && a.is_finite()),
            "area",
            "must be positive",
        )?;
        check(
            self.frame_ms > 0.0 && self.frame_ms.is_finite(),
            "frame_ms",
            "must be > 0",
        )?;
        check(self.t_th_ms.is_none_or(|t| t >= 0.0), "t_th_ms", "must be >= 0 or null")?;
        check(
            self.duration_s >= 0.0 && self.duration_s.is_finite(),
            "duration_s",
            "must be >= 0",
        )?;
        check(
            self.mobility.speed_min_mph >= 0.0 && self.mobility.speed_max_mph >= self.mobility.speed_min_mph,
            "mobility",
            "need 0 <= speed_min_mph <= speed_max_mph",
        )?;
        check(self.mobility.pause_s >= 0.0, "mobility.pause_s", "must be >= 0")?;
        check(self.frequency_reuse >= 1, "frequency_reuse", "must be >= 1")?;
        check(self.bs_range_m > 0.0, "bs_range_m", "must be > 0")?;
        check(self.ftp_capacity > 0.0, "ftp_capacity", "must be > 0")?;
        check(self.cbr_capacity > 0.0, "cbr_capacity", "must be > 0")?;
        check(
            self.cbr.packet_bytes > 0 && self.cbr.interval_ms > 0.0,
            "cbr",
            "packet_bytes and interval_ms must be > 0",
        )?;
        check(
            self.schedule_quantum_frames >= 1,
            "schedule_quantum_frames",
            "must be >= 1",
        )?;
        check(
            self.gain_decay
                .iter()
                .all(|s| s.age_ms >= 0.0 && (0.0..=1.0).contains(&s.factor)),
            "gain_decay",
            "ages must be >= 0 and factors in [0, 1]",
        )?;
        check(self.sinr_meas_noise_db >= 0.0, "sinr_meas_noise_db", "must be >= 0")?;
        Ok(())
    }

    pub fn frames(&self) -> u64 {
        (self.duration_s * 1000.0 / self.frame_ms).round() as u64
    }

    pub fn capacity_for(&self, traffic: TrafficKind) -> f64 {
        match traffic {
            TrafficKind::Ftp => self.ftp_capacity,
            TrafficKind::Cbr => self.cbr_capacity,
        }
    }
}
