//! World state and the per-frame update.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::config::{Policy, SimConfig, TrafficKind, UeSpec};
use super::metrics::MetricsRecord;
use super::mobility::{advance, Waypoint};
use crate::beamadapt::{required_omni_power, select_pattern, BeamSetting, ClientState};
use crate::error::{Error, Result};
use crate::network::{sinr_vector_scaled, Link, NetworkSnapshot};
use crate::radio::{capacity, client_power_mw, noise_power, path_gain, sinr_for_capacity, to_db, BeamPattern, Point};

/// A base station. Position and range are fixed for the whole run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeB {
    pub id: u32,
    pub position: Point,
    pub range_m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ue {
    pub id: u32,
    pub position: Point,
    pub waypoint: Waypoint,
    pub pinned: bool,
    pub traffic: TrafficKind,
    pub serving_bs: Option<usize>,
    /// Setting used in the last transmitted frame, its target and the SINR
    /// the Node-B measured for it. `measured` is false until the first
    /// transmission after attaching.
    pub client_state: ClientState,
    pub measured: bool,
    /// Frame of the last uplink carrying training symbols.
    pub last_training_frame: Option<u64>,
    /// Queued CBR bits.
    pub queue_bits: f64,
    /// Next CBR packet arrival, ms since start.
    pub next_arrival_ms: f64,
}

impl Ue {
    /// Age of the CSI at the start of `frame`, or `None` if the UE never trained.
    pub fn csi_age_ms(&self, frame: u64, frame_ms: f64) -> Option<f64> {
        self.last_training_frame.map(|t| (frame - t) as f64 * frame_ms)
    }

    fn backlogged(&self) -> bool {
        match self.traffic {
            TrafficKind::Ftp => true,
            TrafficKind::Cbr => self.queue_bits > 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct CellSchedule {
    holder: Option<usize>,
    frames_left: u32,
    last_served: Option<usize>,
}

/// One simulated network under one policy.
#[derive(Debug, Clone)]
pub struct World {
    pub config: SimConfig,
    pub policy: Policy,
    pub node_bs: Vec<NodeB>,
    pub ues: Vec<Ue>,
    pub frame: u64,
    /// Transmitting frames forced omnidirectional by stale CSI.
    pub stale_frames: u64,
    cells: Vec<CellSchedule>,
    rng: ChaCha8Rng,
    meas_rng: ChaCha8Rng,
}

impl World {
    pub fn new(config: SimConfig, policy: Policy, base_stations: &[Point], ues: &[UeSpec]) -> Result<Self> {
        config.validate()?;
        if policy.n_max() == 0 {
            return Err(Error::param("policy", "size must be >= 1"));
        }
        if base_stations.is_empty() {
            return Err(Error::Geometry("no base stations".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
        let mut meas_rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
        meas_rng.set_stream(1);
        let node_bs = base_stations
            .iter()
            .enumerate()
            .map(|(i, &position)| NodeB {
                id: i as u32,
                position,
                range_m: config.bs_range_m,
            })
            .collect();
        let mut out = Vec::with_capacity(ues.len());
        for (i, desc) in ues.iter().enumerate() {
            let waypoint = Waypoint::draw(&mut rng, config.area, &config.mobility);
            let phase = rng.random_range(0.0..config.cbr.interval_ms);
            out.push(Ue {
                id: i as u32,
                position: desc.position,
                waypoint,
                pinned: desc.pinned,
                traffic: desc.traffic,
                serving_bs: None,
                client_state: ClientState {
                    p_tx: 0.0,
                    n: 1,
                    n_max: policy.n_max(),
                    rho: sinr_for_capacity(config.capacity_for(desc.traffic)),
                    last_sinr: 0.0,
                },
                measured: false,
                last_training_frame: None,
                queue_bits: 0.0,
                next_arrival_ms: phase,
            });
        }
        Ok(World {
            cells: vec![CellSchedule::default(); base_stations.len()],
            config,
            policy,
            node_bs,
            ues: out,
            frame: 0,
            stale_frames: 0,
            rng,
            meas_rng,
        })
    }

    pub fn finished(&self) -> bool {
        self.frame >= self.config.frames()
    }

    /// Advances one frame, appending one record per UE to `records`.
    pub fn step_frame(&mut self, records: &mut Vec<MetricsRecord>) -> Result<()> {
        let frame_ms = self.config.frame_ms;
        let dt = frame_ms / 1000.0;
        let t_ms = self.frame as f64 * frame_ms;

        for ue in self.ues.iter_mut().filter(|u| !u.pinned) {
            advance(
                &mut ue.position,
                &mut ue.waypoint,
                dt,
                self.config.area,
                &self.config.mobility,
                &mut self.rng,
            );
        }

        for ue in &mut self.ues {
            let nearest = nearest_in_range(&self.node_bs, ue.position);
            if nearest != ue.serving_bs {
                ue.serving_bs = nearest;
                ue.measured = false;
                ue.last_training_frame = None;
                ue.queue_bits = 0.0;
            }
        }

        let packet_bits = self.config.cbr.packet_bytes as f64 * 8.0;
        for ue in self.ues.iter_mut().filter(|u| u.traffic == TrafficKind::Cbr) {
            while ue.next_arrival_ms < t_ms + frame_ms {
                if ue.serving_bs.is_some() {
                    ue.queue_bits += packet_bits;
                }
                ue.next_arrival_ms += self.config.cbr.interval_ms;
            }
        }

        let transmitters = self.schedule();

        let params = self.config.radio;
        let mut settings: Vec<(usize, BeamSetting, Option<f64>)> = Vec::with_capacity(transmitters.len());
        for &u in &transmitters {
            let ue = &self.ues[u];
            let bs = self.node_bs[ue.serving_bs.expect("scheduled UEs are attached")].position;
            let rho = ue.client_state.rho;
            let p_omni = if ue.measured {
                let cs = &ue.client_state;
                required_omni_power(cs.p_tx, cs.n, rho, cs.last_sinr)
            } else {
                let mut channel = params;
                channel.bandwidth /= self.config.frequency_reuse as f64;
                rho * noise_power(&channel) / path_gain(ue.position.distance_to(&bs), &params)?
            };
            let age = ue.csi_age_ms(self.frame, frame_ms);
            let stale = match self.config.t_th_ms {
                None => false,
                Some(t_th) => age.is_none_or(|a| a > t_th),
            };
            let setting = if stale {
                self.stale_frames += 1;
                BeamSetting {
                    p_tx: p_omni.min(params.p_tx_max),
                    n: 1,
                }
            } else {
                self.pattern_for(p_omni)
            };
            settings.push((u, setting, age));
        }

        let sinrs = self.joint_sinr(&settings)?;

        let bw = params.bandwidth / self.config.frequency_reuse as f64;
        let mut per_ue: Vec<Option<MetricsRecord>> = vec![None; self.ues.len()];
        for (k, &(u, setting, age)) in settings.iter().enumerate() {
            let s = sinrs[k];
            let ue = &mut self.ues[u];
            let rate = capacity(s).min(capacity(ue.client_state.rho)) * bw * dt;
            let bits = match ue.traffic {
                TrafficKind::Ftp => rate,
                TrafficKind::Cbr => {
                    let b = rate.min(ue.queue_bits);
                    ue.queue_bits -= b;
                    b
                }
            };
            let measured = if self.config.sinr_meas_noise_db > 0.0 {
                let err = Normal::new(0.0, self.config.sinr_meas_noise_db)
                    .map_err(|e| Error::param("sinr_meas_noise_db", e.to_string()))?
                    .sample(&mut self.meas_rng);
                s * 10f64.powf(err / 10.0)
            } else {
                s
            };
            ue.client_state.p_tx = setting.p_tx;
            ue.client_state.n = setting.n;
            ue.client_state.last_sinr = measured;
            ue.measured = measured > 0.0;
            ue.last_training_frame = Some(self.frame);
            per_ue[u] = Some(MetricsRecord {
                frame: self.frame,
                ue_id: ue.id,
                p_tx_mw: setting.p_tx,
                n: setting.n,
                sinr_db: Some(to_db(s)),
                bits,
                power_mw: client_power_mw(setting.p_tx, setting.n, &params),
                csi_age_ms: age,
                bs_id: ue.serving_bs.map(|b| b as u32),
            });
        }
        for (u, rec) in per_ue.into_iter().enumerate() {
            let ue = &self.ues[u];
            records.push(rec.unwrap_or(MetricsRecord {
                frame: self.frame,
                ue_id: ue.id,
                p_tx_mw: 0.0,
                n: 0,
                sinr_db: None,
                bits: 0.0,
                power_mw: 0.0,
                csi_age_ms: ue.csi_age_ms(self.frame, frame_ms),
                bs_id: ue.serving_bs.map(|b| b as u32),
            }));
        }
        self.frame += 1;
        Ok(())
    }

    /// Picks at most one backlogged UE per cell. A UE keeps its cell for
    /// `schedule_quantum_frames` consecutive frames while backlogged, then
    /// the turn passes round-robin by UE id.
    fn schedule(&mut self) -> Vec<usize> {
        let quantum = self.config.schedule_quantum_frames;
        let mut out = Vec::new();
        for (c, cell) in self.cells.iter_mut().enumerate() {
            if let Some(h) = cell.holder {
                let ue = &self.ues[h];
                if cell.frames_left == 0 || ue.serving_bs != Some(c) || !ue.backlogged() {
                    cell.holder = None;
                }
            }
            if cell.holder.is_none() {
                let eligible = |u: &&Ue| u.serving_bs == Some(c) && u.backlogged();
                let after = cell.last_served.map_or(0, |l| l + 1);
                let next = self.ues[after.min(self.ues.len())..]
                    .iter()
                    .find(eligible)
                    .or_else(|| self.ues.iter().find(eligible));
                if let Some(ue) = next {
                    let idx = ue.id as usize;
                    cell.holder = Some(idx);
                    cell.last_served = Some(idx);
                    cell.frames_left = quantum;
                }
            }
            if let Some(h) = cell.holder {
                cell.frames_left -= 1;
                out.push(h);
            }
        }
        out.sort_unstable();
        out
    }

    /// Pattern for a UE with fresh CSI that needs `p_omni` omnidirectionally.
    fn pattern_for(&self, p_omni: f64) -> BeamSetting {
        let params = &self.config.radio;
        match self.policy {
            Policy::Omni => clamp_or_select(p_omni, 1, params),
            Policy::BeamAdapt(n_max) => clamp_or_select(p_omni, n_max, params),
            Policy::BeamSteerFixed(n) => BeamSetting {
                p_tx: (p_omni / n as f64).min(params.p_tx_max),
                n,
            },
        }
    }

    /// SINR of every transmitter, co-channel cells interfering with each other.
    fn joint_sinr(&self, settings: &[(usize, BeamSetting, Option<f64>)]) -> Result<Vec<f64>> {
        let reuse = self.config.frequency_reuse as usize;
        let mut params = self.config.radio;
        params.bandwidth /= reuse as f64;
        let base_stations: Vec<Point> = self.node_bs.iter().map(|b| b.position).collect();
        let mut out = vec![0.0; settings.len()];
        for channel in 0..reuse {
            let members: Vec<usize> = (0..settings.len())
                .filter(|&k| self.ues[settings[k].0].serving_bs.unwrap() % reuse == channel)
                .collect();
            if members.is_empty() {
                continue;
            }
            let mut snapshot = NetworkSnapshot {
                base_stations: base_stations.clone(),
                links: members
                    .iter()
                    .map(|&k| {
                        let (u, s, _) = settings[k];
                        let ue = &self.ues[u];
                        Link {
                            client: ue.position,
                            serving_bs: ue.serving_bs.unwrap(),
                            n_max: s.n,
                            rho: ue.client_state.rho,
                            pattern: BeamPattern::new(s.p_tx, s.n, 0.0),
                        }
                    })
                    .collect(),
            };
            snapshot.point_beams();
            let scale: Vec<f64> = members
                .iter()
                .map(|&k| {
                    let (_, s, age) = settings[k];
                    if s.n > 1 {
                        self.decay_factor(age)
                    } else {
                        1.0
                    }
                })
                .collect();
            let s = sinr_vector_scaled(&snapshot, &params, Some(&scale))?;
            for (&k, v) in members.iter().zip(s) {
                out[k] = v;
            }
        }
        Ok(out)
    }

    fn decay_factor(&self, age: Option<f64>) -> f64 {
        let age = match age {
            Some(a) => a,
            None => return 1.0,
        };
        self.config
            .gain_decay
            .iter()
            .filter(|s| s.age_ms <= age)
            .max_by(|a, b| a.age_ms.total_cmp(&b.age_ms))
            .map_or(1.0, |s| s.factor)
    }
}

/// BeamAdapt choice among `1..=n_max` from a fresh start; when nothing fits
/// under the cap the largest size at full power is used.
fn clamp_or_select(p_omni: f64, n_max: u32, params: &crate::radio::RadioParams) -> BeamSetting {
    select_pattern(p_omni, 1, n_max, params).unwrap_or(BeamSetting {
        p_tx: params.p_tx_max,
        n: n_max,
    })
}

fn nearest_in_range(node_bs: &[NodeB], pos: Point) -> Option<usize> {
    let mut best: Option<(f64, usize)> = None;
    for (i, b) in node_bs.iter().enumerate() {
        let d = pos.distance_to(&b.position);
        if d <= b.range_m && best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, i));
        }
    }
    best.map(|(_, i)| i)
}
