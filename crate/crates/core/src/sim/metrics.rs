//! Per-frame telemetry and the aggregates derived from it.

use serde::{Deserialize, Serialize};

/// One UE in one frame. Column order is the CSV column order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub frame: u64,
    pub ue_id: u32,
    /// Transmit power, 0 when not transmitting.
    pub p_tx_mw: f64,
    /// Beamsteering size, 0 when not transmitting.
    pub n: u32,
    pub sinr_db: Option<f64>,
    pub bits: f64,
    /// Client power while transmitting, 0 otherwise.
    pub power_mw: f64,
    /// Age of the CSI the frame started with; empty when the UE never trained.
    pub csi_age_ms: Option<f64>,
    pub bs_id: Option<u32>,
}

impl MetricsRecord {
    pub fn is_transmitting(&self) -> bool {
        self.n > 0
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UeAggregate {
    pub ue_id: u32,
    pub transmit_frames: u64,
    pub bits: f64,
    pub energy_mj: f64,
    /// Frames spent at each size; index 0 is size 1.
    pub size_histogram: Vec<u64>,
}

impl UeAggregate {
    pub fn mean_power_mw(&self, frame_ms: f64) -> f64 {
        if self.transmit_frames == 0 {
            0.0
        } else {
            self.energy_mj / (self.transmit_frames as f64 * frame_ms / 1000.0)
        }
    }

    /// Most frequent size (smallest on ties), if the UE ever transmitted.
    pub fn size_mode(&self) -> Option<u32> {
        let (idx, &count) = self
            .size_histogram
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))?;
        (count > 0).then_some(idx as u32 + 1)
    }

    /// Fraction of transmitting frames spent at size `n`.
    pub fn size_share(&self, n: u32) -> f64 {
        if self.transmit_frames == 0 {
            return 0.0;
        }
        let c = self.size_histogram.get(n as usize - 1).copied().unwrap_or(0);
        c as f64 / self.transmit_frames as f64
    }
}

/// Network-wide totals over a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub frames: u64,
    pub transmit_frames: u64,
    pub total_bits: f64,
    pub energy_mj: f64,
    /// Mean client power over transmitting frames, mW.
    pub mean_tx_power_mw: f64,
    pub throughput_bps: f64,
    pub size_histogram: Vec<u64>,
    pub per_ue: Vec<UeAggregate>,
}

/// Folds records in arrival order so that in-memory and re-parsed record
/// streams produce bit-identical aggregates.
#[derive(Debug, Clone)]
pub struct Accumulator {
    frame_ms: f64,
    last_frame: Option<u64>,
    frames: u64,
    power_sum: f64,
    agg: Aggregates,
}

impl Accumulator {
    pub fn new(num_ues: usize, frame_ms: f64) -> Self {
        Accumulator {
            frame_ms,
            last_frame: None,
            frames: 0,
            power_sum: 0.0,
            agg: Aggregates {
                per_ue: (0..num_ues)
                    .map(|i| UeAggregate {
                        ue_id: i as u32,
                        ..UeAggregate::default()
                    })
                    .collect(),
                ..Aggregates::default()
            },
        }
    }

    pub fn push(&mut self, r: &MetricsRecord) {
        if self.last_frame != Some(r.frame) {
            self.last_frame = Some(r.frame);
            self.frames += 1;
        }
        let idx = r.ue_id as usize;
        if idx >= self.agg.per_ue.len() {
            self.agg.per_ue.resize_with(idx + 1, UeAggregate::default);
            for (i, u) in self.agg.per_ue.iter_mut().enumerate() {
                u.ue_id = i as u32;
            }
        }
        self.agg.total_bits += r.bits;
        let ue = &mut self.agg.per_ue[idx];
        ue.bits += r.bits;
        if r.is_transmitting() {
            let energy = r.power_mw * self.frame_ms / 1000.0;
            self.agg.transmit_frames += 1;
            self.agg.energy_mj += energy;
            self.power_sum += r.power_mw;
            ue.transmit_frames += 1;
            ue.energy_mj += energy;
            let k = r.n as usize - 1;
            for hist in [&mut ue.size_histogram, &mut self.agg.size_histogram] {
                if hist.len() <= k {
                    hist.resize(k + 1, 0);
                }
                hist[k] += 1;
            }
        }
    }

    pub fn finish(mut self) -> Aggregates {
        self.agg.frames = self.frames;
        self.agg.mean_tx_power_mw = if self.agg.transmit_frames > 0 {
            self.power_sum / self.agg.transmit_frames as f64
        } else {
            0.0
        };
        let seconds = self.frames as f64 * self.frame_ms / 1000.0;
        self.agg.throughput_bps = if seconds > 0.0 {
            self.agg.total_bits / seconds
        } else {
            0.0
        };
        self.agg
    }
}

/// Aggregates of a complete record stream.
pub fn aggregate<'a>(
    records: impl IntoIterator<Item = &'a MetricsRecord>,
    num_ues: usize,
    frame_ms: f64,
) -> Aggregates {
    let mut acc = Accumulator::new(num_ues, frame_ms);
    for r in records {
        acc.push(r);
    }
    acc.finish()
}
