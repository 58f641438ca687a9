//! Physical layer model: array gain, propagation, noise, SINR, capacity and
//! the client power model that every solver and the simulator consume.
//!
//! All functions here are pure. Powers are in milliwatts, distances in
//! meters, angles in radians.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical constants shared by every link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioParams {
    /// Power-amplifier overhead factor; the PA draws `(1 + alpha) * p_tx`.
    pub alpha: f64,
    /// Power of one active RF chain, mW.
    pub p_circuit: f64,
    /// Power of the circuitry shared by all chains, mW.
    pub p_shared: f64,
    /// Path-loss exponent.
    pub decay: f64,
    /// Receiver thermal noise density, dBm/Hz.
    pub noise_density: f64,
    /// Channel bandwidth, Hz.
    pub bandwidth: f64,
    /// Carrier frequency, Hz. Only informational under the half-wavelength array model.
    pub carrier_freq: f64,
    /// Per-client transmit power cap, mW.
    pub p_tx_max: f64,
}

impl Default for RadioParams {
    fn default() -> Self {
        RadioParams {
            alpha: 1.875,
            p_circuit: 48.2,
            p_shared: 50.0,
            decay: 4.0,
            noise_density: -170.0,
            bandwidth: 5e6,
            carrier_freq: 2e9,
            p_tx_max: 250.0,
        }
    }
}

impl RadioParams {
    pub fn validate(&self) -> Result<()> {
        fn check(ok: bool, name: &'static str, reason: &str) -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::param(name, reason))
            }
        }
        check(self.alpha >= 0.0 && self.alpha.is_finite(), "alpha", "must be >= 0")?;
        check(
            self.p_circuit > 0.0 && self.p_circuit.is_finite(),
            "p_circuit",
            "must be > 0",
        )?;
        check(
            self.p_shared >= 0.0 && self.p_shared.is_finite(),
            "p_shared",
            "must be >= 0",
        )?;
        check(self.decay >= 2.0 && self.decay.is_finite(), "decay", "must be >= 2")?;
        check(self.noise_density.is_finite(), "noise_density", "must be finite")?;
        check(
            self.bandwidth > 0.0 && self.bandwidth.is_finite(),
            "bandwidth",
            "must be > 0",
        )?;
        check(self.carrier_freq > 0.0, "carrier_freq", "must be > 0")?;
        check(self.p_tx_max > 0.0, "p_tx_max", "must be > 0")?;
        Ok(())
    }

    /// Thermal noise power over the channel bandwidth, mW.
    pub fn noise_power(&self) -> f64 {
        noise_power(self)
    }
}

/// A position in the plane, meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance_to(&self, other: &Point) -> f64 {
        (other.x - self.x).hypot(other.y - self.y)
    }

    /// Azimuth of `other` seen from `self`, in `(-pi, pi]`.
    pub fn azimuth_to(&self, other: &Point) -> f64 {
        (other.y - self.y).atan2(other.x - self.x)
    }
}

/// A client's transmit configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamPattern {
    /// Total transmit power over all active chains, mW.
    pub p_tx: f64,
    /// Beamsteering size: number of active antennas / RF chains.
    pub n: u32,
    /// Azimuth of the main lobe, radians.
    pub look_dir: f64,
}

impl BeamPattern {
    pub fn new(p_tx: f64, n: u32, look_dir: f64) -> Self {
        BeamPattern { p_tx, n, look_dir }
    }

    pub fn omni(p_tx: f64, look_dir: f64) -> Self {
        BeamPattern::new(p_tx, 1, look_dir)
    }
}

/// Wraps an angle into `[-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    if (-PI..=PI).contains(&theta) {
        return theta;
    }
    let wrapped = (theta + PI).rem_euclid(2.0 * PI) - PI;
    if wrapped == -PI {
        PI
    } else {
        wrapped
    }
}

/// Array gain of an `n`-element uniform linear array with half-wavelength
/// spacing, steered to broadside, at the normalized direction `u = sin(offset)`.
pub fn beam_gain_u(n: u32, u: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::param("n", "beamsteering size must be >= 1"));
    }
    let sum: Complex64 = (0..n).map(|k| Complex64::from_polar(1.0, PI * k as f64 * u)).sum();
    Ok(sum.norm_sqr() / n as f64)
}

/// Gain of an `n`-chain beamsteering array at `offset` radians from its look
/// direction, relative to an omnidirectional antenna. Peaks at exactly `n`.
///
/// The array is linear, so a direction and its mirror about the array axis
/// see the same gain.
pub fn beam_gain(n: u32, offset: f64) -> Result<f64> {
    if n == 1 {
        return Ok(1.0);
    }
    beam_gain_u(n, offset.sin())
}

/// Distance-only propagation gain with a 1 m reference: `(1 / d)^decay`.
pub fn path_gain(distance: f64, params: &RadioParams) -> Result<f64> {
    if !(distance > 0.0) {
        return Err(Error::Geometry(format!("distance must be > 0, got {distance}")));
    }
    Ok(distance.recip().powf(params.decay))
}

/// Noise power over the full channel bandwidth, mW.
pub fn noise_power(params: &RadioParams) -> f64 {
    dbm_to_mw(params.noise_density + 10.0 * params.bandwidth.log10())
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn to_db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

/// Total client power: PA, one circuit share per active chain, and shared circuitry.
pub fn client_power(pattern: &BeamPattern, params: &RadioParams) -> f64 {
    client_power_mw(pattern.p_tx, pattern.n, params)
}

pub fn client_power_mw(p_tx: f64, n: u32, params: &RadioParams) -> f64 {
    (1.0 + params.alpha) * p_tx + n as f64 * params.p_circuit + params.p_shared
}

/// Shannon capacity, b/s/Hz.
pub fn capacity(sinr: f64) -> f64 {
    (1.0 + sinr).log2()
}

/// SINR needed for `capacity` b/s/Hz; inverse of [`capacity`].
pub fn sinr_for_capacity(capacity: f64) -> f64 {
    capacity.exp2() - 1.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn gain_peaks_at_size() {
        for n in 1..=8 {
            assert!((beam_gain(n, 0.0).unwrap() - n as f64).abs() <= 1e-12);
        }
        assert_eq!(beam_gain(4, 0.0).unwrap(), 4.0);
    }

    #[test]
    fn omni_gain_is_one_everywhere() {
        for k in 0..50 {
            let theta = -PI + k as f64 * 2.0 * PI / 49.0;
            assert_eq!(beam_gain(1, theta).unwrap(), 1.0);
        }
    }

    #[test]
    fn two_element_null_at_endfire() {
        // |1 + e^{i pi}|^2 / 2
        assert!(beam_gain(2, PI / 2.0).unwrap() < 1e-30);
    }

    #[test]
    fn rejects_zero_size() {
        assert!(beam_gain(0, 0.3).is_err());
        assert!(beam_gain_u(0, 0.3).is_err());
    }

    #[test]
    fn mirror_lobe_behind_array() {
        let front = beam_gain(4, 0.3).unwrap();
        let back = beam_gain(4, PI - 0.3).unwrap();
        assert_relative_eq!(front, back, max_relative = 1e-12);
        assert_relative_eq!(beam_gain(3, PI).unwrap(), 3.0, max_relative = 1e-12);
    }

    #[test]
    fn unit_mean_gain_in_u_space() {
        // Composite Simpson over u in [-1, 1]; the integrand is a trigonometric
        // polynomial so a few thousand panels are plenty.
        let panels = 4000;
        let h = 2.0 / panels as f64;
        for n in 1..=8 {
            let mut acc = 0.0;
            for k in 0..=panels {
                let u = -1.0 + k as f64 * h;
                let w = if k == 0 || k == panels {
                    1.0
                } else if k % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                acc += w * beam_gain_u(n, u).unwrap();
            }
            let mean = acc * h / 3.0 / 2.0;
            assert!((mean - 1.0).abs() < 1e-6, "n={n} mean={mean}");
        }
    }

    #[test]
    fn path_gain_values() {
        let p = RadioParams::default();
        assert_eq!(path_gain(1.0, &p).unwrap(), 1.0);
        assert_relative_eq!(path_gain(10.0, &p).unwrap(), 1e-4, max_relative = 1e-12);
        assert_relative_eq!(path_gain(500.0, &p).unwrap(), 1.6e-11, max_relative = 1e-12);
        assert!(path_gain(0.0, &p).is_err());
        assert!(path_gain(-3.0, &p).is_err());
        assert!(path_gain(f64::NAN, &p).is_err());
    }

    #[test]
    fn noise_values() {
        let mut p = RadioParams::default();
        // -170 dBm/Hz over 5 MHz is 1e-17 mW/Hz * 5e6 Hz.
        assert_relative_eq!(noise_power(&p), 5e-11, max_relative = 1e-12);
        p.bandwidth = 1.0;
        assert_relative_eq!(noise_power(&p), 1e-17, max_relative = 1e-12);
        p.noise_density = 0.0;
        assert_eq!(noise_power(&p), 1.0);
    }

    #[test]
    fn power_model_values() {
        let p = RadioParams::default();
        assert_relative_eq!(
            client_power(&BeamPattern::new(100.0, 2, 0.0), &p),
            433.9,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            client_power(&BeamPattern::new(50.0, 4, 0.0), &p),
            386.55,
            max_relative = 1e-12
        );
        let floor = client_power(&BeamPattern::new(1e-12, 1, 0.0), &p);
        assert!(floor > 98.2 && floor < 98.2 + 1e-9);
    }

    #[test]
    fn capacity_values() {
        assert_eq!(capacity(0.0), 0.0);
        assert_eq!(capacity(1.0), 1.0);
        assert!((capacity(11.13) - 3.6).abs() < 1e-3);
        assert_relative_eq!(sinr_for_capacity(capacity(11.13)), 11.13, max_relative = 1e-12);
    }

    #[test]
    fn default_params_validate() {
        RadioParams::default().validate().unwrap();
        let bad = RadioParams {
            decay: 1.5,
            ..RadioParams::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn wrap_angle_range() {
        assert_relative_eq!(wrap_angle(3.0 * PI / 2.0), -PI / 2.0, epsilon = 1e-12);
        assert_eq!(wrap_angle(0.5), 0.5);
        assert_relative_eq!(wrap_angle(-3.0 * PI), PI, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn gain_symmetric_about_look(n in 1u32..=8, off in 0.0..PI) {
            let a = beam_gain(n, off).unwrap();
            let b = beam_gain(n, -off).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }

        #[test]
        fn gain_bounded_by_size(n in 1u32..=8, off in -PI..PI) {
            let g = beam_gain(n, off).unwrap();
            prop_assert!(g >= 0.0 && g <= n as f64 + 1e-12);
        }

        #[test]
        fn doubling_size_at_most_doubles_sidelobes(n in prop::sample::select(vec![1u32, 2, 4]), off in -PI..PI) {
            let g = beam_gain(n, off).unwrap();
            let g2 = beam_gain(2 * n, off).unwrap();
            prop_assert!(g2 <= 2.0 * g + 1e-9);
        }

        #[test]
        fn client_power_increasing(p in 0.0..1000.0f64, dp in 1e-6..100.0f64, n in 1u32..8) {
            let params = RadioParams::default();
            let base = client_power_mw(p, n, &params);
            prop_assert!(client_power_mw(p + dp, n, &params) > base);
            prop_assert!(client_power_mw(p, n + 1, &params) > base);
        }

        #[test]
        fn capacity_increasing_concave(s in 0.0..1e4f64, ds in 1e-3..10.0f64) {
            let (a, b, c) = (capacity(s), capacity(s + ds), capacity(s + 2.0 * ds));
            prop_assert!(b > a);
            prop_assert!(b - a >= c - b);
        }
    }
}
